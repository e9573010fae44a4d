#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "risbin/env.hpp"
#include "risbin/rng.hpp"

namespace risbin {

/// Replay record. Observations are shared so that consecutive transitions
/// (next_obs of step t is obs of step t + 1) are stored once.
struct Transition {
  std::shared_ptr<const Observation> obs;
  Eigen::VectorXd action;  // binary bits for the DQN agents, raw actor output for bin-DDPG
  double reward = 0.0;
  std::shared_ptr<const Observation> next_obs;
};

/// Fixed-capacity ring; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return data_.empty(); }

  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;

  /// Uniform indices (into at()) drawn with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest entry once full
  std::vector<Transition> data_;
};

}  // namespace risbin
