#pragma once

// Learning agents over binary RIS configurations.
//
//   BinDqnAgent     Q(s, a) = q0(s) + a^T q(s); greedy bit i = [q(s)_i > 0].
//   BinDdpgAgent    actor with tanh output; executed bit i = [raw_i > 0].
//   VanillaDqnAgent one output per configuration, 2^n_ctrl outputs.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "risbin/approximator.hpp"
#include "risbin/checkpoint.hpp"
#include "risbin/env.hpp"
#include "risbin/replay.hpp"
#include "risbin/rng.hpp"

namespace risbin {

/// Default DQN / bin-DQN trunk: 2 x (conv 64@5, maxpool 5, relu), then
/// 5 x (dense 100, relu, dropout 0.2).
std::vector<nn::LayerSpec> default_dqn_trunk();
/// Default bin-DDPG trunk: 3 x (dense 400, relu, dropout 0.2).
std::vector<nn::LayerSpec> default_ddpg_trunk();

struct TrainStats {
  double loss = 0.0;             // TD loss (critic loss for bin-DDPG)
  double actor_objective = 0.0;  // bin-DDPG only: mean critic value at the actor output
};

/// What the agent executes and what it stores in replay.
struct Decision {
  RisAction action;
  Eigen::VectorXd replay_action;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string_view name() const = 0;
  virtual int n_ctrl() const = 0;
  virtual std::size_t replay_capacity() const = 0;

  /// Exploratory action used while training.
  virtual Decision act(const Observation& obs, Rng& rng) = 0;
  /// Deterministic greedy action; never changes the agent.
  virtual RisAction greedy(const Observation& obs) const = 0;
  /// One optimizer step from replay. nullopt while the buffer holds fewer
  /// transitions than a batch.
  virtual std::optional<TrainStats> train_step(const ReplayBuffer& buffer, Rng& rng) = 0;
  /// Fraction of the training budget consumed, for annealed schedules.
  virtual void set_progress(double /*fraction*/) {}

  /// Hash over every parameter the agent owns (online, target, optimizer).
  virtual std::uint64_t parameter_checksum() const = 0;
  virtual Checkpoint checkpoint() const = 0;
  virtual void restore(const Checkpoint& ckpt) = 0;
};

// ---------------------------------------------------------------------------
// bin-DQN

struct BinDqnConfig {
  int obs_dim = 0;
  int n_ctrl = 0;
  std::vector<nn::LayerSpec> trunk = default_dqn_trunk();
  nn::OptimizerConfig optimizer{nn::OptimizerKind::sgd, 0.01, std::pair{-1.0, 1.0}};
  int batch_size = 128;
  double epsilon = 0.1;
  int target_period = 2000;
  double tau = 0.05;
  double discount = 0.9;
  std::size_t replay_capacity = 10000;
  bool dropout_when_acting = false;  // exploratory act() samples a dropout mask

  void validate() const;
};

/// Pure decomposition arithmetic, shared by the agent and its tests.
namespace binq {

/// q0 + sum_i a_i q_i, accumulated in index order.
double q_value(double q0, const Eigen::VectorXd& q, const RisAction& a);
/// Bit i = 1 iff values_i > 0 (zero maps to 0).
RisAction threshold(const Eigen::VectorXd& values);
/// q0 + sum_i max(q_i, 0), the maximum of q_value over all actions.
double max_q(double q0, const Eigen::VectorXd& q);

}  // namespace binq

class BinDqnAgent final : public Agent {
 public:
  struct Heads {
    double q0 = 0.0;
    Eigen::VectorXd q;
  };

  BinDqnAgent(BinDqnConfig config, Rng& init_rng);

  static nn::NetworkSpec make_spec(const BinDqnConfig& config);

  std::string_view name() const override { return "bin-dqn"; }
  int n_ctrl() const override { return config_.n_ctrl; }
  std::size_t replay_capacity() const override { return config_.replay_capacity; }

  Decision act(const Observation& obs, Rng& rng) override;
  RisAction greedy(const Observation& obs) const override;
  std::optional<TrainStats> train_step(const ReplayBuffer& buffer, Rng& rng) override;

  /// Online network heads in eval mode.
  Heads heads(const Observation& obs) const;
  Heads target_heads(const Observation& obs) const;
  double q_value(const Observation& obs, const RisAction& action) const;
  /// max over actions of the target network's Q at obs.
  double max_q_target(const Observation& obs) const;

  const BinDqnConfig& config() const { return config_; }
  const nn::NetworkSpec& spec() const { return spec_; }
  nn::NetworkParams& online() { return online_; }
  const nn::NetworkParams& online() const { return online_; }
  nn::NetworkParams& target() { return target_; }
  const nn::NetworkParams& target() const { return target_; }
  std::int64_t updates() const { return updates_; }

  std::uint64_t parameter_checksum() const override;
  Checkpoint checkpoint() const override;
  void restore(const Checkpoint& ckpt) override;

 private:
  Heads heads_with(const nn::ParamSet& params, const Observation& obs) const;

  BinDqnConfig config_;
  nn::NetworkSpec spec_;
  nn::NetworkParams online_;
  nn::NetworkParams target_;
  nn::Optimizer optimizer_;
  std::int64_t updates_ = 0;
};

// ---------------------------------------------------------------------------
// vanilla DQN

struct DqnConfig {
  int obs_dim = 0;
  int n_ctrl = 0;
  int max_ctrl = 22;  // refuse more than 2^22 output neurons
  std::vector<nn::LayerSpec> trunk = default_dqn_trunk();
  nn::OptimizerConfig optimizer{nn::OptimizerKind::sgd, 0.001, std::pair{-1.0, 1.0}};
  int batch_size = 128;
  double epsilon = 0.1;
  int target_period = 1000;
  double tau = 0.18;
  double discount = 0.9;
  std::size_t replay_capacity = 10000;
  bool dropout_when_acting = false;

  void validate() const;
};

class VanillaDqnAgent final : public Agent {
 public:
  /// Throws RefusalError when n_ctrl exceeds max_ctrl.
  VanillaDqnAgent(DqnConfig config, Rng& init_rng);

  static nn::NetworkSpec make_spec(const DqnConfig& config);
  /// Binary expansion of the first maximal output.
  static RisAction decode_argmax(const Eigen::VectorXd& outputs, int n_ctrl);

  std::string_view name() const override { return "dqn"; }
  int n_ctrl() const override { return config_.n_ctrl; }
  std::size_t replay_capacity() const override { return config_.replay_capacity; }

  Decision act(const Observation& obs, Rng& rng) override;
  RisAction greedy(const Observation& obs) const override;
  std::optional<TrainStats> train_step(const ReplayBuffer& buffer, Rng& rng) override;

  Eigen::VectorXd q_values(const Observation& obs) const;

  const DqnConfig& config() const { return config_; }
  const nn::NetworkSpec& spec() const { return spec_; }
  nn::NetworkParams& online() { return online_; }
  const nn::NetworkParams& target() const { return target_; }

  std::uint64_t parameter_checksum() const override;
  Checkpoint checkpoint() const override;
  void restore(const Checkpoint& ckpt) override;

 private:
  DqnConfig config_;
  nn::NetworkSpec spec_;
  nn::NetworkParams online_;
  nn::NetworkParams target_;
  nn::Optimizer optimizer_;
  std::int64_t updates_ = 0;
};

// ---------------------------------------------------------------------------
// bin-DDPG

/// x' = x + theta (mu - x) + sigma * N(0, 1), per component, unit time step.
Eigen::VectorXd ou_step(const Eigen::VectorXd& x, double mu, double theta, double sigma, Rng& rng);

class OuNoise {
 public:
  OuNoise(int dim, double mu, double theta, double sigma);
  const Eigen::VectorXd& step(Rng& rng);
  void reset();
  void set_sigma(double sigma) { sigma_ = sigma; }
  double sigma() const { return sigma_; }
  const Eigen::VectorXd& value() const { return x_; }

 private:
  double mu_;
  double theta_;
  double sigma_;
  Eigen::VectorXd x_;
};

struct BinDdpgConfig {
  int obs_dim = 0;
  int n_ctrl = 0;
  std::vector<nn::LayerSpec> actor_trunk = default_ddpg_trunk();
  std::vector<nn::LayerSpec> critic_trunk = default_ddpg_trunk();
  nn::OptimizerConfig actor_optimizer{nn::OptimizerKind::adam, 1e-4, std::nullopt};
  nn::OptimizerConfig critic_optimizer{nn::OptimizerKind::adam, 1e-3, std::nullopt};
  int batch_size = 64;
  int target_period = 1;
  double tau = 1e-5;
  double discount = 0.9;
  double ou_mu = 0.0;
  double ou_theta = 0.15;
  double ou_sigma_start = 0.2;
  double ou_sigma_end = 0.05;
  std::size_t replay_capacity = 100000;
  bool dropout_when_acting = false;

  void validate() const;
};

class BinDdpgAgent final : public Agent {
 public:
  BinDdpgAgent(BinDdpgConfig config, Rng& init_rng);

  static nn::NetworkSpec make_actor_spec(const BinDdpgConfig& config);
  static nn::NetworkSpec make_critic_spec(const BinDdpgConfig& config);

  std::string_view name() const override { return "bin-ddpg"; }
  int n_ctrl() const override { return config_.n_ctrl; }
  std::size_t replay_capacity() const override { return config_.replay_capacity; }

  Decision act(const Observation& obs, Rng& rng) override;
  /// Actor output plus (when `explore`) OU noise, and its thresholded image.
  Decision act(const Observation& obs, bool explore, Rng& rng);
  RisAction greedy(const Observation& obs) const override;
  std::optional<TrainStats> train_step(const ReplayBuffer& buffer, Rng& rng) override;
  void set_progress(double fraction) override;

  Eigen::VectorXd actor_output(const Observation& obs) const;
  double critic_value(const Observation& obs, const Eigen::VectorXd& action) const;

  const BinDdpgConfig& config() const { return config_; }
  const nn::NetworkSpec& actor_spec() const { return actor_spec_; }
  const nn::NetworkSpec& critic_spec() const { return critic_spec_; }
  nn::NetworkParams& actor() { return actor_; }
  nn::NetworkParams& critic() { return critic_; }
  const nn::NetworkParams& actor_target() const { return actor_target_; }
  const nn::NetworkParams& critic_target() const { return critic_target_; }
  const OuNoise& noise() const { return noise_; }

  std::uint64_t parameter_checksum() const override;
  Checkpoint checkpoint() const override;
  void restore(const Checkpoint& ckpt) override;

 private:
  BinDdpgConfig config_;
  nn::NetworkSpec actor_spec_;
  nn::NetworkSpec critic_spec_;
  nn::NetworkParams actor_;
  nn::NetworkParams critic_;
  nn::NetworkParams actor_target_;
  nn::NetworkParams critic_target_;
  nn::Optimizer actor_opt_;
  nn::Optimizer critic_opt_;
  OuNoise noise_;
  std::int64_t updates_ = 0;
};

}  // namespace risbin
