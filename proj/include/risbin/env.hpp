#pragma once

// The RIS configuration MDP: observations from channel state, binary actions
// to two-phase reflection vectors, achievable rate as reward.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "risbin/channel.hpp"
#include "risbin/rng.hpp"

namespace risbin {

/// One control bit per group of `n_group` consecutive elements.
struct RisAction {
  std::vector<std::uint8_t> bits;

  RisAction() = default;
  explicit RisAction(std::vector<std::uint8_t> b) : bits(std::move(b)) {}
  static RisAction zeros(int n) { return RisAction(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)); }

  int size() const { return static_cast<int>(bits.size()); }
  RisAction complement() const;
  Eigen::VectorXd as_vector() const;
  bool operator==(const RisAction&) const = default;
};

/// Configuration index <-> action, most significant bit first: index 2 with
/// two controls is binary "10", i.e. action [1, 0].
RisAction action_from_index(std::uint64_t index, int n_ctrl);
std::uint64_t action_index(const RisAction& action);

/// Per-element reflection coefficients, each +1 (phase 0) or -1 (phase pi).
struct ReflectionVector {
  Eigen::VectorXd phi;
  int size() const { return static_cast<int>(phi.size()); }
};

ReflectionVector action_to_reflection(const RisAction& action, int n_group);

/// c_n = g_n (H v)_n with v = (1/K) ones(K); the received amplitude is
/// sum_n phi_n c_n.
Eigen::VectorXcd cascade(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& g);

/// (P / sigma^2) |sum_n phi_n c_n|^2, summed in element order. Every SNR in
/// the library goes through this function so equal inputs give equal bits.
double snr_from_cascade(const Eigen::VectorXcd& c, const ReflectionVector& phi, double snr_scale);

/// (P / sigma^2) |g diag(phi) H v|^2 with v = (1/K) ones(K).
double compute_snr(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& g, const ReflectionVector& phi,
                   double tx_power, double noise_power, int K);

/// log2(1 + snr), bits/s/Hz.
double rate(double snr);

using Observation = Eigen::VectorXd;

/// Power-of-two factors applied to H and g entries in the observation. Exact
/// in both directions, so observations round-trip bit for bit.
struct ObservationScale {
  double h = 1.0;
  double g = 1.0;

  /// Scales that bring each link's entries to order one.
  static ObservationScale for_model(const ChannelModel& model);
};

/// [Re vec(H), Re g, Im vec(H), Im g], vec() row by row; length 2 N (K + 1).
Observation make_observation(const ChannelRealization& ch, const ObservationScale& scale = {});
ChannelRealization observation_to_channels(const Observation& obs, int N, int K,
                                           const ObservationScale& scale = {});
inline int observation_dim(int N, int K) { return 2 * N * (K + 1); }

struct EnvConfig {
  Geometry geometry;
  ChannelParams channel;
  int n_group = 1;
  bool normalize_observation = true;

  void validate() const;
  int n_ctrl() const { return geometry.ris_elements / n_group; }
  int obs_dim() const { return observation_dim(geometry.ris_elements, geometry.bs_antennas); }
};

struct StepResult {
  double reward = 0.0;
  Observation next_observation;
  double snr = 0.0;
};

/// Reward on `current` with `action`, then replaces `current` with a fresh
/// IID draw whose observation is returned.
StepResult env_step(ChannelRealization& current, const RisAction& action, const ChannelModel& model,
                    const EnvConfig& config, const ObservationScale& scale, Rng& rng);

class RisEnvironment {
 public:
  RisEnvironment(EnvConfig config, Rng rng);

  /// Draws the first realization and returns its observation.
  const Observation& reset();
  StepResult step(const RisAction& action);

  const ChannelRealization& current() const { return current_; }
  const Observation& observation() const { return obs_; }
  const EnvConfig& config() const { return config_; }
  const ChannelModel& model() const { return model_; }
  const ObservationScale& scale() const { return scale_; }
  int n_ctrl() const { return config_.n_ctrl(); }
  int obs_dim() const { return config_.obs_dim(); }

  /// Reward of `action` on the current realization without advancing.
  double evaluate(const RisAction& action) const;

 private:
  EnvConfig config_;
  ChannelModel model_;
  ObservationScale scale_;
  Rng rng_;
  ChannelRealization current_;
  Observation obs_;
};

}  // namespace risbin
