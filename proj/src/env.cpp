#include "risbin/env.hpp"

#include <cmath>
#include <string>

#include "risbin/errors.hpp"

namespace risbin {

RisAction RisAction::complement() const {
  RisAction c = *this;
  for (auto& b : c.bits) b = static_cast<std::uint8_t>(1 - b);
  return c;
}

Eigen::VectorXd RisAction::as_vector() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v(i) = bits[static_cast<std::size_t>(i)];
  return v;
}

RisAction action_from_index(std::uint64_t index, int n_ctrl) {
  if (n_ctrl < 1 || n_ctrl > 63) throw ConfigError("action index decoding needs 1 <= n_ctrl <= 63");
  RisAction a = RisAction::zeros(n_ctrl);
  for (int i = 0; i < n_ctrl; ++i) {
    a.bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((index >> (n_ctrl - 1 - i)) & 1U);
  }
  return a;
}

std::uint64_t action_index(const RisAction& action) {
  if (action.size() > 63) throw ConfigError("action too long for an integer index");
  std::uint64_t idx = 0;
  for (auto b : action.bits) idx = (idx << 1) | (b & 1U);
  return idx;
}

ReflectionVector action_to_reflection(const RisAction& action, int n_group) {
  if (n_group < 1) throw ConfigError("n_group must be >= 1");
  ReflectionVector r;
  r.phi.resize(static_cast<Eigen::Index>(action.size()) * n_group);
  for (int i = 0; i < action.size(); ++i) {
    const std::uint8_t bit = action.bits[static_cast<std::size_t>(i)];
    if (bit > 1) throw ConfigError("action bits must be 0 or 1");
    r.phi.segment(static_cast<Eigen::Index>(i) * n_group, n_group).setConstant(bit ? -1.0 : 1.0);
  }
  return r;
}

Eigen::VectorXcd cascade(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& g) {
  if (H.rows() != g.size()) throw ConfigError("H rows must match the length of g");
  if (H.cols() < 1) throw ConfigError("H needs at least one column");
  const double v = 1.0 / static_cast<double>(H.cols());
  Eigen::VectorXcd c(g.size());
  for (Eigen::Index n = 0; n < H.rows(); ++n) {
    std::complex<double> hv = 0.0;
    for (Eigen::Index k = 0; k < H.cols(); ++k) hv += H(n, k) * v;
    c(n) = g(n) * hv;
  }
  return c;
}

double snr_from_cascade(const Eigen::VectorXcd& c, const ReflectionVector& phi, double snr_scale) {
  if (phi.phi.size() != c.size())
    throw ConfigError("reflection vector has " + std::to_string(phi.phi.size()) + " entries, channel has " +
                      std::to_string(c.size()));
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    re += phi.phi(n) * c(n).real();
    im += phi.phi(n) * c(n).imag();
  }
  return snr_scale * (re * re + im * im);
}

double compute_snr(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& g, const ReflectionVector& phi,
                   double tx_power, double noise_power, int K) {
  if (H.cols() != K) throw ConfigError("H must have K columns");
  if (!(tx_power > 0.0) || !(noise_power > 0.0)) throw DomainError("powers must be positive");
  return snr_from_cascade(cascade(H, g), phi, tx_power / noise_power);
}

double rate(double snr) {
  if (!(snr >= 0.0)) throw DomainError("SNR must be non-negative");
  return std::log2(1.0 + snr);
}

ObservationScale ObservationScale::for_model(const ChannelModel& model) {
  auto pow2 = [](double gain) { return std::ldexp(1.0, static_cast<int>(std::lround(-std::log2(gain)))); };
  return {pow2(model.bs_ris_gain()), pow2(model.ris_ue_gain())};
}

Observation make_observation(const ChannelRealization& ch, const ObservationScale& scale) {
  const Eigen::Index n = ch.H.rows();
  const Eigen::Index k = ch.H.cols();
  if (ch.g.size() != n) throw ConfigError("g length must equal the number of H rows");
  const Eigen::Index half = n * k + n;
  Observation obs(2 * half);
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < k; ++c) obs(i++) = ch.H(r, c).real() * scale.h;
  for (Eigen::Index r = 0; r < n; ++r) obs(i++) = ch.g(r).real() * scale.g;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < k; ++c) obs(i++) = ch.H(r, c).imag() * scale.h;
  for (Eigen::Index r = 0; r < n; ++r) obs(i++) = ch.g(r).imag() * scale.g;
  return obs;
}

ChannelRealization observation_to_channels(const Observation& obs, int N, int K, const ObservationScale& scale) {
  if (obs.size() != observation_dim(N, K)) throw ConfigError("observation length does not match N and K");
  ChannelRealization ch;
  ch.H.resize(N, K);
  ch.g.resize(N);
  const Eigen::Index half = static_cast<Eigen::Index>(N) * K + N;
  Eigen::Index i = 0;
  for (int r = 0; r < N; ++r) {
    for (int c = 0; c < K; ++c, ++i) ch.H(r, c) = {obs(i) / scale.h, obs(i + half) / scale.h};
  }
  for (int r = 0; r < N; ++r, ++i) ch.g(r) = {obs(i) / scale.g, obs(i + half) / scale.g};
  return ch;
}

void EnvConfig::validate() const {
  geometry.validate();
  channel.validate();
  if (n_group < 1) throw ConfigError("n_group must be >= 1");
  if (geometry.ris_elements % n_group != 0)
    throw ConfigError("N = " + std::to_string(geometry.ris_elements) + " is not divisible by n_group = " +
                      std::to_string(n_group));
}

StepResult env_step(ChannelRealization& current, const RisAction& action, const ChannelModel& model,
                    const EnvConfig& config, const ObservationScale& scale, Rng& rng) {
  if (action.size() != config.n_ctrl())
    throw ConfigError("action has " + std::to_string(action.size()) + " bits, expected " +
                      std::to_string(config.n_ctrl()));
  StepResult result;
  const ReflectionVector phi = action_to_reflection(action, config.n_group);
  result.snr = compute_snr(current.H, current.g, phi, config.channel.tx_power, config.channel.noise_power,
                           config.geometry.bs_antennas);
  result.reward = rate(result.snr);
  current = model.sample(rng);
  result.next_observation = make_observation(current, scale);
  return result;
}

RisEnvironment::RisEnvironment(EnvConfig config, Rng rng)
    : config_((config.validate(), std::move(config))),
      model_(config_.geometry, config_.channel),
      scale_(config_.normalize_observation ? ObservationScale::for_model(model_) : ObservationScale{}),
      rng_(rng) {}

const Observation& RisEnvironment::reset() {
  current_ = model_.sample(rng_);
  obs_ = make_observation(current_, scale_);
  return obs_;
}

StepResult RisEnvironment::step(const RisAction& action) {
  if (current_.H.size() == 0) throw UsageError("step() before reset()");
  StepResult r = env_step(current_, action, model_, config_, scale_, rng_);
  obs_ = r.next_observation;
  return r;
}

double RisEnvironment::evaluate(const RisAction& action) const {
  if (action.size() != config_.n_ctrl()) throw ConfigError("action length does not match n_ctrl");
  return rate(compute_snr(current_.H, current_.g, action_to_reflection(action, config_.n_group),
                          config_.channel.tx_power, config_.channel.noise_power, config_.geometry.bs_antennas));
}

}  // namespace risbin
