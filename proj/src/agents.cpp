#include "risbin/agents.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "risbin/errors.hpp"

namespace risbin {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<nn::LayerSpec> default_dqn_trunk() { return nn::conv_trunk(2, 64, 5, 5, 5, 100, 0.2); }

std::vector<nn::LayerSpec> default_ddpg_trunk() { return nn::dense_trunk(3, 400, 0.2); }

namespace {

struct Batch {
  MatrixXd obs;       // obs_dim x B
  MatrixXd next_obs;  // obs_dim x B
  MatrixXd actions;   // action_dim x B
  VectorXd rewards;   // B
};

Batch gather(const std::vector<const Transition*>& ts, int obs_dim, int action_dim) {
  const auto b = static_cast<Eigen::Index>(ts.size());
  Batch out{MatrixXd(obs_dim, b), MatrixXd(obs_dim, b), MatrixXd(action_dim, b), VectorXd(b)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const Transition& t = *ts[static_cast<std::size_t>(i)];
    if (t.obs->size() != obs_dim || t.next_obs->size() != obs_dim || t.action.size() != action_dim)
      throw ConfigError("replay transition shape does not match the agent");
    out.obs.col(i) = *t.obs;
    out.next_obs.col(i) = *t.next_obs;
    out.actions.col(i) = t.action;
    out.rewards(i) = t.reward;
  }
  return out;
}

void check_loss(double loss, std::string_view agent) {
  if (!std::isfinite(loss)) throw NumericError(std::string(agent) + ": non-finite training loss");
}

RisAction random_bits(int n, Rng& rng) {
  RisAction a = RisAction::zeros(n);
  for (auto& b : a.bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return a;
}

void check_common(int obs_dim, int n_ctrl, int batch_size, double epsilon, double tau, double discount,
                  int target_period, std::size_t capacity) {
  if (obs_dim < 1) throw ConfigError("obs_dim must be positive");
  if (n_ctrl < 1) throw ConfigError("n_ctrl must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
  if (target_period < 1) throw ConfigError("target update period must be positive");
  if (capacity < 1) throw ConfigError("replay capacity must be positive");
}

std::uint64_t combine(std::uint64_t h, std::uint64_t x) { return (h ^ x) * 0x100000001b3ULL + 0x9E3779B97F4A7C15ULL; }

std::uint64_t optimizer_checksum(const nn::Optimizer& o) {
  return combine(o.first_moment().checksum(), o.second_moment().checksum()) ^ static_cast<std::uint64_t>(o.steps());
}

const NetworkState& expect(const Checkpoint& ckpt, const std::string& name, const nn::NetworkSpec& spec) {
  const NetworkState& n = ckpt.network(name);
  if (!(n.spec == spec)) throw ConfigError("checkpoint network '" + name + "' does not match this agent");
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// decomposition arithmetic

namespace binq {

double q_value(double q0, const VectorXd& q, const RisAction& a) {
  if (a.size() != q.size()) throw ConfigError("action length does not match the q head");
  double v = q0;
  for (Eigen::Index i = 0; i < q.size(); ++i) v += a.bits[static_cast<std::size_t>(i)] * q(i);
  return v;
}

RisAction threshold(const VectorXd& values) {
  RisAction a = RisAction::zeros(static_cast<int>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) a.bits[static_cast<std::size_t>(i)] = values(i) > 0.0 ? 1 : 0;
  return a;
}

double max_q(double q0, const VectorXd& q) {
  double v = q0;
  for (Eigen::Index i = 0; i < q.size(); ++i) v += q(i) > 0.0 ? q(i) : 0.0;
  return v;
}

}  // namespace binq

// ---------------------------------------------------------------------------
// bin-DQN

void BinDqnConfig::validate() const {
  check_common(obs_dim, n_ctrl, batch_size, epsilon, tau, discount, target_period, replay_capacity);
}

nn::NetworkSpec BinDqnAgent::make_spec(const BinDqnConfig& config) {
  nn::NetworkSpec spec{config.obs_dim, config.trunk, {{"q0", 1, nn::Activation::linear}, {"q", config.n_ctrl, nn::Activation::linear}}};
  spec.validate();
  return spec;
}

BinDqnAgent::BinDqnAgent(BinDqnConfig config, Rng& init_rng)
    : config_((config.validate(), std::move(config))),
      spec_(make_spec(config_)),
      online_(nn::init_params(spec_, init_rng)),
      target_(online_),
      optimizer_(config_.optimizer) {
  target_.mode = nn::Mode::eval;
}

BinDqnAgent::Heads BinDqnAgent::heads_with(const nn::ParamSet& params, const Observation& obs) const {
  const MatrixXd in = obs;
  auto out = nn::forward(params, nn::Mode::eval, spec_, in);
  return {out[0](0, 0), out[1].col(0)};
}

BinDqnAgent::Heads BinDqnAgent::heads(const Observation& obs) const { return heads_with(online_.values, obs); }

BinDqnAgent::Heads BinDqnAgent::target_heads(const Observation& obs) const {
  return heads_with(target_.values, obs);
}

double BinDqnAgent::q_value(const Observation& obs, const RisAction& action) const {
  const Heads h = heads(obs);
  return binq::q_value(h.q0, h.q, action);
}

double BinDqnAgent::max_q_target(const Observation& obs) const {
  const Heads h = target_heads(obs);
  return binq::max_q(h.q0, h.q);
}

RisAction BinDqnAgent::greedy(const Observation& obs) const { return binq::threshold(heads(obs).q); }

Decision BinDqnAgent::act(const Observation& obs, Rng& rng) {
  RisAction a;
  if (rng.bernoulli(config_.epsilon)) {
    a = random_bits(config_.n_ctrl, rng);
  } else if (config_.dropout_when_acting) {
    const MatrixXd in = obs;
    auto out = nn::forward(online_.values, nn::Mode::train, spec_, in, &rng);
    a = binq::threshold(out[1].col(0));
  } else {
    a = greedy(obs);
  }
  VectorXd stored = a.as_vector();
  return {std::move(a), std::move(stored)};
}

std::optional<TrainStats> BinDqnAgent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  const auto b = static_cast<std::size_t>(config_.batch_size);
  if (buffer.size() < b) return std::nullopt;
  const Batch batch = gather(buffer.sample(b, rng), config_.obs_dim, config_.n_ctrl);
  const auto nb = static_cast<Eigen::Index>(b);

  const auto next = nn::forward(target_.values, nn::Mode::eval, spec_, batch.next_obs);
  VectorXd y(nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    y(i) = batch.rewards(i) + config_.discount * binq::max_q(next[0](0, i), next[1].col(i));
  }

  nn::Tape tape;
  const auto cur = nn::forward(online_.values, online_.mode, spec_, batch.obs, &rng, &tape);
  MatrixXd dq0(1, nb);
  MatrixXd dq(config_.n_ctrl, nb);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < nb; ++i) {
    double q = cur[0](0, i);
    for (int j = 0; j < config_.n_ctrl; ++j) q += batch.actions(j, i) * cur[1](j, i);
    const double err = q - y(i);
    loss += 0.5 * err * err;
    dq0(0, i) = err / static_cast<double>(nb);
    dq.col(i) = batch.actions.col(i) * (err / static_cast<double>(nb));
  }
  loss /= static_cast<double>(nb);
  check_loss(loss, name());

  const nn::Gradients grads = nn::backward(online_.values, spec_, tape, {dq0, dq}, false);
  optimizer_.apply(online_.values, grads.params);
  ++updates_;
  if (updates_ % config_.target_period == 0) nn::soft_update(target_.values, online_.values, config_.tau);
  return TrainStats{loss, 0.0};
}

std::uint64_t BinDqnAgent::parameter_checksum() const {
  return combine(combine(online_.values.checksum(), target_.values.checksum()), optimizer_checksum(optimizer_));
}

Checkpoint BinDqnAgent::checkpoint() const {
  Checkpoint c;
  c.agent = std::string(name());
  c.step = updates_;
  c.networks.push_back({"online", spec_, online_, snapshot(optimizer_)});
  c.networks.push_back({"target", spec_, target_, std::nullopt});
  return c;
}

void BinDqnAgent::restore(const Checkpoint& ckpt) {
  if (ckpt.agent != name()) throw ConfigError("checkpoint is for agent '" + ckpt.agent + "'");
  const auto& on = expect(ckpt, "online", spec_);
  const auto& tg = expect(ckpt, "target", spec_);
  if (!on.optimizer) throw ConfigError("checkpoint lacks optimizer state");
  online_ = on.params;
  target_ = tg.params;
  optimizer_ = restore_optimizer(*on.optimizer);
  updates_ = ckpt.step;
}

// ---------------------------------------------------------------------------
// vanilla DQN

void DqnConfig::validate() const {
  check_common(obs_dim, n_ctrl, batch_size, epsilon, tau, discount, target_period, replay_capacity);
  if (max_ctrl < 1 || max_ctrl > 30) throw ConfigError("max_ctrl must lie in [1, 30]");
  if (n_ctrl > max_ctrl)
    throw RefusalError("vanilla DQN needs 2^" + std::to_string(n_ctrl) + " output neurons; the cap is 2^" +
                       std::to_string(max_ctrl));
}

nn::NetworkSpec VanillaDqnAgent::make_spec(const DqnConfig& config) {
  config.validate();
  nn::NetworkSpec spec{config.obs_dim, config.trunk, {{"q", 1 << config.n_ctrl, nn::Activation::linear}}};
  spec.validate();
  return spec;
}

VanillaDqnAgent::VanillaDqnAgent(DqnConfig config, Rng& init_rng)
    : config_(std::move(config)),
      spec_(make_spec(config_)),
      online_(nn::init_params(spec_, init_rng)),
      target_(online_),
      optimizer_(config_.optimizer) {
  target_.mode = nn::Mode::eval;
}

RisAction VanillaDqnAgent::decode_argmax(const VectorXd& outputs, int n_ctrl) {
  if (outputs.size() != (Eigen::Index{1} << n_ctrl)) throw ConfigError("output count must be 2^n_ctrl");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < outputs.size(); ++i) {
    if (outputs(i) > outputs(best)) best = i;
  }
  return action_from_index(static_cast<std::uint64_t>(best), n_ctrl);
}

VectorXd VanillaDqnAgent::q_values(const Observation& obs) const {
  const MatrixXd in = obs;
  return nn::forward(online_.values, nn::Mode::eval, spec_, in)[0].col(0);
}

RisAction VanillaDqnAgent::greedy(const Observation& obs) const { return decode_argmax(q_values(obs), config_.n_ctrl); }

Decision VanillaDqnAgent::act(const Observation& obs, Rng& rng) {
  RisAction a;
  if (rng.bernoulli(config_.epsilon)) {
    a = action_from_index(rng.below(std::uint64_t{1} << config_.n_ctrl), config_.n_ctrl);
  } else if (config_.dropout_when_acting) {
    const MatrixXd in = obs;
    a = decode_argmax(nn::forward(online_.values, nn::Mode::train, spec_, in, &rng)[0].col(0), config_.n_ctrl);
  } else {
    a = greedy(obs);
  }
  VectorXd stored = a.as_vector();
  return {std::move(a), std::move(stored)};
}

std::optional<TrainStats> VanillaDqnAgent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  const auto b = static_cast<std::size_t>(config_.batch_size);
  if (buffer.size() < b) return std::nullopt;
  const Batch batch = gather(buffer.sample(b, rng), config_.obs_dim, config_.n_ctrl);
  const auto nb = static_cast<Eigen::Index>(b);

  const MatrixXd next = nn::forward(target_.values, nn::Mode::eval, spec_, batch.next_obs)[0];
  nn::Tape tape;
  const MatrixXd cur = nn::forward(online_.values, online_.mode, spec_, batch.obs, &rng, &tape)[0];

  MatrixXd grad = MatrixXd::Zero(cur.rows(), nb);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < nb; ++i) {
    std::uint64_t idx = 0;
    for (int j = 0; j < config_.n_ctrl; ++j) idx = (idx << 1) | (batch.actions(j, i) > 0.5 ? 1U : 0U);
    const double y = batch.rewards(i) + config_.discount * next.col(i).maxCoeff();
    const double err = cur(static_cast<Eigen::Index>(idx), i) - y;
    loss += 0.5 * err * err;
    grad(static_cast<Eigen::Index>(idx), i) = err / static_cast<double>(nb);
  }
  loss /= static_cast<double>(nb);
  check_loss(loss, name());

  const nn::Gradients grads = nn::backward(online_.values, spec_, tape, {grad}, false);
  optimizer_.apply(online_.values, grads.params);
  ++updates_;
  if (updates_ % config_.target_period == 0) nn::soft_update(target_.values, online_.values, config_.tau);
  return TrainStats{loss, 0.0};
}

std::uint64_t VanillaDqnAgent::parameter_checksum() const {
  return combine(combine(online_.values.checksum(), target_.values.checksum()), optimizer_checksum(optimizer_));
}

Checkpoint VanillaDqnAgent::checkpoint() const {
  Checkpoint c;
  c.agent = std::string(name());
  c.step = updates_;
  c.networks.push_back({"online", spec_, online_, snapshot(optimizer_)});
  c.networks.push_back({"target", spec_, target_, std::nullopt});
  return c;
}

void VanillaDqnAgent::restore(const Checkpoint& ckpt) {
  if (ckpt.agent != name()) throw ConfigError("checkpoint is for agent '" + ckpt.agent + "'");
  const auto& on = expect(ckpt, "online", spec_);
  const auto& tg = expect(ckpt, "target", spec_);
  if (!on.optimizer) throw ConfigError("checkpoint lacks optimizer state");
  online_ = on.params;
  target_ = tg.params;
  optimizer_ = restore_optimizer(*on.optimizer);
  updates_ = ckpt.step;
}

// ---------------------------------------------------------------------------
// OU noise

VectorXd ou_step(const VectorXd& x, double mu, double theta, double sigma, Rng& rng) {
  if (!(theta >= 0.0) || !(sigma >= 0.0)) throw DomainError("OU theta and sigma must be non-negative");
  VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = x(i) + theta * (mu - x(i)) + sigma * rng.normal();
  return out;
}

OuNoise::OuNoise(int dim, double mu, double theta, double sigma)
    : mu_(mu), theta_(theta), sigma_(sigma), x_(VectorXd::Constant(dim, mu)) {}

const VectorXd& OuNoise::step(Rng& rng) {
  x_ = ou_step(x_, mu_, theta_, sigma_, rng);
  return x_;
}

void OuNoise::reset() { x_.setConstant(mu_); }

// ---------------------------------------------------------------------------
// bin-DDPG

void BinDdpgConfig::validate() const {
  check_common(obs_dim, n_ctrl, batch_size, 0.0, tau, discount, target_period, replay_capacity);
  if (!(ou_theta >= 0.0) || !(ou_sigma_start >= 0.0) || !(ou_sigma_end >= 0.0))
    throw ConfigError("OU parameters must be non-negative");
}

nn::NetworkSpec BinDdpgAgent::make_actor_spec(const BinDdpgConfig& config) {
  nn::NetworkSpec spec{config.obs_dim, config.actor_trunk, {{"action", config.n_ctrl, nn::Activation::tanh}}};
  spec.validate();
  return spec;
}

nn::NetworkSpec BinDdpgAgent::make_critic_spec(const BinDdpgConfig& config) {
  nn::NetworkSpec spec{config.obs_dim + config.n_ctrl, config.critic_trunk, {{"value", 1, nn::Activation::linear}}};
  spec.validate();
  return spec;
}

BinDdpgAgent::BinDdpgAgent(BinDdpgConfig config, Rng& init_rng)
    : config_((config.validate(), std::move(config))),
      actor_spec_(make_actor_spec(config_)),
      critic_spec_(make_critic_spec(config_)),
      actor_(nn::init_params(actor_spec_, init_rng)),
      critic_(nn::init_params(critic_spec_, init_rng)),
      actor_target_(actor_),
      critic_target_(critic_),
      actor_opt_(config_.actor_optimizer),
      critic_opt_(config_.critic_optimizer),
      noise_(config_.n_ctrl, config_.ou_mu, config_.ou_theta, config_.ou_sigma_start) {
  actor_target_.mode = nn::Mode::eval;
  critic_target_.mode = nn::Mode::eval;
}

VectorXd BinDdpgAgent::actor_output(const Observation& obs) const {
  const MatrixXd in = obs;
  return nn::forward(actor_.values, nn::Mode::eval, actor_spec_, in)[0].col(0);
}

double BinDdpgAgent::critic_value(const Observation& obs, const VectorXd& action) const {
  MatrixXd in(critic_spec_.input_dim, 1);
  in << obs, action;
  return nn::forward(critic_.values, nn::Mode::eval, critic_spec_, in)[0](0, 0);
}

RisAction BinDdpgAgent::greedy(const Observation& obs) const { return binq::threshold(actor_output(obs)); }

Decision BinDdpgAgent::act(const Observation& obs, Rng& rng) { return act(obs, true, rng); }

Decision BinDdpgAgent::act(const Observation& obs, bool explore, Rng& rng) {
  VectorXd raw;
  if (explore && config_.dropout_when_acting) {
    const MatrixXd in = obs;
    raw = nn::forward(actor_.values, nn::Mode::train, actor_spec_, in, &rng)[0].col(0);
  } else {
    raw = actor_output(obs);
  }
  if (explore) raw += noise_.step(rng);
  RisAction a = binq::threshold(raw);
  return {std::move(a), std::move(raw)};
}

void BinDdpgAgent::set_progress(double fraction) {
  const double f = std::clamp(fraction, 0.0, 1.0);
  noise_.set_sigma(config_.ou_sigma_start + (config_.ou_sigma_end - config_.ou_sigma_start) * f);
}

std::optional<TrainStats> BinDdpgAgent::train_step(const ReplayBuffer& buffer, Rng& rng) {
  const auto b = static_cast<std::size_t>(config_.batch_size);
  if (buffer.size() < b) return std::nullopt;
  const Batch batch = gather(buffer.sample(b, rng), config_.obs_dim, config_.n_ctrl);
  const auto nb = static_cast<Eigen::Index>(b);
  const double inv_b = 1.0 / static_cast<double>(nb);

  // Critic: regress Q(s, a) on r + discount * Q'(s', mu'(s')).
  const MatrixXd next_action = nn::forward(actor_target_.values, nn::Mode::eval, actor_spec_, batch.next_obs)[0];
  MatrixXd next_in(critic_spec_.input_dim, nb);
  next_in << batch.next_obs, next_action;
  const MatrixXd next_q = nn::forward(critic_target_.values, nn::Mode::eval, critic_spec_, next_in)[0];

  MatrixXd cur_in(critic_spec_.input_dim, nb);
  cur_in << batch.obs, batch.actions;
  nn::Tape critic_tape;
  const MatrixXd q = nn::forward(critic_.values, critic_.mode, critic_spec_, cur_in, &rng, &critic_tape)[0];
  MatrixXd dq(1, nb);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < nb; ++i) {
    const double y = batch.rewards(i) + config_.discount * next_q(0, i);
    const double err = q(0, i) - y;
    loss += 0.5 * err * err;
    dq(0, i) = err * inv_b;
  }
  loss *= inv_b;
  check_loss(loss, name());
  const nn::Gradients critic_grads = nn::backward(critic_.values, critic_spec_, critic_tape, {dq}, false);
  critic_opt_.apply(critic_.values, critic_grads.params);

  // Actor: ascend Q(s, mu(s)) through the updated critic.
  nn::Tape actor_tape;
  const MatrixXd mu = nn::forward(actor_.values, actor_.mode, actor_spec_, batch.obs, &rng, &actor_tape)[0];
  MatrixXd mu_in(critic_spec_.input_dim, nb);
  mu_in << batch.obs, mu;
  nn::Tape value_tape;
  const MatrixXd value = nn::forward(critic_.values, nn::Mode::eval, critic_spec_, mu_in, nullptr, &value_tape)[0];
  const double objective = value.mean();
  check_loss(objective, name());
  const MatrixXd dvalue = MatrixXd::Constant(1, nb, -inv_b);
  const nn::Gradients through_critic = nn::backward(critic_.values, critic_spec_, value_tape, {dvalue});
  const MatrixXd dmu = through_critic.input.bottomRows(config_.n_ctrl);
  const nn::Gradients actor_grads = nn::backward(actor_.values, actor_spec_, actor_tape, {dmu}, false);
  actor_opt_.apply(actor_.values, actor_grads.params);

  ++updates_;
  if (updates_ % config_.target_period == 0) {
    nn::soft_update(actor_target_.values, actor_.values, config_.tau);
    nn::soft_update(critic_target_.values, critic_.values, config_.tau);
  }
  return TrainStats{loss, objective};
}

std::uint64_t BinDdpgAgent::parameter_checksum() const {
  std::uint64_t h = combine(actor_.values.checksum(), critic_.values.checksum());
  h = combine(h, combine(actor_target_.values.checksum(), critic_target_.values.checksum()));
  return combine(h, combine(optimizer_checksum(actor_opt_), optimizer_checksum(critic_opt_)));
}

Checkpoint BinDdpgAgent::checkpoint() const {
  Checkpoint c;
  c.agent = std::string(name());
  c.step = updates_;
  c.networks.push_back({"actor", actor_spec_, actor_, snapshot(actor_opt_)});
  c.networks.push_back({"critic", critic_spec_, critic_, snapshot(critic_opt_)});
  c.networks.push_back({"actor_target", actor_spec_, actor_target_, std::nullopt});
  c.networks.push_back({"critic_target", critic_spec_, critic_target_, std::nullopt});
  return c;
}

void BinDdpgAgent::restore(const Checkpoint& ckpt) {
  if (ckpt.agent != name()) throw ConfigError("checkpoint is for agent '" + ckpt.agent + "'");
  const auto& a = expect(ckpt, "actor", actor_spec_);
  const auto& c = expect(ckpt, "critic", critic_spec_);
  if (!a.optimizer || !c.optimizer) throw ConfigError("checkpoint lacks optimizer state");
  actor_ = a.params;
  critic_ = c.params;
  actor_target_ = expect(ckpt, "actor_target", actor_spec_).params;
  critic_target_ = expect(ckpt, "critic_target", critic_spec_).params;
  actor_opt_ = restore_optimizer(*a.optimizer);
  critic_opt_ = restore_optimizer(*c.optimizer);
  updates_ = ckpt.step;
}

}  // namespace risbin
