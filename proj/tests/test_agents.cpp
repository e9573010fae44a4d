#include <doctest.h>

#include <cmath>
#include <memory>

#include "risbin/agents.hpp"
#include "risbin/errors.hpp"
#include "risbin/selftest.hpp"

using namespace risbin;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Observation random_obs(int dim, Rng& rng) {
  Observation o(dim);
  for (int i = 0; i < dim; ++i) o(i) = rng.normal();
  return o;
}

BinDqnConfig small_bin_dqn(int obs_dim, int n_ctrl) {
  BinDqnConfig c;
  c.obs_dim = obs_dim;
  c.n_ctrl = n_ctrl;
  c.trunk = nn::dense_trunk(2, 16, 0.2);
  c.batch_size = 8;
  return c;
}

void fill_random(ReplayBuffer& buf, int obs_dim, int action_dim, int count, Rng& rng) {
  for (int i = 0; i < count; ++i) {
    Transition t;
    t.obs = std::make_shared<Observation>(random_obs(obs_dim, rng));
    t.next_obs = std::make_shared<Observation>(random_obs(obs_dim, rng));
    t.action = VectorXd(action_dim);
    for (int j = 0; j < action_dim; ++j) t.action(j) = static_cast<double>(rng() >> 63);
    t.reward = rng.uniform(0, 10);
    buf.push(std::move(t));
  }
}

}  // namespace

TEST_CASE("decomposition arithmetic") {
  const VectorXd q{{0.5, -0.2, 0.0, 1.5}};
  CHECK(binq::threshold(q) == RisAction({1, 0, 0, 1}));
  CHECK(binq::max_q(1.0, q) == 3.0);
  CHECK(binq::q_value(1.0, q, RisAction({1, 1, 1, 1})) == doctest::Approx(2.8));
  CHECK(binq::q_value(1.0, q, RisAction::zeros(4)) == 1.0);
  CHECK_THROWS_AS(binq::q_value(1.0, q, RisAction::zeros(3)), ConfigError);
}

TEST_CASE("thresholded heads are the exact argmax") {
  const auto r = check::decomposition(10, 50, 31);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("bin-DQN head sizes and target initialization") {
  Rng rng(1);
  BinDqnAgent agent(small_bin_dqn(10, 6), rng);
  CHECK(agent.spec().heads.size() == 2);
  CHECK(agent.spec().heads[0].output_dim == 1);
  CHECK(agent.spec().heads[1].output_dim == 6);
  CHECK(agent.online().values.checksum() == agent.target().values.checksum());

  Rng rng2(1);
  BinDqnConfig full;
  full.obs_dim = 2 * 16 * 5;
  full.n_ctrl = 16;
  BinDqnAgent standard(full, rng2);
  const auto shapes = standard.spec().shapes();
  CHECK(shapes.back().size() == 100);
}

TEST_CASE("single-transition update by hand") {
  BinDqnConfig c;
  c.obs_dim = 2;
  c.n_ctrl = 2;
  c.trunk = {};
  c.batch_size = 1;
  c.discount = 0.0;
  c.optimizer = {nn::OptimizerKind::sgd, 0.01, std::pair{-1.0, 1.0}};
  Rng rng(2);
  BinDqnAgent agent(c, rng);
  auto& p = agent.online().values;
  p.weights[0] = MatrixXd{{0.5, -0.25}};
  p.biases[0] = VectorXd{{0.1}};
  p.weights[1] = MatrixXd::Identity(2, 2);
  p.biases[1] = VectorXd::Zero(2);

  ReplayBuffer buf(1);
  const auto obs = std::make_shared<Observation>(VectorXd{{1.0, 2.0}});
  buf.push({obs, VectorXd{{1.0, 0.0}}, 3.0, obs});
  CHECK(agent.q_value(*obs, RisAction({1, 0})) == doctest::Approx(1.1));

  // Q = 0.1 + 1 = 1.1, error -1.9, gradients clipped to -1.
  const auto stats = agent.train_step(buf, rng);
  REQUIRE(stats);
  CHECK(stats->loss == doctest::Approx(1.805));
  CHECK(p.weights[0](0, 0) == doctest::Approx(0.51));
  CHECK(p.weights[0](0, 1) == doctest::Approx(-0.24));
  CHECK(p.biases[0](0) == doctest::Approx(0.11));
  CHECK(p.weights[1](0, 0) == doctest::Approx(1.01));
  CHECK(p.weights[1](0, 1) == doctest::Approx(0.01));
  CHECK(p.weights[1](1, 0) == 0.0);
  CHECK(p.weights[1](1, 1) == 1.0);
  CHECK(p.biases[1](0) == doctest::Approx(0.01));
  CHECK(p.biases[1](1) == 0.0);
}

TEST_CASE("loss vanishes at a fixed point") {
  BinDqnConfig c;
  c.obs_dim = 2;
  c.n_ctrl = 2;
  c.trunk = {};
  c.batch_size = 4;
  c.discount = 0.5;
  Rng rng(3);
  BinDqnAgent agent(c, rng);
  // Q = 2 everywhere with q <= 0: target = r + 0.5 * 2 = 2 when r = 1.
  for (auto* ps : {&agent.online().values, &agent.target().values}) {
    ps->weights[0].setZero();
    ps->biases[0].setConstant(2.0);
    ps->weights[1].setZero();
    ps->biases[1].setZero();
  }
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) {
    auto o = std::make_shared<Observation>(random_obs(2, rng));
    buf.push({o, VectorXd{{double(i % 2), 1.0}}, 1.0, o});
  }
  const auto before = agent.online().values.checksum();
  const auto stats = agent.train_step(buf, rng);
  REQUIRE(stats);
  CHECK(stats->loss == 0.0);
  CHECK(agent.online().values.checksum() == before);
}

TEST_CASE("no update until a batch is available") {
  Rng rng(4);
  BinDqnAgent agent(small_bin_dqn(5, 3), rng);
  ReplayBuffer buf(100);
  fill_random(buf, 5, 3, 7, rng);
  CHECK_FALSE(agent.train_step(buf, rng));
  fill_random(buf, 5, 3, 1, rng);
  CHECK(agent.train_step(buf, rng));
}

TEST_CASE("epsilon-greedy statistics") {
  Rng init(5);
  BinDqnConfig c = small_bin_dqn(6, 8);
  CHECK_FALSE(c.dropout_when_acting);  // exploration is epsilon only, by default
  Rng obs_rng(6);
  const Observation obs = random_obs(6, obs_rng);

  SUBCASE("epsilon 0 is greedy") {
    c.epsilon = 0.0;
    BinDqnAgent agent(c, init);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) CHECK(agent.act(obs, rng).action == agent.greedy(obs));
  }
  SUBCASE("epsilon 1 draws uniform bits") {
    c.epsilon = 1.0;
    BinDqnAgent agent(c, init);
    Rng rng(8);
    const int trials = 20000;
    VectorXd ones = VectorXd::Zero(8);
    for (int i = 0; i < trials; ++i) ones += agent.act(obs, rng).replay_action;
    const double se = std::sqrt(0.25 / trials);
    for (int j = 0; j < 8; ++j) CHECK(std::abs(ones(j) / trials - 0.5) < 4 * se);
  }
  SUBCASE("epsilon 0.1 departs from greedy at the expected rate") {
    c.epsilon = 0.1;
    BinDqnAgent agent(c, init);
    Rng rng(9);
    const RisAction g = agent.greedy(obs);
    const int trials = 20000;
    int off = 0;
    for (int i = 0; i < trials; ++i) off += agent.act(obs, rng).action == g ? 0 : 1;
    const double p = 0.1 * 255.0 / 256.0;
    CHECK(std::abs(off / double(trials) - p) < 4 * std::sqrt(p * (1 - p) / trials));
  }
}

TEST_CASE("greedy does not change the agent") {
  Rng rng(10);
  BinDqnAgent agent(small_bin_dqn(5, 4), rng);
  const auto before = agent.parameter_checksum();
  const Observation obs = random_obs(5, rng);
  const RisAction a = agent.greedy(obs);
  CHECK(agent.greedy(obs) == a);
  CHECK(agent.parameter_checksum() == before);
}

TEST_CASE("target network lags the online network") {
  BinDqnConfig c = small_bin_dqn(4, 2);
  c.target_period = 3;
  c.tau = 0.5;
  Rng rng(11);
  BinDqnAgent agent(c, rng);
  ReplayBuffer buf(50);
  fill_random(buf, 4, 2, 50, rng);
  const nn::ParamSet t0 = agent.target().values;
  agent.train_step(buf, rng);
  agent.train_step(buf, rng);
  CHECK(agent.target().values.checksum() == t0.checksum());
  agent.train_step(buf, rng);
  nn::ParamSet expect = t0;
  nn::soft_update(expect, agent.online().values, 0.5);
  CHECK(agent.target().values.checksum() == expect.checksum());
}

TEST_CASE("bin-DQN checkpoint round trip") {
  Rng rng(12);
  BinDqnAgent a(small_bin_dqn(5, 3), rng);
  ReplayBuffer buf(40);
  fill_random(buf, 5, 3, 40, rng);
  for (int i = 0; i < 5; ++i) a.train_step(buf, rng);
  Rng rng2(99);
  BinDqnAgent b(small_bin_dqn(5, 3), rng2);
  CHECK(a.parameter_checksum() != b.parameter_checksum());
  b.restore(a.checkpoint());
  CHECK(a.parameter_checksum() == b.parameter_checksum());
}

TEST_CASE("OU step") {
  Rng rng(13);
  CHECK(ou_step(VectorXd{{1.0, -2.0}}, 0.0, 0.15, 0.0, rng) == VectorXd{{0.85, -1.7}});
  CHECK(ou_step(VectorXd{{0.0}}, 0.0, 0.15, 0.0, rng)(0) == 0.0);
  CHECK(ou_step(VectorXd{{0.0}}, 1.0, 1.0, 0.0, rng)(0) == 1.0);
  CHECK_THROWS_AS(ou_step(VectorXd{{0.0}}, 0.0, -0.1, 0.2, rng), DomainError);
}

TEST_CASE("OU stationary variance") {
  // x' = (1 - theta) x + sigma e has variance sigma^2 / (1 - (1 - theta)^2).
  const double expected = 0.1441441441441442;
  OuNoise noise(1, 0.0, 0.15, 0.2);
  Rng rng(14);
  for (int i = 0; i < 200; ++i) noise.step(rng);
  double s1 = 0, s2 = 0;
  const int steps = 100000;
  for (int i = 0; i < steps; ++i) {
    const double x = noise.step(rng)(0);
    s1 += x;
    s2 += x * x;
  }
  const double var = s2 / steps - (s1 / steps) * (s1 / steps);
  CHECK(std::abs(var / expected - 1.0) < 0.05);
}

namespace {

BinDdpgConfig small_ddpg(int obs_dim, int n_ctrl) {
  BinDdpgConfig c;
  c.obs_dim = obs_dim;
  c.n_ctrl = n_ctrl;
  c.actor_trunk = nn::dense_trunk(2, 16, 0.0);
  c.critic_trunk = nn::dense_trunk(2, 16, 0.0);
  c.batch_size = 16;
  return c;
}

}  // namespace

TEST_CASE("bin-DDPG acts by thresholding the actor") {
  Rng rng(15);
  BinDdpgAgent agent(small_ddpg(6, 5), rng);
  CHECK(agent.critic_spec().input_dim == 11);
  const Observation obs = random_obs(6, rng);
  const VectorXd raw = agent.actor_output(obs);
  CHECK(raw.cwiseAbs().maxCoeff() < 1.0);
  CHECK(agent.greedy(obs) == binq::threshold(raw));
  const Decision quiet = agent.act(obs, false, rng);
  CHECK(quiet.replay_action == raw);
  CHECK(quiet.action == binq::threshold(raw));
  const Decision noisy = agent.act(obs, true, rng);
  CHECK(noisy.action == binq::threshold(noisy.replay_action));
  CHECK(noisy.replay_action != raw);
}

TEST_CASE("bin-DDPG noise schedule") {
  Rng rng(16);
  BinDdpgAgent agent(small_ddpg(3, 2), rng);
  CHECK(agent.noise().sigma() == 0.2);
  agent.set_progress(0.5);
  CHECK(agent.noise().sigma() == doctest::Approx(0.125));
  agent.set_progress(1.0);
  CHECK(agent.noise().sigma() == doctest::Approx(0.05));
  agent.set_progress(2.0);
  CHECK(agent.noise().sigma() == doctest::Approx(0.05));
}

TEST_CASE("bin-DDPG training is deterministic and respects a frozen actor") {
  auto run = [](double actor_lr) {
    BinDdpgConfig c = small_ddpg(4, 3);
    c.actor_optimizer.learning_rate = actor_lr;
    Rng init(17);
    auto agent = std::make_unique<BinDdpgAgent>(c, init);
    Rng rng(18);
    ReplayBuffer buf(100);
    for (int i = 0; i < 100; ++i) {
      const Observation o = random_obs(4, rng);
      const Decision d = agent->act(o, rng);
      buf.push({std::make_shared<Observation>(o), d.replay_action, rng.uniform(), std::make_shared<Observation>(o)});
    }
    for (int i = 0; i < 20; ++i) agent->train_step(buf, rng);
    return agent;
  };
  const auto a = run(1e-4), b = run(1e-4);
  CHECK(a->parameter_checksum() == b->parameter_checksum());

  const auto frozen = run(0.0);
  Rng init(17);
  const BinDdpgAgent fresh(small_ddpg(4, 3), init);
  CHECK(frozen->actor().values.checksum() == fresh.actor_target().values.checksum());
  CHECK(frozen->critic().values.checksum() != fresh.critic_target().values.checksum());
}

TEST_CASE("bin-DDPG critic regresses the immediate reward at discount 0") {
  BinDdpgConfig c = small_ddpg(2, 1);
  c.discount = 0.0;
  c.batch_size = 32;
  c.actor_optimizer.learning_rate = 0.0;
  Rng rng(19);
  BinDdpgAgent agent(c, rng);
  ReplayBuffer buf(2000);
  for (int i = 0; i < 2000; ++i) {
    const auto o = std::make_shared<Observation>(random_obs(2, rng));
    const double a = rng.uniform(-1, 1);
    buf.push({o, VectorXd{{a}}, 2.0 * a + (*o)(0), o});
  }
  for (int i = 0; i < 3000; ++i) agent.train_step(buf, rng);
  double err = 0;
  for (int i = 0; i < 100; ++i) {
    const Observation o = Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const double a = rng.uniform(-1, 1);
    err = std::max(err, std::abs(agent.critic_value(o, VectorXd{{a}}) - (2.0 * a + o(0))));
  }
  CHECK(err < 0.2);
}

TEST_CASE("vanilla DQN") {
  CHECK(VanillaDqnAgent::decode_argmax(VectorXd{{0, 3, 3, 1}}, 2) == RisAction({0, 1}));
  CHECK(VanillaDqnAgent::decode_argmax(VectorXd{{0, 1, 2, 5, 4, 0, 0, 0}}, 3) == RisAction({0, 1, 1}));
  CHECK_THROWS_AS(VanillaDqnAgent::decode_argmax(VectorXd{{0, 1, 2}}, 2), ConfigError);

  SUBCASE("greedy matches a brute-force argmax") {
    for (int n = 1; n <= 4; ++n) {
      DqnConfig c;
      c.obs_dim = 5;
      c.n_ctrl = n;
      c.trunk = nn::dense_trunk(1, 8, 0.0);
      Rng rng(20 + n);
      VanillaDqnAgent agent(c, rng);
      CHECK(agent.spec().heads[0].output_dim == (1 << n));
      for (int t = 0; t < 20; ++t) {
        const Observation o = random_obs(5, rng);
        const VectorXd q = agent.q_values(o);
        std::uint64_t best = 0;
        for (std::uint64_t i = 1; i < (1u << n); ++i)
          if (q(static_cast<Eigen::Index>(i)) > q(static_cast<Eigen::Index>(best))) best = i;
        CHECK(agent.greedy(o) == action_from_index(best, n));
      }
    }
  }
  SUBCASE("refuses more outputs than the cap") {
    DqnConfig c;
    c.obs_dim = 5;
    c.n_ctrl = 23;
    Rng rng(1);
    CHECK_THROWS_AS(VanillaDqnAgent(c, rng), RefusalError);
    c.n_ctrl = 5;
    c.max_ctrl = 4;
    CHECK_THROWS_AS(VanillaDqnAgent(c, rng), RefusalError);
  }
  SUBCASE("trains") {
    DqnConfig c;
    c.obs_dim = 4;
    c.n_ctrl = 3;
    c.trunk = nn::dense_trunk(1, 8, 0.0);
    c.batch_size = 8;
    Rng rng(24);
    VanillaDqnAgent agent(c, rng);
    ReplayBuffer buf(20);
    fill_random(buf, 4, 3, 20, rng);
    const auto before = agent.parameter_checksum();
    const auto stats = agent.train_step(buf, rng);
    REQUIRE(stats);
    CHECK(std::isfinite(stats->loss));
    CHECK(agent.parameter_checksum() != before);
  }
}
