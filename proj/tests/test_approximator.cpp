#include <doctest.h>

#include <cmath>

#include "risbin/approximator.hpp"
#include "risbin/errors.hpp"
#include "risbin/selftest.hpp"

using namespace risbin;
using namespace risbin::nn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NetworkSpec single_dense(int in, int out, Activation act) {
  NetworkSpec spec;
  spec.input_dim = in;
  spec.heads = {{"y", out, act}};
  return spec;
}

// Trunk followed by a linear identity head, so the trunk output is visible.
NetworkParams with_identity_head(const NetworkSpec& spec, Rng& rng) {
  NetworkParams p = init_params(spec, rng);
  const std::size_t slot = spec.layers.size();
  p.values.weights[slot] = MatrixXd::Identity(spec.heads[0].output_dim, spec.shapes().back().size());
  p.values.biases[slot].setZero();
  return p;
}

}  // namespace

TEST_CASE("dense head with identity weights passes its input through") {
  Rng rng(1);
  const NetworkSpec spec = single_dense(2, 2, Activation::linear);
  NetworkParams p = init_params(spec, rng);
  p.values.weights[0] = MatrixXd::Identity(2, 2);
  p.values.biases[0].setZero();
  const auto out = forward_one(p, spec, VectorXd{{1.0, 2.0}});
  CHECK(out[0](0) == 1.0);
  CHECK(out[0](1) == 2.0);
}

TEST_CASE("dense relu layer by substitution") {
  Rng rng(1);
  NetworkSpec spec;
  spec.input_dim = 2;
  spec.layers = {LayerSpec::dense(2), LayerSpec::act(Activation::relu)};
  spec.heads = {{"y", 2, Activation::linear}};
  NetworkParams p = with_identity_head(spec, rng);
  p.values.weights[0] = MatrixXd{{1, 1}, {1, -1}};
  p.values.biases[0].setZero();
  const auto out = forward_one(p, spec, VectorXd{{1.0, 2.0}});
  CHECK(out[0](0) == 3.0);
  CHECK(out[0](1) == 0.0);
}

TEST_CASE("tanh head stays inside (-1, 1)") {
  Rng rng(2);
  NetworkSpec spec;
  spec.input_dim = 5;
  spec.layers = dense_trunk(2, 16, 0.0);
  spec.heads = {{"a", 7, Activation::tanh}};
  NetworkParams p = init_params(spec, rng);
  for (auto& w : p.values.weights) w *= 30.0;
  MatrixXd x = MatrixXd::Random(5, 200) * 10.0;
  const MatrixXd y = forward(p, spec, x)[0];
  CHECK(y.maxCoeff() <= 1.0);
  CHECK(y.minCoeff() >= -1.0);
  CHECK((y.array().abs() < 1.0 || y.array().abs() == 1.0).all());
}

TEST_CASE("conv1d and maxpool layouts") {
  Rng rng(3);
  SUBCASE("conv of [1,2,3,4] with kernel [1,-1] is the forward difference") {
    NetworkSpec spec;
    spec.input_dim = 4;
    spec.layers = {LayerSpec::conv1d(1, 2)};
    spec.heads = {{"y", 3, Activation::linear}};
    NetworkParams p = with_identity_head(spec, rng);
    p.values.weights[0] = MatrixXd{{1, -1}};
    p.values.biases[0] = VectorXd::Constant(1, 0.5);
    const auto out = forward_one(p, spec, VectorXd{{1, 2, 3, 4}});
    CHECK(out[0] == VectorXd::Constant(3, -0.5));
  }
  SUBCASE("two channels are laid out channel-major") {
    NetworkSpec spec;
    spec.input_dim = 3;
    spec.layers = {LayerSpec::conv1d(2, 1)};
    spec.heads = {{"y", 6, Activation::linear}};
    NetworkParams p = with_identity_head(spec, rng);
    p.values.weights[0] = MatrixXd{{1}, {-2}};
    p.values.biases[0].setZero();
    const auto out = forward_one(p, spec, VectorXd{{1, 2, 3}});
    CHECK(out[0] == VectorXd{{1, 2, 3, -2, -4, -6}});
  }
  SUBCASE("maxpool stride equals its width; the remainder is dropped") {
    NetworkSpec spec;
    spec.input_dim = 5;
    spec.layers = {LayerSpec::maxpool1d(2)};
    spec.heads = {{"y", 2, Activation::linear}};
    NetworkParams p = with_identity_head(spec, rng);
    const auto out = forward_one(p, spec, VectorXd{{1, 3, 2, 5, 4}});
    CHECK(out[0] == VectorXd{{3, 5}});
  }
}

TEST_CASE("scalar linear net: dL/dw = x and dL/dx = w") {
  Rng rng(4);
  const NetworkSpec spec = single_dense(1, 1, Activation::linear);
  NetworkParams p = init_params(spec, rng);
  p.values.weights[0](0, 0) = 3.0;
  p.values.biases[0](0) = 0.0;
  Tape tape;
  forward(p, spec, MatrixXd::Constant(1, 1, 2.0), nullptr, &tape);
  const Gradients g = backward(p, spec, tape, {MatrixXd::Constant(1, 1, 1.0)});
  CHECK(g.params.weights[0](0, 0) == 2.0);
  CHECK(g.params.biases[0](0) == 1.0);
  CHECK(g.input(0, 0) == 3.0);
}

TEST_CASE("relu blocks the gradient at a negative pre-activation") {
  Rng rng(5);
  NetworkSpec spec;
  spec.input_dim = 1;
  spec.layers = {LayerSpec::dense(2), LayerSpec::act(Activation::relu)};
  spec.heads = {{"y", 1, Activation::linear}};
  NetworkParams p = init_params(spec, rng);
  p.values.weights[0] = MatrixXd{{1.0}, {-1.0}};
  p.values.biases[0].setZero();
  p.values.weights[2] = MatrixXd{{1.0, 1.0}};
  Tape tape;
  forward(p, spec, MatrixXd::Constant(1, 1, 2.0), nullptr, &tape);
  const Gradients g = backward(p, spec, tape, {MatrixXd::Ones(1, 1)});
  CHECK(g.params.weights[0](0, 0) == 2.0);
  CHECK(g.params.weights[0](1, 0) == 0.0);
  CHECK(g.params.biases[0](1) == 0.0);
}

TEST_CASE("gradients agree with central differences on random small networks") {
  const auto r = check::gradients(300, 1e-4, 2024);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("backward without a recorded forward pass is a usage error") {
  Rng rng(6);
  const NetworkSpec spec = single_dense(2, 1, Activation::linear);
  const NetworkParams p = init_params(spec, rng);
  Tape tape;
  CHECK_THROWS_AS(backward(p, spec, tape, {MatrixXd::Ones(1, 1)}), UsageError);
}

TEST_CASE("shape and spec validation") {
  Rng rng(7);
  const NetworkSpec spec = single_dense(3, 1, Activation::linear);
  const NetworkParams p = init_params(spec, rng);
  CHECK_THROWS_AS(forward(p, spec, MatrixXd::Ones(2, 1)), ConfigError);

  NetworkSpec bad;
  bad.input_dim = 4;
  bad.layers = {LayerSpec::conv1d(2, 5)};
  bad.heads = {{"y", 1, Activation::linear}};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.layers = {LayerSpec::dropout(1.5)};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.layers = {};
  bad.heads = {};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("layer output sizes follow from the spec") {
  NetworkSpec spec;
  spec.input_dim = 80;
  spec.layers = conv_trunk(2, 64, 5, 5, 1, 100, 0.2);
  spec.heads = {{"q", 3, Activation::linear}};
  const auto shapes = spec.shapes();
  CHECK(shapes[1] == Shape{64, 76});   // conv 5
  CHECK(shapes[2] == Shape{64, 15});   // pool 5
  CHECK(shapes[4] == Shape{64, 11});   // conv 5
  CHECK(shapes[5] == Shape{64, 2});    // pool 5
  CHECK(shapes.back() == Shape{1, 100});
}

TEST_CASE("eval mode is deterministic and ignores dropout") {
  Rng rng(8);
  NetworkSpec spec;
  spec.input_dim = 6;
  spec.layers = dense_trunk(2, 16, 0.5);
  spec.heads = {{"y", 3, Activation::linear}};
  NetworkParams p = init_params(spec, rng);
  p.mode = Mode::eval;
  const MatrixXd x = MatrixXd::Random(6, 4);
  Rng a(1), b(2);
  CHECK(forward(p, spec, x, &a)[0] == forward(p, spec, x, &b)[0]);
}

TEST_CASE("inverted dropout preserves the expected activation") {
  Rng rng(9);
  NetworkSpec spec;
  spec.input_dim = 3;
  spec.layers = {LayerSpec::dropout(0.3)};
  spec.heads = {{"y", 3, Activation::linear}};
  NetworkParams p = with_identity_head(spec, rng);
  const VectorXd x{{0.5, -1.25, 2.0}};
  const int draws = 100000;
  const MatrixXd batch = x.replicate(1, draws);
  Rng masks(10);
  const MatrixXd y = forward(p, spec, batch, &masks)[0];
  for (int i = 0; i < 3; ++i) {
    const double mean = y.row(i).mean();
    const double var = (y.row(i).array() - mean).square().sum() / (draws - 1);
    const double se = std::sqrt(var / draws);
    CHECK(std::abs(mean - x(i)) <= 3.0 * se);
  }
}

TEST_CASE("optimizer steps") {
  ParamSet p;
  p.weights = {MatrixXd::Constant(1, 1, 1.0)};
  p.biases = {VectorXd::Zero(1)};
  ParamSet g = p.zeros_like();

  SUBCASE("sgd") {
    Optimizer opt({OptimizerKind::sgd, 0.01, std::nullopt});
    g.weights[0](0, 0) = 0.5;
    opt.apply(p, g);
    CHECK(p.weights[0](0, 0) == doctest::Approx(0.995).epsilon(1e-15));
  }
  SUBCASE("clipping to (-1, 1) turns a gradient of 5 into 1") {
    Optimizer opt({OptimizerKind::sgd, 0.01, std::pair{-1.0, 1.0}});
    g.weights[0](0, 0) = 5.0;
    opt.apply(p, g);
    CHECK(p.weights[0](0, 0) == doctest::Approx(0.99).epsilon(1e-15));
  }
  SUBCASE("zero gradient is a fixed point of sgd") {
    Optimizer opt({OptimizerKind::sgd, 0.01, std::nullopt});
    const auto before = p.checksum();
    opt.apply(p, g);
    CHECK(p.checksum() == before);
  }
  SUBCASE("adam's first step has magnitude lr") {
    Optimizer opt({OptimizerKind::adam, 0.1, std::nullopt});
    g.weights[0](0, 0) = 0.5;
    opt.apply(p, g);
    CHECK(p.weights[0](0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("non-finite gradients are rejected and leave parameters alone") {
    Optimizer opt({OptimizerKind::sgd, 0.01, std::nullopt});
    g.weights[0](0, 0) = std::nan("");
    CHECK_THROWS_AS(opt.apply(p, g), NumericError);
    CHECK(p.weights[0](0, 0) == 1.0);
  }
}

TEST_CASE("soft update") {
  ParamSet target, online;
  target.weights = {MatrixXd::Zero(2, 2)};
  target.biases = {VectorXd::Zero(2)};
  online.weights = {MatrixXd::Ones(2, 2)};
  online.biases = {VectorXd::Ones(2)};

  SUBCASE("tau 0.05 moves 0 toward 1 by 0.05") {
    soft_update(target, online, 0.05);
    CHECK(target.weights[0](1, 0) == 0.05);
    CHECK(target.biases[0](1) == 0.05);
  }
  SUBCASE("tau 1 copies exactly") {
    online.weights[0](0, 1) = 0.1 + 0.2;
    soft_update(target, online, 1.0);
    CHECK(target.checksum() == online.checksum());
  }
  SUBCASE("tau 0 leaves the target alone") {
    const auto before = target.checksum();
    soft_update(target, online, 0.0);
    CHECK(target.checksum() == before);
  }
  SUBCASE("shape mismatch") {
    online.weights[0] = MatrixXd::Ones(3, 2);
    CHECK_THROWS_AS(soft_update(target, online, 0.5), ConfigError);
  }
}

TEST_CASE("initialization stays within the fan-in bound") {
  Rng rng(11);
  NetworkSpec spec;
  spec.input_dim = 50;
  spec.layers = {LayerSpec::dense(30)};
  spec.heads = {{"y", 2, Activation::linear}};
  const NetworkParams p = init_params(spec, rng);
  CHECK(p.values.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 50));
  CHECK(p.values.weights[1].cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 30));
}
