#pragma once

// Small feed-forward approximator with hand-written reverse-mode gradients.
//
// Activations are stored column-per-sample: a batch is a (features x batch)
// matrix. Multi-channel activations are laid out channel-major inside each
// column, i.e. feature index = channel * length + position.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "risbin/rng.hpp"

namespace risbin::nn {

enum class LayerKind { dense, conv1d, maxpool1d, dropout, activation };
enum class Activation { relu, tanh, linear };
enum class Mode { train, eval };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation activation);
LayerKind layer_kind_from_string(std::string_view name);
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int units = 1;          // dense width or conv output channels
  int kernel_width = 1;   // conv / pool only
  double drop_prob = 0.0; // dropout only
  Activation activation = Activation::linear;  // activation only

  static LayerSpec dense(int units);
  static LayerSpec conv1d(int channels, int kernel_width);
  static LayerSpec maxpool1d(int kernel_width);
  static LayerSpec dropout(double drop_prob);
  static LayerSpec act(Activation activation);

  bool operator==(const LayerSpec&) const = default;
};

/// Output layer sharing the trunk: a dense projection plus an activation.
struct HeadSpec {
  std::string name;
  int output_dim = 1;
  Activation activation = Activation::linear;

  bool operator==(const HeadSpec&) const = default;
};

struct Shape {
  int channels = 1;
  int length = 1;
  int size() const { return channels * length; }
  bool operator==(const Shape&) const = default;
};

struct NetworkSpec {
  int input_dim = 1;
  std::vector<LayerSpec> layers;
  std::vector<HeadSpec> heads;

  /// Throws ConfigError on any violated invariant, including layers whose
  /// kernel no longer fits the incoming length.
  void validate() const;
  /// Shapes after the input and after every trunk layer (size layers + 1).
  std::vector<Shape> shapes() const;
  std::size_t head_index(std::string_view name) const;
  std::size_t parameter_slots() const { return layers.size() + heads.size(); }

  bool operator==(const NetworkSpec&) const = default;
};

/// Weight/bias arrays, one slot per trunk layer followed by one per head.
/// Parameter-free layers hold empty arrays.
struct ParamSet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  bool same_shape(const ParamSet& other) const;
  ParamSet zeros_like() const;
  std::size_t count() const;
  bool all_finite() const;
  /// FNV-1a over the raw bytes; used for bitwise equality checks.
  std::uint64_t checksum() const;
};

struct NetworkParams {
  ParamSet values;
  Mode mode = Mode::train;
};

/// Uniform fan-in initialization, +-sqrt(1/fan_in) for weights and biases.
NetworkParams init_params(const NetworkSpec& spec, Rng& rng);

/// Activations recorded by forward() and consumed by backward().
struct Tape {
  bool recorded = false;
  Mode mode = Mode::eval;
  std::vector<Eigen::MatrixXd> inputs;   // input of each trunk layer
  std::vector<Eigen::MatrixXd> aux;      // im2col buffers, dropout masks, activation outputs
  std::vector<std::vector<int>> argmax;  // max-pool winners
  Eigen::MatrixXd trunk_output;
  std::vector<Eigen::MatrixXd> head_outputs;

  bool empty() const { return !recorded; }
  void clear() { *this = Tape{}; }
};

/// Runs the trunk and every head on a batch (input_dim x batch). Returns one
/// (output_dim x batch) matrix per head, in spec order. `rng` is used only in
/// train mode when dropout is present. When `tape` is given the activations
/// needed by backward() are recorded in it.
std::vector<Eigen::MatrixXd> forward(const NetworkParams& params, const NetworkSpec& spec,
                                     const Eigen::MatrixXd& input, Rng* rng = nullptr,
                                     Tape* tape = nullptr);
/// Same, with the mode given explicitly instead of read from NetworkParams.
std::vector<Eigen::MatrixXd> forward(const ParamSet& params, Mode mode, const NetworkSpec& spec,
                                     const Eigen::MatrixXd& input, Rng* rng = nullptr,
                                     Tape* tape = nullptr);

/// Single-sample convenience wrapper.
std::vector<Eigen::VectorXd> forward_one(const NetworkParams& params, const NetworkSpec& spec,
                                         const Eigen::VectorXd& input, Rng* rng = nullptr);

struct Gradients {
  ParamSet params;
  Eigen::MatrixXd input;  // d(loss)/d(input), same shape as the forward input
};

/// Reverse-mode pass for the forward recorded in `tape`. `head_grads` holds
/// d(loss)/d(head output) per head; pass an empty matrix for heads that do
/// not contribute. With `input_gradient` false, Gradients::input is left
/// empty and the first layer's input gradient is not computed.
Gradients backward(const NetworkParams& params, const NetworkSpec& spec, const Tape& tape,
                   const std::vector<Eigen::MatrixXd>& head_grads, bool input_gradient = true);
Gradients backward(const ParamSet& params, const NetworkSpec& spec, const Tape& tape,
                   const std::vector<Eigen::MatrixXd>& head_grads, bool input_gradient = true);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 1e-3;
  std::optional<std::pair<double, double>> clip;  // elementwise gradient clip
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order optimizer state. Adam moments are sized on first use.
class Optimizer {
 public:
  Optimizer() = default;
  explicit Optimizer(OptimizerConfig config);

  /// Moves `params` against the (clipped) gradient. Throws NumericError and
  /// leaves `params` untouched if any gradient entry is not finite.
  void apply(ParamSet& params, const ParamSet& grads);

  const OptimizerConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }
  const ParamSet& first_moment() const { return m_; }
  const ParamSet& second_moment() const { return v_; }
  void restore(std::int64_t steps, ParamSet first_moment, ParamSet second_moment);

 private:
  OptimizerConfig config_;
  std::int64_t steps_ = 0;
  ParamSet m_;
  ParamSet v_;
};

/// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(ParamSet& target, const ParamSet& online, double tau);

/// Standard DQN trunk: (conv -> pool -> activation) per conv layer, then a dense stack, each
/// dense layer followed by the activation and dropout.
std::vector<LayerSpec> conv_trunk(int conv_layers, int conv_channels, int conv_kernel,
                                  int pool_kernel, int dense_layers, int dense_units,
                                  double drop_prob, Activation hidden = Activation::relu);
/// Fully connected trunk with dropout after every hidden activation.
std::vector<LayerSpec> dense_trunk(int dense_layers, int dense_units, double drop_prob,
                                   Activation hidden = Activation::relu);

}  // namespace risbin::nn
