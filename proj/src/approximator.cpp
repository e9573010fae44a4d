#include "risbin/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "risbin/errors.hpp"

namespace risbin::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::maxpool1d: return "maxpool1d";
    case LayerKind::dropout: return "dropout";
    case LayerKind::activation: return "activation";
  }
  return "?";
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::dense, LayerKind::conv1d, LayerKind::maxpool1d, LayerKind::dropout,
                    LayerKind::activation}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown layer kind: " + std::string(name));
}

Activation activation_from_string(std::string_view name) {
  for (auto a : {Activation::relu, Activation::tanh, Activation::linear}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown activation: " + std::string(name));
}

LayerSpec LayerSpec::dense(int units) { return {LayerKind::dense, units, 1, 0.0, Activation::linear}; }

LayerSpec LayerSpec::conv1d(int channels, int kernel_width) {
  return {LayerKind::conv1d, channels, kernel_width, 0.0, Activation::linear};
}

LayerSpec LayerSpec::maxpool1d(int kernel_width) {
  return {LayerKind::maxpool1d, 1, kernel_width, 0.0, Activation::linear};
}

LayerSpec LayerSpec::dropout(double drop_prob) {
  return {LayerKind::dropout, 1, 1, drop_prob, Activation::linear};
}

LayerSpec LayerSpec::act(Activation activation) {
  return {LayerKind::activation, 1, 1, 0.0, activation};
}

// ---------------------------------------------------------------------------
// NetworkSpec

std::vector<Shape> NetworkSpec::shapes() const {
  if (input_dim < 1) throw ConfigError("input_dim must be positive");
  std::vector<Shape> out;
  out.reserve(layers.size() + 1);
  Shape cur{1, input_dim};
  out.push_back(cur);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + ")";
    switch (l.kind) {
      case LayerKind::dense:
        if (l.units < 1) throw ConfigError(where + ": units must be >= 1");
        cur = {1, l.units};
        break;
      case LayerKind::conv1d:
        if (l.units < 1) throw ConfigError(where + ": channels must be >= 1");
        if (l.kernel_width < 1) throw ConfigError(where + ": kernel_width must be >= 1");
        if (cur.length < l.kernel_width)
          throw ConfigError(where + ": kernel " + std::to_string(l.kernel_width) +
                            " wider than input length " + std::to_string(cur.length));
        cur = {l.units, cur.length - l.kernel_width + 1};
        break;
      case LayerKind::maxpool1d:
        if (l.kernel_width < 1) throw ConfigError(where + ": kernel_width must be >= 1");
        if (cur.length < l.kernel_width)
          throw ConfigError(where + ": pool " + std::to_string(l.kernel_width) +
                            " wider than input length " + std::to_string(cur.length));
        cur = {cur.channels, cur.length / l.kernel_width};
        break;
      case LayerKind::dropout:
        if (!(l.drop_prob >= 0.0 && l.drop_prob <= 1.0))
          throw ConfigError(where + ": drop_prob must lie in [0, 1]");
        break;
      case LayerKind::activation:
        break;
    }
    out.push_back(cur);
  }
  return out;
}

void NetworkSpec::validate() const {
  (void)shapes();
  if (heads.empty()) throw ConfigError("network needs at least one head");
  for (const auto& h : heads) {
    if (h.output_dim < 1) throw ConfigError("head '" + h.name + "' output_dim must be >= 1");
  }
}

std::size_t NetworkSpec::head_index(std::string_view name) const {
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].name == name) return i;
  }
  throw ConfigError("no head named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ParamSet

bool ParamSet::same_shape(const ParamSet& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rows() != other.weights[i].rows() || weights[i].cols() != other.weights[i].cols())
      return false;
  }
  for (std::size_t i = 0; i < biases.size(); ++i) {
    if (biases[i].size() != other.biases[i].size()) return false;
  }
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  z.weights.reserve(weights.size());
  z.biases.reserve(biases.size());
  for (const auto& w : weights) z.weights.push_back(MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : biases) z.biases.push_back(VectorXd::Zero(b.size()));
  return z;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

bool ParamSet::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

namespace {

void fnv_mix(std::uint64_t& h, const double* data, Eigen::Index n) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& w : weights) fnv_mix(h, w.data(), w.size());
  for (const auto& b : biases) fnv_mix(h, b.data(), b.size());
  return h;
}

NetworkParams init_params(const NetworkSpec& spec, Rng& rng) {
  spec.validate();
  const auto shapes = spec.shapes();
  NetworkParams p;
  p.values.weights.resize(spec.parameter_slots());
  p.values.biases.resize(spec.parameter_slots());

  auto fill = [&rng](MatrixXd& w, VectorXd& b, int rows, int cols, int fan_in) {
    const double bound = std::sqrt(1.0 / fan_in);
    w.resize(rows, cols);
    b.resize(rows);
    // Row-major fill order keeps the draw sequence independent of storage order.
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    for (int r = 0; r < rows; ++r) b(r) = rng.uniform(-bound, bound);
  };

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape in = shapes[i];
    if (l.kind == LayerKind::dense) {
      fill(p.values.weights[i], p.values.biases[i], l.units, in.size(), in.size());
    } else if (l.kind == LayerKind::conv1d) {
      const int fan_in = in.channels * l.kernel_width;
      fill(p.values.weights[i], p.values.biases[i], l.units, fan_in, fan_in);
    }
  }
  const int trunk_out = shapes.back().size();
  for (std::size_t h = 0; h < spec.heads.size(); ++h) {
    const std::size_t slot = spec.layers.size() + h;
    fill(p.values.weights[slot], p.values.biases[slot], spec.heads[h].output_dim, trunk_out, trunk_out);
  }
  return p;
}

// ---------------------------------------------------------------------------
// forward / backward

namespace {

MatrixXd apply_activation(Activation a, const MatrixXd& x) {
  switch (a) {
    case Activation::relu: return x.cwiseMax(0.0);
    case Activation::tanh: return x.array().tanh().matrix();
    case Activation::linear: return x;
  }
  return x;
}

void apply_activation_inplace(Activation a, MatrixXd& x) {
  switch (a) {
    case Activation::relu: x = x.cwiseMax(0.0); break;
    case Activation::tanh: x = x.array().tanh().matrix(); break;
    case Activation::linear: break;
  }
}

// grad wrt pre-activation given the activation output y and upstream grad.
MatrixXd activation_backward(Activation a, const MatrixXd& y, const MatrixXd& grad) {
  switch (a) {
    case Activation::relu: return (y.array() > 0.0).select(grad, 0.0);
    case Activation::tanh: return (grad.array() * (1.0 - y.array().square())).matrix();
    case Activation::linear: return grad;
  }
  return grad;
}

// Transposed im2col, (L_out * batch) x (C_in * kw): row (b * L_out + t) holds
// the receptive field of output position t of sample b. Every copy is a
// contiguous run of L_out values.
MatrixXd im2col(const MatrixXd& x, Shape in, int kw) {
  const int l_out = in.length - kw + 1;
  const Eigen::Index batch = x.cols();
  MatrixXd cols(l_out * batch, static_cast<Eigen::Index>(in.channels) * kw);
  for (int ci = 0; ci < in.channels; ++ci) {
    for (int k = 0; k < kw; ++k) {
      auto dst = cols.col(ci * kw + k);
      for (Eigen::Index b = 0; b < batch; ++b)
        dst.segment(b * l_out, l_out) = x.col(b).segment(static_cast<Eigen::Index>(ci) * in.length + k, l_out);
    }
  }
  return cols;
}

// (L * batch) x C position rows <-> channel-major (C * L) x batch columns.
MatrixXd to_position_rows(const MatrixXd& y, Shape s) {
  const Eigen::Index batch = y.cols();
  MatrixXd out(static_cast<Eigen::Index>(s.length) * batch, s.channels);
  for (Eigen::Index b = 0; b < batch; ++b)
    out.middleRows(b * s.length, s.length) = Eigen::Map<const MatrixXd>(y.col(b).data(), s.length, s.channels);
  return out;
}

MatrixXd from_position_rows(const MatrixXd& rows, Shape s, Eigen::Index batch) {
  MatrixXd out(s.size(), batch);
  for (Eigen::Index b = 0; b < batch; ++b)
    Eigen::Map<MatrixXd>(out.col(b).data(), s.length, s.channels) = rows.middleRows(b * s.length, s.length);
  return out;
}

void check_input(const NetworkSpec& spec, const MatrixXd& input) {
  if (input.rows() != spec.input_dim)
    throw ConfigError("input has " + std::to_string(input.rows()) + " features, network expects " +
                      std::to_string(spec.input_dim));
  if (input.cols() < 1) throw ConfigError("empty input batch");
}

}  // namespace

std::vector<MatrixXd> forward(const NetworkParams& params, const NetworkSpec& spec,
                              const MatrixXd& input, Rng* rng, Tape* tape) {
  return forward(params.values, params.mode, spec, input, rng, tape);
}

std::vector<MatrixXd> forward(const ParamSet& params, Mode mode, const NetworkSpec& spec,
                              const MatrixXd& input, Rng* rng, Tape* tape) {
  check_input(spec, input);
  const auto shapes = spec.shapes();
  if (params.weights.size() != spec.parameter_slots() || params.biases.size() != spec.parameter_slots())
    throw ConfigError("parameter slots do not match network spec");
  const bool train = mode == Mode::train;
  const Eigen::Index batch = input.cols();

  if (tape) {
    tape->clear();
    tape->mode = mode;
    tape->inputs.resize(spec.layers.size());
    tape->aux.resize(spec.layers.size());
    tape->argmax.resize(spec.layers.size());
  }

  MatrixXd x = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape in = shapes[i];
    const Shape out = shapes[i + 1];
    const MatrixXd& w = params.weights[i];
    const VectorXd& bias = params.biases[i];
    MatrixXd y;
    switch (l.kind) {
      case LayerKind::dense:
        if (w.rows() != l.units || w.cols() != in.size())
          throw ConfigError("dense weight shape mismatch at layer " + std::to_string(i));
        y.noalias() = w * x;
        y.colwise() += bias;
        break;
      case LayerKind::conv1d: {
        if (w.rows() != l.units || w.cols() != in.channels * l.kernel_width)
          throw ConfigError("conv1d weight shape mismatch at layer " + std::to_string(i));
        MatrixXd cols = im2col(x, in, l.kernel_width);
        MatrixXd rows(cols.rows(), l.units);
        rows.noalias() = cols * w.transpose();
        rows.rowwise() += bias.transpose();
        y = from_position_rows(rows, out, batch);
        if (tape) tape->aux[i] = std::move(cols);
        break;
      }
      case LayerKind::maxpool1d: {
        const int kw = l.kernel_width;
        y.resize(out.size(), batch);
        std::vector<int> winners;
        if (tape) winners.resize(static_cast<std::size_t>(out.size() * batch));
        for (Eigen::Index b = 0; b < batch; ++b) {
          for (int c = 0; c < in.channels; ++c) {
            for (int t = 0; t < out.length; ++t) {
              const int base = c * in.length + t * kw;
              int best = base;
              for (int k = 1; k < kw; ++k) {
                if (x(base + k, b) > x(best, b)) best = base + k;
              }
              const int o = c * out.length + t;
              y(o, b) = x(best, b);
              if (tape) winners[static_cast<std::size_t>(b * out.size() + o)] = best;
            }
          }
        }
        if (tape) tape->argmax[i] = std::move(winners);
        break;
      }
      case LayerKind::dropout:
        if (train && l.drop_prob > 0.0) {
          if (!rng) throw UsageError("dropout in train mode needs an rng");
          const double keep = 1.0 - l.drop_prob;
          const double scale = keep > 0.0 ? 1.0 / keep : 0.0;
          MatrixXd mask(x.rows(), x.cols());
          for (Eigen::Index c = 0; c < mask.cols(); ++c)
            for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = rng->bernoulli(keep) ? scale : 0.0;
          y = x.cwiseProduct(mask);
          if (tape) tape->aux[i] = std::move(mask);
        } else {
          y = tape ? MatrixXd(x) : std::move(x);
        }
        break;
      case LayerKind::activation: {
        // In place. backward() reads the output back as the next layer's
        // recorded input unless that layer is another activation.
        y = std::move(x);
        apply_activation_inplace(l.activation, y);
        const bool overwritten = i + 1 < spec.layers.size() && spec.layers[i + 1].kind == LayerKind::activation;
        if (tape && overwritten) tape->aux[i] = y;
        break;
      }
    }
    if (tape) tape->inputs[i] = std::move(x);
    x = std::move(y);
  }

  const int trunk_out = shapes.back().size();
  std::vector<MatrixXd> heads;
  heads.reserve(spec.heads.size());
  for (std::size_t h = 0; h < spec.heads.size(); ++h) {
    const std::size_t slot = spec.layers.size() + h;
    const MatrixXd& w = params.weights[slot];
    if (w.rows() != spec.heads[h].output_dim || w.cols() != trunk_out)
      throw ConfigError("head '" + spec.heads[h].name + "' weight shape mismatch");
    MatrixXd z = w * x;
    z.colwise() += params.biases[slot];
    heads.push_back(apply_activation(spec.heads[h].activation, z));
  }

  if (tape) {
    tape->trunk_output = std::move(x);
    tape->head_outputs = heads;
    tape->recorded = true;
  }
  return heads;
}

std::vector<VectorXd> forward_one(const NetworkParams& params, const NetworkSpec& spec,
                                  const VectorXd& input, Rng* rng) {
  const MatrixXd in = input;
  auto outs = forward(params, spec, in, rng, nullptr);
  std::vector<VectorXd> result;
  result.reserve(outs.size());
  for (auto& o : outs) result.emplace_back(o.col(0));
  return result;
}

Gradients backward(const NetworkParams& params, const NetworkSpec& spec, const Tape& tape,
                   const std::vector<MatrixXd>& head_grads, bool input_gradient) {
  return backward(params.values, spec, tape, head_grads, input_gradient);
}

Gradients backward(const ParamSet& params, const NetworkSpec& spec, const Tape& tape,
                   const std::vector<MatrixXd>& head_grads, bool input_gradient) {
  if (tape.empty()) throw UsageError("backward() called without a recorded forward pass");
  if (head_grads.size() != spec.heads.size())
    throw ConfigError("expected one gradient per head");
  const auto shapes = spec.shapes();
  const Eigen::Index batch = tape.trunk_output.cols();
  const bool train = tape.mode == Mode::train;

  Gradients g;
  g.params = params.zeros_like();
  if (params.weights.size() != spec.parameter_slots())
    throw ConfigError("parameter slots do not match network spec");

  MatrixXd dx = MatrixXd::Zero(tape.trunk_output.rows(), batch);
  for (std::size_t h = 0; h < spec.heads.size(); ++h) {
    const MatrixXd& up = head_grads[h];
    if (up.size() == 0) continue;
    if (up.rows() != spec.heads[h].output_dim || up.cols() != batch)
      throw ConfigError("gradient for head '" + spec.heads[h].name + "' has the wrong shape");
    const std::size_t slot = spec.layers.size() + h;
    const MatrixXd dz = activation_backward(spec.heads[h].activation, tape.head_outputs[h], up);
    g.params.weights[slot].noalias() = dz * tape.trunk_output.transpose();
    g.params.biases[slot] = dz.rowwise().sum();
    dx.noalias() += params.weights[slot].transpose() * dz;
  }

  for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
    const LayerSpec& l = spec.layers[ii];
    const Shape in = shapes[ii];
    const Shape out = shapes[ii + 1];
    const MatrixXd& x = tape.inputs[ii];
    const bool need_dprev = ii > 0 || input_gradient;
    if (!need_dprev && l.kind != LayerKind::dense && l.kind != LayerKind::conv1d) break;
    MatrixXd dprev;
    switch (l.kind) {
      case LayerKind::dense:
        g.params.weights[ii].noalias() = dx * x.transpose();
        g.params.biases[ii] = dx.rowwise().sum();
        if (need_dprev) dprev.noalias() = params.weights[ii].transpose() * dx;
        break;
      case LayerKind::conv1d: {
        const MatrixXd drows = to_position_rows(dx, out);
        const MatrixXd& cols = tape.aux[ii];
        g.params.weights[ii].noalias() = drows.transpose() * cols;
        g.params.biases[ii] = drows.colwise().sum().transpose();
        if (!need_dprev) break;
        MatrixXd dcols(drows.rows(), cols.cols());
        dcols.noalias() = drows * params.weights[ii];
        dprev = MatrixXd::Zero(in.size(), batch);
        const int kw = l.kernel_width;
        for (int ci = 0; ci < in.channels; ++ci) {
          for (int k = 0; k < kw; ++k) {
            const auto src = dcols.col(ci * kw + k);
            for (Eigen::Index b = 0; b < batch; ++b)
              dprev.col(b).segment(static_cast<Eigen::Index>(ci) * in.length + k, out.length) +=
                  src.segment(b * out.length, out.length);
          }
        }
        break;
      }
      case LayerKind::maxpool1d: {
        dprev = MatrixXd::Zero(in.size(), batch);
        const auto& winners = tape.argmax[ii];
        for (Eigen::Index b = 0; b < batch; ++b) {
          for (int o = 0; o < out.size(); ++o) {
            dprev(winners[static_cast<std::size_t>(b * out.size() + o)], b) += dx(o, b);
          }
        }
        break;
      }
      case LayerKind::dropout:
        if (train && l.drop_prob > 0.0) {
          dprev = dx.cwiseProduct(tape.aux[ii]);
        } else {
          dprev = dx;
        }
        break;
      case LayerKind::activation: {
        const MatrixXd& y = tape.aux[ii].size() > 0      ? tape.aux[ii]
                            : ii + 1 < spec.layers.size() ? tape.inputs[ii + 1]
                                                          : tape.trunk_output;
        dprev = activation_backward(l.activation, y, dx);
        break;
      }
    }
    dx = std::move(dprev);
  }
  if (input_gradient) g.input = std::move(dx);
  return g;
}

// ---------------------------------------------------------------------------
// Optimizer

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate >= 0.0) || !std::isfinite(config_.learning_rate))
    throw ConfigError("learning rate must be finite and non-negative");
  if (config_.clip && !(config_.clip->first <= config_.clip->second))
    throw ConfigError("gradient clip range must satisfy lo <= hi");
}

void Optimizer::apply(ParamSet& params, const ParamSet& grads) {
  if (!params.same_shape(grads)) throw ConfigError("gradient shapes do not match parameters");
  if (!grads.all_finite()) throw NumericError("non-finite gradient; update rejected");

  auto clip = [this](const auto& g) {
    using T = std::decay_t<decltype(g)>;
    if (!config_.clip) return T(g);
    return T(g.cwiseMax(config_.clip->first).cwiseMin(config_.clip->second));
  };

  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
      if (params.weights[i].size() == 0) continue;
      params.weights[i] -= lr * clip(grads.weights[i]);
      params.biases[i] -= lr * clip(grads.biases[i]);
    }
    return;
  }

  if (!m_.same_shape(params)) {
    m_ = params.zeros_like();
    v_ = params.zeros_like();
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  auto adam = [&](auto& p, auto& m, auto& v, const auto& graw) {
    const auto gc = clip(graw);
    m = b1 * m + (1.0 - b1) * gc;
    v = b2 * v + (1.0 - b2) * gc.cwiseProduct(gc);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
  };
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (params.weights[i].size() == 0) continue;
    adam(params.weights[i], m_.weights[i], v_.weights[i], grads.weights[i]);
    adam(params.biases[i], m_.biases[i], v_.biases[i], grads.biases[i]);
  }
}

void Optimizer::restore(std::int64_t steps, ParamSet first_moment, ParamSet second_moment) {
  steps_ = steps;
  m_ = std::move(first_moment);
  v_ = std::move(second_moment);
}

void soft_update(ParamSet& target, const ParamSet& online, double tau) {
  if (!target.same_shape(online)) throw ConfigError("soft_update: target and online shapes differ");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("soft_update: tau must lie in [0, 1]");
  if (tau == 0.0) return;
  if (tau == 1.0) {
    target = online;
    return;
  }
  for (std::size_t i = 0; i < target.weights.size(); ++i) {
    target.weights[i] = tau * online.weights[i] + (1.0 - tau) * target.weights[i];
    target.biases[i] = tau * online.biases[i] + (1.0 - tau) * target.biases[i];
  }
}

std::vector<LayerSpec> conv_trunk(int conv_layers, int conv_channels, int conv_kernel, int pool_kernel,
                                  int dense_layers, int dense_units, double drop_prob, Activation hidden) {
  std::vector<LayerSpec> layers;
  // Pooling before the activation: the same function for monotone
  // activations, at a fifth of the elementwise work.
  for (int i = 0; i < conv_layers; ++i) {
    layers.push_back(LayerSpec::conv1d(conv_channels, conv_kernel));
    layers.push_back(LayerSpec::maxpool1d(pool_kernel));
    layers.push_back(LayerSpec::act(hidden));
  }
  auto dense = dense_trunk(dense_layers, dense_units, drop_prob, hidden);
  layers.insert(layers.end(), dense.begin(), dense.end());
  return layers;
}

std::vector<LayerSpec> dense_trunk(int dense_layers, int dense_units, double drop_prob, Activation hidden) {
  std::vector<LayerSpec> layers;
  for (int i = 0; i < dense_layers; ++i) {
    layers.push_back(LayerSpec::dense(dense_units));
    layers.push_back(LayerSpec::act(hidden));
    if (drop_prob > 0.0) layers.push_back(LayerSpec::dropout(drop_prob));
  }
  return layers;
}

}  // namespace risbin::nn
