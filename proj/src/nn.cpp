#include "prt/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "prt/errors.hpp"
#include "prt/kernels.hpp"
#include "prt/rng.hpp"

namespace prt::nn {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

std::string to_string(Group g) {
  return g == Group::representation ? "representation" : "classification";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw ValidationError("unknown activation '" + s + "'");
}

Group parse_group(const std::string& s) {
  if (s == "representation") return Group::representation;
  if (s == "classification") return Group::classification;
  throw ValidationError("unknown layer group '" + s + "'");
}

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.size() < 2) throw ValidationError("network needs a representation and a classification layer");
  bool in_classifier = false;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    if (s.input_dim == 0 || s.output_dim == 0)
      throw ValidationError("layer " + std::to_string(i) + " has a zero dimension");
    if (i > 0 && specs[i - 1].output_dim != s.input_dim)
      throw ValidationError("layer " + std::to_string(i) + " input_dim " +
                            std::to_string(s.input_dim) + " does not match previous output_dim " +
                            std::to_string(specs[i - 1].output_dim));
    if (s.group == Group::classification) {
      in_classifier = true;
    } else if (in_classifier) {
      throw ValidationError("representation layer " + std::to_string(i) +
                            " follows a classification layer");
    }
  }
  if (specs.front().group != Group::representation)
    throw ValidationError("first layer must belong to the representation group");
  const LayerSpec& last = specs.back();
  if (last.group != Group::classification || last.activation != Activation::identity)
    throw ValidationError("final layer must be an identity classification layer");
}

std::vector<LayerSpec> NetworkState::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const Layer& l : layers) out.push_back(l.spec());
  return out;
}

std::size_t NetworkState::representation_depth() const {
  std::size_t d = 0;
  while (d < layers.size() && layers[d].group == Group::representation) ++d;
  return d;
}

std::size_t NetworkState::representation_dim() const {
  return layers[representation_depth() - 1].weights.rows();
}

std::size_t NetworkState::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void validate(const NetworkState& state) {
  if (state.layers.empty()) throw ValidationError("network has no layers");
  for (const Layer& l : state.layers) {
    if (l.bias.size() != l.weights.rows()) throw ShapeError("bias length differs from layer width");
    if (!all_finite(l.weights.values()) || !all_finite(l.bias))
      throw ValidationError("network parameters contain non-finite values");
  }
  const auto specs = state.specs();
  validate_specs(specs);
  if (state.label_count != specs.back().output_dim)
    throw ValidationError("label_count " + std::to_string(state.label_count) +
                          " differs from final layer width " +
                          std::to_string(specs.back().output_dim));
}

NetworkState init_network(std::span<const LayerSpec> specs, std::uint64_t seed) {
  validate_specs(specs);
  Rng rng(seed);
  NetworkState state;
  state.seed = seed;
  state.label_count = specs.back().output_dim;
  for (const LayerSpec& s : specs) {
    const double fan_in = static_cast<double>(s.input_dim);
    const double stddev = std::sqrt((s.activation == Activation::relu ? 2.0 : 1.0) / fan_in);
    std::normal_distribution<double> dist(0.0, stddev);
    Layer layer{Matrix(s.output_dim, s.input_dim), Vector(s.output_dim, 0.0), s.activation,
                s.group};
    for (double& w : layer.weights.values()) w = dist(rng);
    state.layers.push_back(std::move(layer));
  }
  return state;
}

Gradients Gradients::zeros_like(const NetworkState& state) {
  Gradients g;
  for (const Layer& l : state.layers) {
    g.weights.emplace_back(l.weights.rows(), l.weights.cols());
    g.biases.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

namespace {

void check_inputs(const NetworkState& state, const Matrix& inputs) {
  if (inputs.cols() != state.input_dim())
    throw ShapeError("input has " + std::to_string(inputs.cols()) + " features, network expects " +
                     std::to_string(state.input_dim()));
  if (!all_finite(inputs.values())) throw ValidationError("input contains non-finite values");
}

// Applies layer `l` to `in`: out = act(in * W^T + b).
Matrix apply_layer(const Layer& l, const Matrix& in) {
  Matrix out;
  kernels::gemm_nt(in, l.weights, out);
  const std::size_t width = out.cols();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* row = out.data() + r * width;
    for (std::size_t c = 0; c < width; ++c) {
      const double z = row[c] + l.bias[c];
      row[c] = (l.activation == Activation::relu && z < 0.0) ? 0.0 : z;
    }
  }
  return out;
}

// Activations of every layer; entry 0 is the input itself.
std::vector<Matrix> forward_tape(const NetworkState& state, const Matrix& inputs) {
  std::vector<Matrix> tape;
  tape.reserve(state.layers.size() + 1);
  tape.push_back(inputs);
  for (const Layer& l : state.layers) tape.push_back(apply_layer(l, tape.back()));
  return tape;
}

// In-place row softmax; returns per-row log-sum-exp of the logits.
Vector softmax_rows(Matrix& logits) {
  Vector lse(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double mx = *std::ranges::max_element(row);
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
    lse[r] = mx + std::log(sum);
  }
  return lse;
}

void check_labels(std::span<const int> labels, std::size_t rows, std::size_t label_count) {
  if (labels.size() != rows) throw ShapeError("label count differs from sample count");
  if (labels.empty()) throw ValidationError("at least one sample is required");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= label_count)
      throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(label_count) + ")");
}

}  // namespace

Matrix forward(const NetworkState& state, const Matrix& inputs) {
  check_inputs(state, inputs);
  Matrix h = inputs;
  for (const Layer& l : state.layers) h = apply_layer(l, h);
  softmax_rows(h);
  return h;
}

Matrix representation(const NetworkState& state, const Matrix& inputs) {
  check_inputs(state, inputs);
  Matrix h = inputs;
  const std::size_t depth = state.representation_depth();
  for (std::size_t i = 0; i < depth; ++i) h = apply_layer(state.layers[i], h);
  return h;
}

LossAndGrad loss_and_grad(const NetworkState& state, const Matrix& inputs,
                          std::span<const int> labels) {
  check_inputs(state, inputs);
  check_labels(labels, inputs.rows(), state.label_count);

  std::vector<Matrix> tape = forward_tape(state, inputs);
  Matrix logits = tape.back();
  const Vector lse = softmax_rows(logits);
  Matrix& probs = logits;

  const std::size_t n = inputs.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossAndGrad out;
  out.grads = Gradients::zeros_like(state);

  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) loss += lse[r] - tape.back()(r, labels[r]);
  out.loss = loss * inv_n;

  // delta = dLoss/dz for the current layer, starting at the logits.
  Matrix delta = probs;
  for (std::size_t r = 0; r < n; ++r) {
    delta(r, labels[r]) -= 1.0;
    for (double& v : delta.row(r)) v *= inv_n;
  }

  for (std::size_t li = state.layers.size(); li-- > 0;) {
    kernels::gemm_tn(delta, tape[li], out.grads.weights[li]);
    Vector& db = out.grads.biases[li];
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = delta.row(r);
      for (std::size_t c = 0; c < db.size(); ++c) db[c] += row[c];
    }
    if (li == 0) break;
    Matrix prev;
    kernels::gemm_nn(delta, state.layers[li].weights, prev);
    if (state.layers[li - 1].activation == Activation::relu) {
      const Matrix& act = tape[li];
      for (std::size_t i = 0; i < prev.size(); ++i)
        if (act.data()[i] <= 0.0) prev.data()[i] = 0.0;
    }
    delta = std::move(prev);
  }
  return out;
}

void sgd_update(NetworkState& state, const Gradients& grads, Gradients& velocity,
                const TrainConfig& config) {
  const std::size_t n = state.layers.size();
  if (grads.weights.size() != n || grads.biases.size() != n || velocity.weights.size() != n ||
      velocity.biases.size() != n)
    throw ShapeError("gradient buffers do not match the network layer count");

  for (std::size_t li = 0; li < n; ++li) {
    Layer& layer = state.layers[li];
    if (grads.weights[li].rows() != layer.weights.rows() ||
        grads.weights[li].cols() != layer.weights.cols() ||
        velocity.weights[li].rows() != layer.weights.rows() ||
        velocity.weights[li].cols() != layer.weights.cols() ||
        grads.biases[li].size() != layer.bias.size() ||
        velocity.biases[li].size() != layer.bias.size())
      throw ShapeError("gradient shape differs from layer " + std::to_string(li));
    if (config.frozen_groups.contains(layer.group)) continue;

    const double lr = config.base_lr * (layer.group == Group::classification
                                            ? config.classifier_lr_multiplier
                                            : 1.0);
    auto step = [&](std::span<double> theta, std::span<const double> g, std::span<double> v) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = config.momentum * v[i] - lr * g[i];
        theta[i] += v[i];
      }
    };
    step(layer.weights.values(), grads.weights[li].values(), velocity.weights[li].values());
    step(layer.bias, grads.biases[li], velocity.biases[li]);
  }
}

NetworkState replace_head(const NetworkState& state, std::size_t new_label_count,
                          std::uint64_t init_seed) {
  if (new_label_count < 2) throw ValidationError("a classifier head needs at least two labels");
  Rng rng(init_seed);
  std::normal_distribution<double> dist(0.0, 0.01);

  NetworkState out;
  out.seed = init_seed;
  out.label_count = new_label_count;
  const std::size_t depth = state.representation_depth();
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    const Layer& src = state.layers[i];
    if (i < depth) {
      out.layers.push_back(src);
      continue;
    }
    const bool last = i + 1 == state.layers.size();
    const std::size_t rows = last ? new_label_count : src.weights.rows();
    Layer layer{Matrix(rows, src.weights.cols()), Vector(rows, 0.0), src.activation, src.group};
    for (double& w : layer.weights.values()) w = dist(rng);
    out.layers.push_back(std::move(layer));
  }
  return out;
}

double mean_loss(const NetworkState& state, const Matrix& inputs, std::span<const int> labels) {
  check_inputs(state, inputs);
  check_labels(labels, inputs.rows(), state.label_count);
  Matrix logits = inputs;
  for (const Layer& l : state.layers) logits = apply_layer(l, logits);
  Matrix probs = logits;
  const Vector lse = softmax_rows(probs);
  double loss = 0.0;
  for (std::size_t r = 0; r < inputs.rows(); ++r) loss += lse[r] - logits(r, labels[r]);
  return loss / static_cast<double>(inputs.rows());
}

std::vector<int> predict(const NetworkState& state, const Matrix& inputs) {
  const Matrix probs = forward(state, inputs);
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    out[r] = static_cast<int>(std::ranges::max_element(row) - row.begin());
  }
  return out;
}

std::vector<double> train(NetworkState& state, const Matrix& inputs, std::span<const int> labels,
                          const TrainConfig& config,
                          const std::function<void(const EpochStats&)>& on_epoch) {
  check_inputs(state, inputs);
  check_labels(labels, inputs.rows(), state.label_count);
  if (config.batch_size == 0) throw ValidationError("batch_size must be positive");
  if (config.base_lr <= 0.0 || config.classifier_lr_multiplier <= 0.0)
    throw ValidationError("learning rates must be positive");
  if (config.momentum < 0.0 || config.momentum >= 1.0)
    throw ValidationError("momentum must lie in [0, 1)");

  Rng rng(config.seed);
  Gradients velocity = Gradients::zeros_like(state);
  std::vector<std::size_t> order(inputs.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> history;
  history.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(begin + config.batch_size, order.size());
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Matrix batch = gather_rows(inputs, idx);
      std::vector<int> batch_labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) batch_labels[i] = labels[idx[i]];

      LossAndGrad lg = loss_and_grad(state, batch, batch_labels);
      if (!std::isfinite(lg.loss))
        throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch));
      total += lg.loss * static_cast<double>(idx.size());
      sgd_update(state, lg.grads, velocity, config);
    }
    const double mean = total / static_cast<double>(order.size());
    history.push_back(mean);
    if (on_epoch) {
      const std::chrono::duration<double, std::milli> elapsed =
          std::chrono::steady_clock::now() - start;
      on_epoch({epoch, mean, elapsed.count()});
    }
  }
  for (const Layer& l : state.layers)
    if (!all_finite(l.weights.values()) || !all_finite(l.bias))
      throw DivergenceError("parameters became non-finite during training");
  return history;
}

}  // namespace prt::nn
