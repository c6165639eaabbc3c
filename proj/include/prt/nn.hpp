#pragma once

// Dense feed-forward classifier whose layers are tagged as belonging to the
// representation component (earlier layers) or the classification component
// (deeper layers ending in the logits). Training is plain softmax
// cross-entropy with momentum SGD, per-group learning rates and group
// freezing.

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prt/matrix.hpp"

namespace prt::nn {

enum class Activation { relu, identity };
enum class Group { representation, classification };

std::string to_string(Activation a);
std::string to_string(Group g);
Activation parse_activation(const std::string& s);
Group parse_group(const std::string& s);

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::relu;
  Group group = Group::representation;

  bool operator==(const LayerSpec&) const = default;
};

/// Throws ValidationError unless the layers chain, the representation layers
/// form a non-empty prefix, and the last layer is identity/classification.
void validate_specs(std::span<const LayerSpec> specs);

struct Layer {
  Matrix weights;  // output_dim x input_dim
  Vector bias;     // output_dim
  Activation activation = Activation::relu;
  Group group = Group::representation;

  LayerSpec spec() const {
    return {weights.cols(), weights.rows(), activation, group};
  }
  bool operator==(const Layer&) const = default;
};

struct NetworkState {
  std::vector<Layer> layers;
  std::size_t label_count = 0;
  std::uint64_t seed = 0;

  std::vector<LayerSpec> specs() const;
  std::size_t input_dim() const { return layers.front().weights.cols(); }
  /// Index one past the last representation layer.
  std::size_t representation_depth() const;
  /// Width of the representation output, i.e. the classifier's input.
  std::size_t representation_dim() const;
  std::size_t parameter_count() const;

  bool operator==(const NetworkState&) const = default;
};

/// Checks the layer chain and the label-count / finiteness invariants.
void validate(const NetworkState& state);

/// He-normal weights for relu layers, unit-variance scaling for the logits
/// layer, zero biases.
NetworkState init_network(std::span<const LayerSpec> specs, std::uint64_t seed);

/// Gradient or velocity buffers, shape-identical to a NetworkState.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const NetworkState& state);
  bool operator==(const Gradients&) const = default;
};

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 16;
  double base_lr = 3e-4;
  double classifier_lr_multiplier = 1.0;
  double momentum = 0.9;
  std::set<Group> frozen_groups;
  std::uint64_t seed = 0;
};

/// Row-wise softmax class probabilities.
Matrix forward(const NetworkState& state, const Matrix& inputs);

/// Activation of the last representation layer (the classifier's input).
Matrix representation(const NetworkState& state, const Matrix& inputs);

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

/// Mean softmax cross-entropy and its gradient for every parameter,
/// including parameters of groups that will be frozen at update time.
LossAndGrad loss_and_grad(const NetworkState& state, const Matrix& inputs,
                          std::span<const int> labels);

/// velocity <- momentum * velocity - lr_group * grads; params += velocity.
/// Groups listed in config.frozen_groups are left untouched.
void sgd_update(NetworkState& state, const Gradients& grads, Gradients& velocity,
                const TrainConfig& config);

/// Reinitializes every classification layer (N(0, 0.01^2) weights, zero bias)
/// with the final layer resized to `new_label_count` outputs. Representation
/// layers are copied unchanged.
NetworkState replace_head(const NetworkState& state, std::size_t new_label_count,
                          std::uint64_t init_seed);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double elapsed_ms = 0.0;
};

/// Minibatch training with a per-epoch shuffle drawn from config.seed. The
/// last partial batch is kept. Throws DivergenceError on a non-finite loss.
/// Returns the mean training loss of each epoch.
std::vector<double> train(NetworkState& state, const Matrix& inputs, std::span<const int> labels,
                          const TrainConfig& config,
                          const std::function<void(const EpochStats&)>& on_epoch = {});

/// Mean cross-entropy of the whole set under the current parameters.
double mean_loss(const NetworkState& state, const Matrix& inputs, std::span<const int> labels);

/// Index of the largest probability per row, lowest index on ties.
std::vector<int> predict(const NetworkState& state, const Matrix& inputs);

}  // namespace prt::nn
