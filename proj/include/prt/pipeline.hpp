#pragma once

// The three training stages:
//   source  supervised training of the source model on the source domain;
//   prt     pre-text representation transfer: the source classifier layers
//           stay fixed while the representation layers learn to predict the
//           cluster pseudo-labels of unlabeled target data;
//   tl      conventional transfer learning: a fresh head for the target
//           labels, classifier layers at 10x the base learning rate.

#include <iosfwd>
#include <span>
#include <string>

#include "prt/clustering.hpp"
#include "prt/data.hpp"
#include "prt/nn.hpp"

namespace prt::pipeline {

enum class Stage { source, prt, tl };

std::string to_string(Stage s);

struct StageConfig {
  Stage stage = Stage::source;
  nn::TrainConfig train;
};

/// Stage defaults: source 30 epochs at lr 1e-2; prt 15 epochs, lr 3e-4,
/// batch 16, classifier frozen; tl 7 epochs, lr 3e-4, batch 16, classifier
/// lr x10. Momentum 0.9 throughout.
StageConfig default_stage(Stage stage);

/// Enforces the freezing / multiplier pattern that defines each stage.
void validate(const StageConfig& cfg);

/// Trains a freshly initialized network on the source domain. The returned
/// model has label_count = specs.back().output_dim.
nn::NetworkState pretrain_source(std::span<const nn::LayerSpec> specs,
                                 const data::LabeledSet& source, const StageConfig& cfg,
                                 std::ostream* log = nullptr);

/// Representation transfer on pseudo-labels. Requires the pseudo-label count
/// to equal the source label count; the classifier layers of the result are
/// bit-identical to those of `source_model`.
nn::NetworkState prt_train(const nn::NetworkState& source_model,
                           const clustering::PseudoLabeledSet& pseudo, const StageConfig& cfg,
                           std::ostream* log = nullptr);

/// Replaces the head with `label_count` outputs and fine-tunes on the target
/// training fold. Classes missing from the fold are reported in the log.
nn::NetworkState tl_train(const nn::NetworkState& start, const data::LabeledSet& target_train,
                          const StageConfig& cfg, std::size_t label_count = 2,
                          std::ostream* log = nullptr);

/// Fraction of samples whose argmax prediction equals the label.
double accuracy(const nn::NetworkState& state, const data::LabeledSet& set);

}  // namespace prt::pipeline
