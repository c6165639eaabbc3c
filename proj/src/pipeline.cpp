#include "prt/pipeline.hpp"

#include <cstdio>
#include <ostream>

#include "prt/errors.hpp"
#include "prt/rng.hpp"

namespace prt::pipeline {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::source: return "source";
    case Stage::prt: return "prt";
    case Stage::tl: return "tl";
  }
  return "?";
}

StageConfig default_stage(Stage stage) {
  StageConfig cfg;
  cfg.stage = stage;
  cfg.train.batch_size = 16;
  cfg.train.momentum = 0.9;
  cfg.train.base_lr = 3e-4;
  switch (stage) {
    case Stage::source:
      cfg.train.epochs = 30;
      cfg.train.base_lr = 1e-2;
      break;
    case Stage::prt:
      cfg.train.epochs = 15;
      cfg.train.frozen_groups = {nn::Group::classification};
      break;
    case Stage::tl:
      cfg.train.epochs = 7;
      cfg.train.classifier_lr_multiplier = 10.0;
      break;
  }
  return cfg;
}

void validate(const StageConfig& cfg) {
  const auto& t = cfg.train;
  const std::string name = to_string(cfg.stage);
  switch (cfg.stage) {
    case Stage::prt:
      if (t.frozen_groups != std::set<nn::Group>{nn::Group::classification} ||
          t.classifier_lr_multiplier != 1.0)
        throw ConfigError("stage prt must freeze exactly the classification group with multiplier 1");
      break;
    case Stage::tl:
      if (!t.frozen_groups.empty() || t.classifier_lr_multiplier != 10.0)
        throw ConfigError("stage tl must freeze nothing and use classifier multiplier 10");
      break;
    case Stage::source:
      if (!t.frozen_groups.empty() || t.classifier_lr_multiplier != 1.0)
        throw ConfigError("stage source must freeze nothing and use classifier multiplier 1");
      break;
  }
  if (t.epochs == 0 || t.batch_size == 0 || !(t.base_lr > 0.0))
    throw ConfigError("stage " + name + ": epochs, batch_size and base_lr must be positive");
}

namespace {

void log_epoch(std::ostream* log, const nn::EpochStats& s) {
  if (log == nullptr) return;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu %.9f %.3f\n", s.epoch, s.mean_loss, s.elapsed_ms);
  *log << buf;
}

std::vector<double> run_stage(nn::NetworkState& state, const Matrix& x, std::span<const int> y,
                              const StageConfig& cfg, std::ostream* log) {
  try {
    return nn::train(state, x, y, cfg.train, [log](const nn::EpochStats& s) { log_epoch(log, s); });
  } catch (const DivergenceError& e) {
    throw DivergenceError("stage " + to_string(cfg.stage) + " diverged: " + e.what());
  }
}

}  // namespace

nn::NetworkState pretrain_source(std::span<const nn::LayerSpec> specs,
                                 const data::LabeledSet& source, const StageConfig& cfg,
                                 std::ostream* log) {
  if (cfg.stage != Stage::source) throw ConfigError("pretrain_source needs a source stage config");
  validate(cfg);
  nn::validate_specs(specs);
  data::validate(source);
  if (source.class_count > specs.back().output_dim)
    throw ValidationError("source labels exceed the network's " +
                          std::to_string(specs.back().output_dim) + " outputs");
  nn::NetworkState state = nn::init_network(specs, derive_seed(cfg.train.seed, {hash_tag("init")}));
  run_stage(state, source.features, source.labels, cfg, log);
  return state;
}

nn::NetworkState prt_train(const nn::NetworkState& source_model,
                           const clustering::PseudoLabeledSet& pseudo, const StageConfig& cfg,
                           std::ostream* log) {
  if (cfg.stage != Stage::prt) throw ConfigError("prt_train needs a prt stage config");
  validate(cfg);
  if (pseudo.cluster_count != source_model.label_count)
    throw ConfigError("pseudo-label count K=" + std::to_string(pseudo.cluster_count) +
                      " must equal the source label count " +
                      std::to_string(source_model.label_count));
  if (pseudo.labels.empty()) throw ValidationError("pseudo-labeled set is empty");
  for (int y : pseudo.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= pseudo.cluster_count)
      throw ValidationError("pseudo-label " + std::to_string(y) + " out of range");
  nn::NetworkState state = source_model;
  run_stage(state, pseudo.features, pseudo.labels, cfg, log);
  return state;
}

nn::NetworkState tl_train(const nn::NetworkState& start, const data::LabeledSet& target_train,
                          const StageConfig& cfg, std::size_t label_count, std::ostream* log) {
  if (cfg.stage != Stage::tl) throw ConfigError("tl_train needs a tl stage config");
  validate(cfg);
  if (target_train.labels.empty()) throw ValidationError("target training set is empty");
  data::validate(target_train);
  if (target_train.class_count > label_count)
    throw ValidationError("target labels exceed the requested head size");
  if (log != nullptr)
    for (std::size_t c = 0; c < label_count; ++c)
      if (target_train.count(static_cast<int>(c)) == 0)
        *log << "warning: class " << c << " has no training samples\n";

  nn::NetworkState state =
      nn::replace_head(start, label_count, derive_seed(cfg.train.seed, {hash_tag("head")}));
  run_stage(state, target_train.features, target_train.labels, cfg, log);
  return state;
}

double accuracy(const nn::NetworkState& state, const data::LabeledSet& set) {
  const auto pred = nn::predict(state, set.features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == set.labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace prt::pipeline
