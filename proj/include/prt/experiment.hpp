#pragma once

// Experiment grid orchestration. Every (ratio, fold) cell trains its own
// models from the shared source model; artifacts live under
//
//   <out>/source.bin, unlabeled.bin, target.bin, data.manifest
//   <out>/source.ckpt, source.log
//   <out>/<ratio>/<fold>/{tl,cluster,prt,prt_tl,dict}.ckpt and matching .log
//   <out>/report.csv, report.txt, folds.csv
//
// Each stage function reads its prerequisites from disk through an
// ArtifactStore, which records every file it opens.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "prt/crc.hpp"
#include "prt/data.hpp"
#include "prt/metrics.hpp"
#include "prt/nn.hpp"
#include "prt/pipeline.hpp"

namespace prt::experiment {

struct ExperimentConfig {
  data::SynthConfig synth;
  std::vector<std::size_t> hidden = {64, 256};
  /// Activation of the last representation layer (the feature embedding).
  nn::Activation embedding = nn::Activation::relu;
  pipeline::StageConfig source = pipeline::default_stage(pipeline::Stage::source);
  pipeline::StageConfig prt = pipeline::default_stage(pipeline::Stage::prt);
  pipeline::StageConfig tl = pipeline::default_stage(pipeline::Stage::tl);
  crc::CrcConfig crc;
  std::size_t kmeans_iters = 100;
  double kmeans_tol = 1e-6;
  std::vector<int> ratios = {10, 25, 50, 75, 100};
  std::size_t fold_count = 5;
  std::vector<metrics::Method> methods = {metrics::Method::tl, metrics::Method::prt_tl,
                                          metrics::Method::all};
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  int positive_class = 1;

  bool wants(metrics::Method m) const;
  /// PRT artifacts are needed by both PRT+TL and All.
  bool wants_prt() const { return wants(metrics::Method::prt_tl) || wants(metrics::Method::all); }
};

/// Parses `key = value` lines; unknown keys and bad values raise ConfigError
/// carrying `origin:line`.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every effective setting as `key = value` lines, parseable by parse_config.
std::string echo_config(const ExperimentConfig& cfg);
/// Applies one `key = value` setting; throws ConfigError on failure.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate(const ExperimentConfig& cfg);

/// Representation layers from `hidden` (relu, the last one using
/// cfg.embedding), then the source-label logits layer.
std::vector<nn::LayerSpec> network_specs(const ExperimentConfig& cfg);

/// Seed of one stage of one grid cell. Depends only on the master seed and
/// the cell coordinates, never on which other methods are enabled.
std::uint64_t cell_seed(std::uint64_t master, std::size_t fold, int ratio, metrics::Method method,
                        pipeline::Stage stage, std::uint64_t salt = 0);

class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path cell_dir(int ratio, std::size_t fold) const;

  /// Path of an input artifact; throws ConfigError naming it when missing and
  /// records the access otherwise.
  std::filesystem::path require(const std::filesystem::path& path) const;
  std::vector<std::filesystem::path> reads() const;
  void clear_reads();

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::vector<std::filesystem::path> reads_;
};

struct Cell {
  int ratio = 100;
  std::size_t fold = 0;
};

std::vector<Cell> grid(const ExperimentConfig& cfg);

void generate(const ExperimentConfig& cfg, ArtifactStore& store);
void pretrain(const ExperimentConfig& cfg, ArtifactStore& store);
void cluster(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell);
void prt(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell);
/// Trains the TL baseline and/or PRT+TL model of a cell, per cfg.methods.
void tl(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell);
void dict(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell);
/// Per-fold metric rows of one cell for every requested method.
std::vector<metrics::FoldRow> evaluate_cell(const ExperimentConfig& cfg, ArtifactStore& store,
                                            const Cell& cell);

/// Runs `stage` for every grid cell on up to cfg.threads workers.
/// Exceptions are collected and the one from the earliest cell rethrown.
void for_each_cell(const ExperimentConfig& cfg, const std::function<void(const Cell&)>& stage);

/// Evaluates every cell and writes report.csv, report.txt and folds.csv.
metrics::MetricsReport evaluate(const ExperimentConfig& cfg, ArtifactStore& store);

/// generate, pretrain, per-cell cluster/prt/tl/dict, evaluate.
metrics::MetricsReport run_experiment(const ExperimentConfig& cfg, ArtifactStore& store);
metrics::MetricsReport run_experiment(const ExperimentConfig& cfg);

}  // namespace prt::experiment
