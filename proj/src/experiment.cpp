#include "prt/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include "prt/checkpoint.hpp"
#include "prt/clustering.hpp"
#include "prt/container.hpp"
#include "prt/errors.hpp"
#include "prt/rng.hpp"

namespace prt::experiment {

using metrics::Method;
using pipeline::Stage;

bool ExperimentConfig::wants(Method m) const {
  return std::ranges::find(methods, m) != methods.end();
}

namespace {

std::uint64_t to_u64(const std::string& v) {
  std::size_t used = 0;
  const auto x = std::stoull(v, &used);
  if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
  return x;
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = io::trim(item);
    if (item.empty()) throw std::invalid_argument(v);
    out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument(v);
  return out;
}

std::string real(double v) {
  // Shortest text that parses back to the same double.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

template <class T>
std::string join(const std::vector<T>& items, auto&& fmt) {
  std::string out;
  for (const T& i : items) out += (out.empty() ? "" : ",") + fmt(i);
  return out;
}

struct Setting {
  const char* key;
  void (*set)(ExperimentConfig&, const std::string&);
  std::string (*get)(const ExperimentConfig&);
};

#define PRT_SIZE(KEY, FIELD)                                                          \
  Setting {                                                                           \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_u64(v); },      \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }             \
  }
#define PRT_REAL(KEY, FIELD)                                                          \
  Setting {                                                                           \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.FIELD = to_double(v); },   \
        [](const ExperimentConfig& c) { return real(c.FIELD); }                       \
  }
#define PRT_STAGE(PREFIX, STAGE)                          \
  PRT_SIZE(PREFIX ".epochs", STAGE.train.epochs),         \
      PRT_SIZE(PREFIX ".batch", STAGE.train.batch_size),  \
      PRT_REAL(PREFIX ".lr", STAGE.train.base_lr),        \
      PRT_REAL(PREFIX ".momentum", STAGE.train.momentum)

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table = {
      PRT_SIZE("seed", seed),
      Setting{"out", [](ExperimentConfig& c, const std::string& v) { c.out = v; },
              [](const ExperimentConfig& c) { return c.out.string(); }},
      PRT_SIZE("folds", fold_count),
      Setting{"ratios",
              [](ExperimentConfig& c, const std::string& v) {
                c.ratios.clear();
                for (const auto& r : split_list(v)) c.ratios.push_back(static_cast<int>(to_u64(r)));
              },
              [](const ExperimentConfig& c) {
                return join(c.ratios, [](int r) { return std::to_string(r); });
              }},
      Setting{"methods",
              [](ExperimentConfig& c, const std::string& v) {
                c.methods.clear();
                for (const auto& m : split_list(v)) c.methods.push_back(metrics::parse_method(m));
              },
              [](const ExperimentConfig& c) {
                return join(c.methods, [](Method m) { return metrics::to_string(m); });
              }},
      PRT_SIZE("threads", threads),
      PRT_SIZE("source_classes", synth.source_classes),
      PRT_SIZE("dim", synth.dim),
      PRT_SIZE("samples_per_source_class", synth.samples_per_source_class),
      PRT_SIZE("unlabeled_count", synth.unlabeled_count),
      PRT_SIZE("target_positives", synth.target_positives),
      PRT_SIZE("target_negatives", synth.target_negatives),
      PRT_REAL("class_spread", synth.class_spread),
      PRT_REAL("shift", synth.shift),
      PRT_REAL("noise", synth.noise),
      PRT_REAL("target_noise", synth.target_noise),
      PRT_SIZE("target_modes", synth.target_modes),
      PRT_REAL("mode_spread", synth.mode_spread),
      Setting{"hidden",
              [](ExperimentConfig& c, const std::string& v) {
                c.hidden.clear();
                for (const auto& h : split_list(v)) c.hidden.push_back(to_u64(h));
              },
              [](const ExperimentConfig& c) {
                return join(c.hidden, [](std::size_t h) { return std::to_string(h); });
              }},
      Setting{"embedding",
              [](ExperimentConfig& c, const std::string& v) { c.embedding = nn::parse_activation(v); },
              [](const ExperimentConfig& c) { return nn::to_string(c.embedding); }},
      PRT_STAGE("source", source),
      PRT_STAGE("prt", prt),
      PRT_STAGE("tl", tl),
      PRT_REAL("crc.lambda", crc.lambda),
      PRT_REAL("crc.epsilon", crc.epsilon),
      PRT_SIZE("kmeans.iters", kmeans_iters),
      PRT_REAL("kmeans.tol", kmeans_tol),
  };
  return table;
}

#undef PRT_SIZE
#undef PRT_REAL
#undef PRT_STAGE

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const Setting& s : settings()) {
    if (key != s.key) continue;
    try {
      s.set(cfg, value);
    } catch (const std::exception&) {
      throw ConfigError("invalid value '" + value + "' for '" + key + "'");
    }
    return;
  }
  throw ConfigError("unknown setting '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    // Parse one line at a time so errors carry the right line number.
    try {
      for (const auto& [k, v] : io::parse_key_values(line, origin)) apply_setting(cfg, k, v);
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      const std::string prefix = origin + ":1: ";
      if (msg.starts_with(prefix)) msg = msg.substr(prefix.size());
      throw ConfigError(origin + ":" + std::to_string(number) + ": " + msg);
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const Setting& s : settings()) out += std::string(s.key) + " = " + s.get(cfg) + "\n";
  return out;
}

void validate(const ExperimentConfig& cfg) {
  data::validate(cfg.synth);
  if (cfg.hidden.empty() || std::ranges::find(cfg.hidden, std::size_t{0}) != cfg.hidden.end())
    throw ConfigError("hidden must list one or more positive layer widths");
  pipeline::validate(cfg.source);
  pipeline::validate(cfg.prt);
  pipeline::validate(cfg.tl);
  crc::validate(cfg.crc);
  if (cfg.ratios.empty()) throw ConfigError("ratios must not be empty");
  for (int r : cfg.ratios)
    if (std::ranges::find(data::kImbalanceRatios, r) == std::end(data::kImbalanceRatios))
      throw ConfigError("ratio " + std::to_string(r) + " is not one of 10, 25, 50, 75, 100");
  if (cfg.methods.empty()) throw ConfigError("methods must not be empty");
  if (cfg.fold_count < 2) throw ConfigError("folds must be at least 2");
  if (cfg.threads == 0) throw ConfigError("threads must be positive");
  if (cfg.synth.target_positives < cfg.fold_count || cfg.synth.target_negatives < cfg.fold_count)
    throw ConfigError("every target class needs at least one sample per fold");
  if (cfg.synth.unlabeled_count < cfg.synth.source_classes)
    throw ConfigError("unlabeled_count must be at least source_classes for clustering");
}

std::vector<nn::LayerSpec> network_specs(const ExperimentConfig& cfg) {
  std::vector<nn::LayerSpec> specs;
  std::size_t in = cfg.synth.dim;
  for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
    const bool last = i + 1 == cfg.hidden.size();
    specs.push_back({in, cfg.hidden[i], last ? cfg.embedding : nn::Activation::relu,
                     nn::Group::representation});
    in = cfg.hidden[i];
  }
  specs.push_back({in, cfg.synth.source_classes, nn::Activation::identity,
                   nn::Group::classification});
  return specs;
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t fold, int ratio, Method method,
                        Stage stage, std::uint64_t salt) {
  return derive_seed(master, {hash_tag("cell"), fold, static_cast<std::uint64_t>(ratio),
                              hash_tag(metrics::to_string(method)),
                              hash_tag(pipeline::to_string(stage)), salt});
}

ArtifactStore::ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ArtifactStore::cell_dir(int ratio, std::size_t fold) const {
  return root_ / std::to_string(ratio) / std::to_string(fold);
}

std::filesystem::path ArtifactStore::require(const std::filesystem::path& path) const {
  if (!std::filesystem::exists(path))
    throw ConfigError("missing prerequisite file '" + path.string() + "'");
  std::lock_guard lock(mutex_);
  reads_.push_back(path);
  return path;
}

std::vector<std::filesystem::path> ArtifactStore::reads() const {
  std::lock_guard lock(mutex_);
  return reads_;
}

void ArtifactStore::clear_reads() {
  std::lock_guard lock(mutex_);
  reads_.clear();
}

std::vector<Cell> grid(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (int r : cfg.ratios)
    for (std::size_t f = 0; f < cfg.fold_count; ++f) cells.push_back({r, f});
  return cells;
}

void for_each_cell(const ExperimentConfig& cfg, const std::function<void(const Cell&)>& stage) {
  const auto cells = grid(cfg);
  std::vector<std::exception_ptr> errors(cells.size());
  const auto n = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(cfg.threads))
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      stage(cells[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

constexpr std::uint64_t kDataTag = hash_tag("data");
constexpr std::uint64_t kSourceTag = hash_tag("source");

data::SynthConfig synth_for(const ExperimentConfig& cfg) {
  data::SynthConfig s = cfg.synth;
  s.seed = derive_seed(cfg.seed, {kDataTag});
  return s;
}

std::ofstream open_log(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream log(path, std::ios::trunc);
  if (!log) throw IoError("cannot open log file '" + path.string() + "'");
  return log;
}

struct CellData {
  data::LabeledSet train;  // after imbalance
  data::LabeledSet test;
};

CellData cell_data(const ExperimentConfig& cfg, const ArtifactStore& store, const Cell& cell) {
  const data::LabeledSet target = data::load_labeled(store.require(store.root() / "target.bin"));
  const data::FoldPlan plan = data::make_folds(target, cfg.fold_count);
  const data::Fold& fold = plan.folds.at(cell.fold);
  CellData out;
  out.train =
      data::apply_imbalance(data::subset(target, fold.train), cfg.positive_class, cell.ratio);
  out.test = data::subset(target, fold.test);
  return out;
}

pipeline::StageConfig seeded(pipeline::StageConfig stage, std::uint64_t seed) {
  stage.train.seed = seed;
  return stage;
}

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    out[r] = static_cast<int>(std::ranges::max_element(row) - row.begin());
  }
  return out;
}

metrics::FoldRow score(const ExperimentConfig& cfg, const Cell& cell, Method method,
                       std::span<const int> predictions, std::span<const int> truth) {
  const metrics::Metrics m = metrics::compute_metrics(
      metrics::confusion_counts(predictions, truth, cfg.positive_class));
  if (!std::isfinite(m.sen) || !std::isfinite(m.spe) || !std::isfinite(m.f1) ||
      !std::isfinite(m.acc))
    throw ValidationError("non-finite metric in cell " + std::to_string(cell.ratio) + "/" +
                          std::to_string(cell.fold));
  return {cell.fold, cell.ratio, method, m.sen, m.spe, m.f1, m.acc};
}

}  // namespace

void generate(const ExperimentConfig& cfg, ArtifactStore& store) {
  validate(cfg);
  const data::SynthConfig synth = synth_for(cfg);
  const data::Domains d = data::generate_domains(synth);
  data::save_dataset(store.root() / "source.bin", d.source);
  data::save_dataset(store.root() / "unlabeled.bin", d.unlabeled);
  data::save_dataset(store.root() / "target.bin", d.target);
  std::ofstream manifest(store.root() / "data.manifest", std::ios::trunc);
  manifest << "# synthetic domains\n"
           << "data_seed = " << synth.seed << "\n"
           << echo_config(cfg);
  if (!manifest) throw IoError("cannot write data.manifest");
}

void pretrain(const ExperimentConfig& cfg, ArtifactStore& store) {
  validate(cfg);
  const data::LabeledSet source = data::load_labeled(store.require(store.root() / "source.bin"));
  std::ofstream log = open_log(store.root() / "source.log");
  const auto specs = network_specs(cfg);
  const nn::NetworkState model = pipeline::pretrain_source(
      specs, source, seeded(cfg.source, derive_seed(cfg.seed, {kSourceTag})), &log);
  save_network(store.root() / "source.ckpt", model);
}

void cluster(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell) {
  const nn::NetworkState source = load_network(store.require(store.root() / "source.ckpt"));
  const data::UnlabeledSet unlabeled =
      data::load_unlabeled(store.require(store.root() / "unlabeled.bin"));
  const auto result = clustering::make_pseudo_labels(
      source, unlabeled.features, source.label_count,
      cell_seed(cfg.seed, cell.fold, cell.ratio, Method::prt_tl, Stage::prt, hash_tag("kmeans")),
      cfg.kmeans_iters, cfg.kmeans_tol);
  clustering::save_cluster_model(store.cell_dir(cell.ratio, cell.fold) / "cluster.ckpt",
                                 result.model);
}

void prt(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell) {
  const auto dir = store.cell_dir(cell.ratio, cell.fold);
  const nn::NetworkState source = load_network(store.require(store.root() / "source.ckpt"));
  const data::UnlabeledSet unlabeled =
      data::load_unlabeled(store.require(store.root() / "unlabeled.bin"));
  const clustering::ClusterModel model =
      clustering::load_cluster_model(store.require(dir / "cluster.ckpt"));
  if (model.assignments.size() != unlabeled.features.rows())
    throw ConfigError("'" + (dir / "cluster.ckpt").string() +
                      "' was fitted on a different unlabeled set");
  const clustering::PseudoLabeledSet pseudo{unlabeled.features, model.assignments, model.k};
  std::ofstream log = open_log(dir / "prt.log");
  const nn::NetworkState m1 = pipeline::prt_train(
      source, pseudo,
      seeded(cfg.prt, cell_seed(cfg.seed, cell.fold, cell.ratio, Method::prt_tl, Stage::prt)),
      &log);
  save_network(dir / "prt.ckpt", m1);
}

void tl(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell) {
  const auto dir = store.cell_dir(cell.ratio, cell.fold);
  const CellData d = cell_data(cfg, store, cell);
  if (cfg.wants(Method::tl)) {
    const nn::NetworkState source = load_network(store.require(store.root() / "source.ckpt"));
    std::ofstream log = open_log(dir / "tl.log");
    const nn::NetworkState model = pipeline::tl_train(
        source, d.train,
        seeded(cfg.tl, cell_seed(cfg.seed, cell.fold, cell.ratio, Method::tl, Stage::tl)), 2,
        &log);
    save_network(dir / "tl.ckpt", model);
  }
  if (cfg.wants_prt()) {
    const nn::NetworkState m1 = load_network(store.require(dir / "prt.ckpt"));
    std::ofstream log = open_log(dir / "prt_tl.log");
    const nn::NetworkState m2 = pipeline::tl_train(
        m1, d.train,
        seeded(cfg.tl, cell_seed(cfg.seed, cell.fold, cell.ratio, Method::prt_tl, Stage::tl)), 2,
        &log);
    save_network(dir / "prt_tl.ckpt", m2);
  }
}

void dict(const ExperimentConfig& cfg, ArtifactStore& store, const Cell& cell) {
  const auto dir = store.cell_dir(cell.ratio, cell.fold);
  const CellData d = cell_data(cfg, store, cell);
  const nn::NetworkState m1 = load_network(store.require(dir / "prt.ckpt"));
  crc::save_dictionary(dir / "dict.ckpt", crc::build_dictionary(m1, d.train));
}

std::vector<metrics::FoldRow> evaluate_cell(const ExperimentConfig& cfg, ArtifactStore& store,
                                            const Cell& cell) {
  const auto dir = store.cell_dir(cell.ratio, cell.fold);
  const CellData d = cell_data(cfg, store, cell);
  std::vector<metrics::FoldRow> rows;
  for (Method method : metrics::kAllMethods) {
    if (!cfg.wants(method)) continue;
    std::vector<int> predictions;
    switch (method) {
      case Method::tl: {
        const nn::NetworkState model = load_network(store.require(dir / "tl.ckpt"));
        predictions = nn::predict(model, d.test.features);
        break;
      }
      case Method::prt_tl: {
        const nn::NetworkState m2 = load_network(store.require(dir / "prt_tl.ckpt"));
        predictions = nn::predict(m2, d.test.features);
        break;
      }
      case Method::all: {
        const nn::NetworkState m2 = load_network(store.require(dir / "prt_tl.ckpt"));
        const nn::NetworkState m1 = load_network(store.require(dir / "prt.ckpt"));
        const crc::CrcSolver solver(crc::load_dictionary(store.require(dir / "dict.ckpt")),
                                    cfg.crc);
        const Matrix rho = nn::forward(m2, d.test.features);
        const Matrix q = solver.probabilities(nn::representation(m1, d.test.features));
        Matrix fused(rho.rows(), rho.cols());
        for (std::size_t i = 0; i < rho.rows(); ++i) {
          const auto f = metrics::fuse_predict(rho.row(i), q.row(i));
          std::ranges::copy(f.fused, fused.row(i).begin());
        }
        predictions = argmax_rows(fused);
        break;
      }
    }
    rows.push_back(score(cfg, cell, method, predictions, d.test.labels));
  }
  return rows;
}

metrics::MetricsReport evaluate(const ExperimentConfig& cfg, ArtifactStore& store) {
  validate(cfg);
  const auto cells = grid(cfg);
  std::vector<std::vector<metrics::FoldRow>> per_cell(cells.size());
  for_each_cell(cfg, [&](const Cell& cell) {
    const auto pos = static_cast<std::size_t>(
        std::ranges::find_if(cells, [&](const Cell& c) {
          return c.ratio == cell.ratio && c.fold == cell.fold;
        }) - cells.begin());
    per_cell[pos] = evaluate_cell(cfg, store, cell);
  });
  std::vector<metrics::FoldRow> rows;
  for (auto& r : per_cell) rows.insert(rows.end(), r.begin(), r.end());
  metrics::MetricsReport report = metrics::aggregate_folds(std::move(rows));

  std::filesystem::create_directories(store.root());
  std::ofstream csv(store.root() / "report.csv", std::ios::trunc);
  metrics::write_csv(csv, report);
  std::ofstream txt(store.root() / "report.txt", std::ios::trunc);
  metrics::write_tables(txt, report);
  std::ofstream folds(store.root() / "folds.csv", std::ios::trunc);
  metrics::write_fold_csv(folds, report);
  if (!csv || !txt || !folds) throw IoError("cannot write report files");
  return report;
}

metrics::MetricsReport run_experiment(const ExperimentConfig& cfg, ArtifactStore& store) {
  validate(cfg);
  generate(cfg, store);
  pretrain(cfg, store);
  for_each_cell(cfg, [&](const Cell& cell) {
    if (cfg.wants_prt()) {
      cluster(cfg, store, cell);
      prt(cfg, store, cell);
    }
    tl(cfg, store, cell);
    if (cfg.wants(Method::all)) dict(cfg, store, cell);
  });
  return evaluate(cfg, store);
}

metrics::MetricsReport run_experiment(const ExperimentConfig& cfg) {
  ArtifactStore store(cfg.out);
  return run_experiment(cfg, store);
}

}  // namespace prt::experiment
