#include "prt/data.hpp"

#include <algorithm>
#include <cmath>

#include "prt/container.hpp"
#include "prt/errors.hpp"
#include "prt/rng.hpp"

namespace prt::data {

std::size_t LabeledSet::count(int label) const {
  return static_cast<std::size_t>(std::ranges::count(labels, label));
}

void validate(const LabeledSet& set) {
  if (set.labels.empty()) throw ValidationError("labeled set is empty");
  if (set.features.rows() != set.labels.size())
    throw ShapeError("labeled set has " + std::to_string(set.features.rows()) + " rows but " +
                     std::to_string(set.labels.size()) + " labels");
  if (set.class_count == 0) throw ValidationError("class_count must be positive");
  for (int y : set.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= set.class_count)
      throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(set.class_count) + ")");
  if (!all_finite(set.features.values()))
    throw ValidationError("labeled set contains non-finite features");
}

void validate(const SynthConfig& cfg) {
  if (cfg.source_classes < 2) throw ValidationError("need at least two source classes");
  if (cfg.dim == 0) throw ValidationError("dim must be positive");
  if (cfg.samples_per_source_class == 0 || cfg.unlabeled_count == 0 ||
      cfg.target_positives == 0 || cfg.target_negatives == 0)
    throw ValidationError("sample counts must be positive");
  if (cfg.negative_anchor >= cfg.source_classes || cfg.positive_anchor >= cfg.source_classes ||
      cfg.negative_anchor == cfg.positive_anchor)
    throw ValidationError("target anchors must be two distinct source classes");
  if (!(cfg.shift >= 0.0) || !(cfg.mode_spread >= 0.0))
    throw ValidationError("shift and mode_spread must be non-negative");
  if (!(cfg.noise > 0.0) || !(cfg.target_noise > 0.0) || !(cfg.class_spread > 0.0))
    throw ValidationError("noise, target_noise and class_spread must be positive");
  if (cfg.target_modes == 0) throw ValidationError("target_modes must be positive");
}

Domains generate_domains(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t d = cfg.dim;

  Domains out;
  out.source_means = Matrix(cfg.source_classes, d);
  for (double& v : out.source_means.values()) v = cfg.class_spread * gauss(rng);

  out.shift_vector.assign(d, 0.0);
  double norm = 0.0;
  for (double& v : out.shift_vector) {
    v = gauss(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : out.shift_vector) v *= cfg.shift / norm;

  auto draw = [&](std::span<const double> mean, std::span<double> row, double noise) {
    for (std::size_t j = 0; j < d; ++j) row[j] = mean[j] + noise * gauss(rng);
  };

  const std::size_t n_source = cfg.source_classes * cfg.samples_per_source_class;
  out.source = {Matrix(n_source, d), std::vector<int>(n_source), cfg.source_classes};
  for (std::size_t c = 0, r = 0; c < cfg.source_classes; ++c)
    for (std::size_t i = 0; i < cfg.samples_per_source_class; ++i, ++r) {
      draw(out.source_means.row(c), out.source.features.row(r), cfg.noise);
      out.source.labels[r] = static_cast<int>(c);
    }

  out.target_means = Matrix(2, d);
  for (std::size_t j = 0; j < d; ++j) {
    out.target_means(0, j) = out.source_means(cfg.negative_anchor, j) + out.shift_vector[j];
    out.target_means(1, j) = out.source_means(cfg.positive_anchor, j) + out.shift_vector[j];
  }

  // Orthonormal basis of the plane holding the sub-mode offsets. The plane
  // contains the direction between the two class means, so wide sub-mode
  // offsets interleave the classes.
  Matrix plane(2, d);
  for (double& v : plane.values()) v = gauss(rng);
  for (std::size_t j = 0; j < d; ++j) plane(0, j) = out.target_means(1, j) - out.target_means(0, j);
  {
    auto a = plane.row(0);
    auto b = plane.row(1);
    double na = 0.0;
    for (double v : a) na += v * v;
    for (double& v : a) v /= std::sqrt(na);
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += a[j] * b[j];
    double nb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      b[j] -= dot * a[j];
      nb += b[j] * b[j];
    }
    for (double& v : b) v /= std::sqrt(nb);
  }

  const std::size_t modes = cfg.target_modes;
  out.mode_centers = Matrix(2 * modes, d);
  for (std::size_t c = 0; c < 2; ++c) {
    Matrix coords(modes, 2);
    for (double& v : coords.values()) v = cfg.mode_spread * gauss(rng);
    for (std::size_t k = 0; k < 2; ++k) {
      double mean = 0.0;
      for (std::size_t m = 0; m < modes; ++m) mean += coords(m, k);
      mean /= static_cast<double>(modes);
      for (std::size_t m = 0; m < modes; ++m) coords(m, k) -= mean;
    }
    for (std::size_t m = 0; m < modes; ++m) {
      auto center = out.mode_centers.row(c * modes + m);
      for (std::size_t j = 0; j < d; ++j)
        center[j] = out.target_means(c, j) + coords(m, 0) * plane(0, j) + coords(m, 1) * plane(1, j);
    }
  }

  const std::size_t n_target = cfg.target_negatives + cfg.target_positives;
  out.target = {Matrix(n_target, d), std::vector<int>(n_target), 2};
  for (std::size_t r = 0; r < n_target; ++r) {
    const bool negative = r < cfg.target_negatives;
    const std::size_t index = negative ? r : r - cfg.target_negatives;
    const std::size_t c = negative ? 0 : 1;
    draw(out.mode_centers.row(c * modes + index % modes), out.target.features.row(r),
         cfg.target_noise);
    out.target.labels[r] = static_cast<int>(c);
  }

  const double p_positive =
      static_cast<double>(cfg.target_positives) / static_cast<double>(n_target);
  std::bernoulli_distribution positive(p_positive);
  std::uniform_int_distribution<std::size_t> pick_mode(0, modes - 1);
  out.unlabeled.features = Matrix(cfg.unlabeled_count, d);
  for (std::size_t r = 0; r < cfg.unlabeled_count; ++r) {
    const std::size_t c = positive(rng) ? 1 : 0;
    draw(out.mode_centers.row(c * modes + pick_mode(rng)), out.unlabeled.features.row(r),
         cfg.target_noise);
  }
  return out;
}

std::vector<std::size_t> block_sizes(std::size_t n, std::size_t fold_count) {
  std::vector<std::size_t> sizes(fold_count, n / fold_count);
  for (std::size_t i = 0; i < n % fold_count; ++i) ++sizes[i];
  return sizes;
}

FoldPlan make_folds(const LabeledSet& set, std::size_t fold_count) {
  validate(set);
  if (fold_count < 2) throw ValidationError("fold_count must be at least 2");

  std::vector<std::vector<std::size_t>> by_class(set.class_count);
  for (std::size_t i = 0; i < set.size(); ++i)
    by_class[static_cast<std::size_t>(set.labels[i])].push_back(i);

  // Test-fold membership of every sample.
  std::vector<std::size_t> fold_of(set.size());
  for (std::size_t c = 0; c < set.class_count; ++c) {
    const auto& members = by_class[c];
    if (members.size() < fold_count)
      throw ValidationError("class " + std::to_string(c) + " has " +
                            std::to_string(members.size()) + " samples, fewer than " +
                            std::to_string(fold_count) + " folds");
    std::size_t pos = 0;
    const auto sizes = block_sizes(members.size(), fold_count);
    for (std::size_t f = 0; f < fold_count; ++f)
      for (std::size_t i = 0; i < sizes[f]; ++i) fold_of[members[pos++]] = f;
  }

  FoldPlan plan;
  plan.fold_count = fold_count;
  plan.folds.resize(fold_count);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t f = 0; f < fold_count; ++f)
      (fold_of[i] == f ? plan.folds[f].test : plan.folds[f].train).push_back(i);
  return plan;
}

LabeledSet subset(const LabeledSet& set, std::span<const std::size_t> indices) {
  LabeledSet out{gather_rows(set.features, indices), {}, set.class_count};
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(set.labels[i]);
  return out;
}

std::size_t kept_positives(std::size_t n, int keep_percent) {
  if (std::ranges::find(kImbalanceRatios, keep_percent) == std::end(kImbalanceRatios))
    throw ValidationError("keep_percent " + std::to_string(keep_percent) +
                          " is not one of 10, 25, 50, 75, 100");
  const auto pct = static_cast<std::size_t>(keep_percent);
  return (n * pct + 99) / 100;
}

LabeledSet apply_imbalance(const LabeledSet& train, int positive_class, int keep_percent) {
  const std::size_t n_pos = train.count(positive_class);
  const std::size_t keep = kept_positives(n_pos, keep_percent);
  if (n_pos == 0) throw ValidationError("training set has no positive samples");

  std::vector<std::size_t> indices;
  indices.reserve(train.size());
  std::size_t seen = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.labels[i] == positive_class && seen++ >= keep) continue;
    indices.push_back(i);
  }
  return subset(train, indices);
}

namespace {

io::Container dataset_container(const Matrix& features, std::size_t class_count, bool labeled) {
  io::Container c;
  c.manifest.set("kind", "dataset");
  c.manifest.set("n", features.rows());
  c.manifest.set("d", features.cols());
  c.manifest.set("class_count", class_count);
  c.manifest.set("has_labels", labeled ? "1" : "0");
  c.reals.assign(features.values().begin(), features.values().end());
  return c;
}

io::Container read_dataset(const std::filesystem::path& path, Matrix& features) {
  io::Container c = io::read_container(path);
  if (c.manifest.get("kind") != "dataset")
    throw IoError("'" + path.string() + "' is not a dataset file");
  const std::size_t n = c.manifest.get_u64("n");
  const std::size_t d = c.manifest.get_u64("d");
  if (c.reals.size() != n * d)
    throw IoError("'" + path.string() + "' feature block does not match n x d");
  features = Matrix(n, d);
  std::ranges::copy(c.reals, features.data());
  return c;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const LabeledSet& set) {
  validate(set);
  io::Container c = dataset_container(set.features, set.class_count, true);
  c.ints.assign(set.labels.begin(), set.labels.end());
  io::write_container(path, c);
}

void save_dataset(const std::filesystem::path& path, const UnlabeledSet& set) {
  io::write_container(path, dataset_container(set.features, 0, false));
}

LabeledSet load_labeled(const std::filesystem::path& path) {
  LabeledSet set;
  const io::Container c = read_dataset(path, set.features);
  if (c.manifest.get("has_labels") != "1")
    throw IoError("'" + path.string() + "' carries no labels");
  set.class_count = c.manifest.get_u64("class_count");
  set.labels.assign(c.ints.begin(), c.ints.end());
  validate(set);
  return set;
}

UnlabeledSet load_unlabeled(const std::filesystem::path& path) {
  UnlabeledSet set;
  read_dataset(path, set.features);
  if (set.features.rows() == 0) throw ValidationError("'" + path.string() + "' has no samples");
  return set;
}

}  // namespace prt::data
