#pragma once

// Datasets, the synthetic source/target domain generator, sequential
// per-class folding and positive-class subsampling.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "prt/matrix.hpp"

namespace prt::data {

struct LabeledSet {
  Matrix features;  // n x d
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t count(int label) const;
  bool operator==(const LabeledSet&) const = default;
};

struct UnlabeledSet {
  Matrix features;  // m x d
  bool operator==(const UnlabeledSet&) const = default;
};

/// Throws ValidationError unless labels are in range, n >= 1 and features
/// are finite.
void validate(const LabeledSet& set);

struct SynthConfig {
  std::size_t source_classes = 10;
  std::size_t dim = 16;
  std::size_t samples_per_source_class = 200;
  std::size_t unlabeled_count = 2000;
  std::size_t target_positives = 349;
  std::size_t target_negatives = 349;
  /// Spread of the source class means around the origin.
  double class_spread = 1.0;
  double shift = 13.3;
  /// Per-coordinate noise std of the source domain.
  double noise = 0.333;
  /// Per-coordinate noise std of the target domain (labeled and unlabeled).
  double target_noise = 0.333;
  /// Sub-modes per target class. Their offsets from the class mean lie in a
  /// random 2-D plane, have length scale `mode_spread` and sum to zero, so
  /// the class mean is exactly anchor + shift.
  std::size_t target_modes = 5;
  double mode_spread = 3.33;
  /// Source classes whose means the target negative / positive classes
  /// inherit (before the shift).
  std::size_t negative_anchor = 0;
  std::size_t positive_anchor = 1;
  std::uint64_t seed = 1;
};

void validate(const SynthConfig& cfg);

struct Domains {
  LabeledSet source;
  UnlabeledSet unlabeled;
  LabeledSet target;  // label 0 = negative, 1 = positive
  Matrix source_means;  // source_classes x dim
  Vector shift_vector;  // dim
  Matrix target_means;  // 2 x dim, anchor means plus the shift
  /// Centre of sub-mode j of class c at row c * target_modes + j.
  Matrix mode_centers;
};

/// Source: isotropic Gaussian clusters, grouped by class in label order.
/// Target: two classes centred on the anchor source means translated by a
/// random direction of length `shift`, each a mixture of `target_modes`
/// Gaussian sub-modes; negatives are stored first and sample i of a class
/// belongs to sub-mode i mod target_modes. Unlabeled: independent draws from
/// the same two-class target mixture with the labels dropped.
Domains generate_domains(const SynthConfig& cfg);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct FoldPlan {
  std::size_t fold_count = 0;
  std::vector<Fold> folds;
};

/// Splits each class, in stored order, into `fold_count` contiguous blocks
/// whose sizes differ by at most one (earlier blocks take the remainder).
/// Fold k tests on block k of every class and trains on the rest.
FoldPlan make_folds(const LabeledSet& set, std::size_t fold_count);

/// Sizes of the contiguous blocks `make_folds` cuts a class of `n` into.
std::vector<std::size_t> block_sizes(std::size_t n, std::size_t fold_count);

LabeledSet subset(const LabeledSet& set, std::span<const std::size_t> indices);

/// Percentages of positives kept in a training fold.
inline constexpr int kImbalanceRatios[] = {10, 25, 50, 75, 100};

/// Number of positives kept: ceil(n * keep_percent / 100).
std::size_t kept_positives(std::size_t n, int keep_percent);

/// Keeps the first kept_positives(n_pos, keep_percent) positives in stored
/// order and every other sample, preserving relative order.
LabeledSet apply_imbalance(const LabeledSet& train, int positive_class, int keep_percent);

/// Manifest keys n, d, class_count, has_labels; features as the real block,
/// labels (if any) as the int block.
void save_dataset(const std::filesystem::path& path, const LabeledSet& set);
void save_dataset(const std::filesystem::path& path, const UnlabeledSet& set);
LabeledSet load_labeled(const std::filesystem::path& path);
UnlabeledSet load_unlabeled(const std::filesystem::path& path);

}  // namespace prt::data
