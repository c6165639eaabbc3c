#pragma once

// Collaborative-representation classifier over a structured feature
// dictionary. A test feature y is coded over all training features at once,
//
//   alpha = argmin ||y - D alpha||^2 + lambda ||alpha||^2,
//
// and each class is scored by how well its own columns reconstruct y. The
// per-class residuals are mapped to a probability vector
// q_c = (r_c + eps)^-2 / sum_j (r_j + eps)^-2.

#include <filesystem>
#include <span>
#include <vector>

#include "prt/data.hpp"
#include "prt/matrix.hpp"
#include "prt/nn.hpp"

namespace prt::crc {

struct ClassBlock {
  std::size_t label = 0;
  std::size_t start = 0;
  std::size_t count = 0;

  bool operator==(const ClassBlock&) const = default;
};

/// Columns are unit-norm features grouped by ascending class; blocks may
/// have different widths.
struct FeatureDictionary {
  Matrix columns;  // p x N
  std::vector<ClassBlock> classes;

  std::size_t dim() const { return columns.rows(); }
  std::size_t size() const { return columns.cols(); }
  bool operator==(const FeatureDictionary&) const = default;
};

struct CrcConfig {
  double lambda = 1e-3;
  double epsilon = 1e-12;
};

void validate(const CrcConfig& cfg);

/// Builds the dictionary from feature rows (N x p) and their labels. Every
/// class in [0, class_count) must be present and no feature may be zero.
FeatureDictionary make_dictionary(const Matrix& features, std::span<const int> labels,
                                  std::size_t class_count);

/// Dictionary of the representation-layer features of `train` under `m1`.
FeatureDictionary build_dictionary(const nn::NetworkState& m1, const data::LabeledSet& train);

/// Caches the Cholesky factor of D^T D + lambda I so many test vectors can be
/// coded against one dictionary. Immutable after construction.
class CrcSolver {
 public:
  CrcSolver(FeatureDictionary dictionary, CrcConfig config);

  const FeatureDictionary& dictionary() const { return dict_; }
  const CrcConfig& config() const { return cfg_; }

  /// Coding coefficients of the normalized y.
  Vector code(std::span<const double> y) const;
  /// Class probabilities of the normalized y given its coefficients.
  Vector probability(std::span<const double> y, std::span<const double> alpha) const;
  Vector probability(std::span<const double> y) const { return probability(y, code(y)); }
  /// One probability row per feature row (n x p in, n x C out).
  Matrix probabilities(const Matrix& features) const;

 private:
  FeatureDictionary dict_;
  CrcConfig cfg_;
  Matrix factor_;
};

Vector crc_code(const FeatureDictionary& dict, std::span<const double> y, const CrcConfig& cfg);
Vector crc_probability(const FeatureDictionary& dict, std::span<const double> alpha,
                       std::span<const double> y, const CrcConfig& cfg);

void save_dictionary(const std::filesystem::path& path, const FeatureDictionary& dict);
FeatureDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace prt::crc
