#include "prt/crc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include "prt/container.hpp"
#include "prt/errors.hpp"
#include "prt/kernels.hpp"
#include "prt/linalg.hpp"

namespace prt::crc {

void validate(const CrcConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw ValidationError("CRC lambda must be positive");
  if (!(cfg.epsilon > 0.0)) throw ValidationError("CRC epsilon must be positive");
}

FeatureDictionary make_dictionary(const Matrix& features, std::span<const int> labels,
                                  std::size_t class_count) {
  if (features.rows() != labels.size())
    throw ShapeError("dictionary features and labels differ in length");
  std::vector<std::vector<std::size_t>> members(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
      throw ValidationError("label " + std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(class_count) + ")");
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  FeatureDictionary dict;
  dict.columns = Matrix(features.cols(), features.rows());
  std::size_t col = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    if (members[c].empty())
      throw ValidationError("class " + std::to_string(c) + " has no training samples");
    dict.classes.push_back({c, col, members[c].size()});
    for (std::size_t i : members[c]) {
      const auto f = features.row(i);
      const double n = linalg::norm2(f);
      if (!(n > 0.0) || !std::isfinite(n))
        throw ValidationError("training sample " + std::to_string(i) +
                              " has a zero or non-finite feature vector");
      for (std::size_t r = 0; r < f.size(); ++r) dict.columns(r, col) = f[r] / n;
      ++col;
    }
  }
  return dict;
}

FeatureDictionary build_dictionary(const nn::NetworkState& m1, const data::LabeledSet& train) {
  data::validate(train);
  return make_dictionary(nn::representation(m1, train.features), train.labels, train.class_count);
}

namespace {

Vector normalized(std::span<const double> y, std::size_t dim) {
  if (y.size() != dim)
    throw ValidationError("test feature has dimension " + std::to_string(y.size()) +
                          ", dictionary expects " + std::to_string(dim));
  const double n = linalg::norm2(y);
  if (!std::isfinite(n)) throw ValidationError("test feature contains non-finite values");
  if (!(n > 0.0)) throw ValidationError("test feature is the zero vector");
  Vector out(y.begin(), y.end());
  for (double& v : out) v /= n;
  return out;
}

// D^T y for the columns of `dict`.
Vector project(const FeatureDictionary& dict, std::span<const double> y) {
  const std::size_t big_n = dict.size();
  Vector out(big_n, 0.0);
  for (std::size_t r = 0; r < dict.dim(); ++r) {
    const double yr = y[r];
    const auto row = dict.columns.row(r);
    for (std::size_t j = 0; j < big_n; ++j) out[j] += row[j] * yr;
  }
  return out;
}

Vector residual_probability(const FeatureDictionary& dict, std::span<const double> y,
                            std::span<const double> alpha, double epsilon) {
  if (alpha.size() != dict.size())
    throw ValidationError("coefficient vector length differs from dictionary size");
  const std::size_t p = dict.dim();
  Vector weights(dict.classes.size());
  Vector recon(p);
  for (std::size_t c = 0; c < dict.classes.size(); ++c) {
    const ClassBlock& b = dict.classes[c];
    std::fill(recon.begin(), recon.end(), 0.0);
    for (std::size_t r = 0; r < p; ++r) {
      const auto row = dict.columns.row(r);
      double s = 0.0;
      for (std::size_t j = b.start; j < b.start + b.count; ++j) s += row[j] * alpha[j];
      recon[r] = s;
    }
    double res = 0.0;
    for (std::size_t r = 0; r < p; ++r) res += (y[r] - recon[r]) * (y[r] - recon[r]);
    const double shifted = std::sqrt(res) + epsilon;
    weights[c] = 1.0 / (shifted * shifted);
  }
  // Normalize relative to the largest weight so an exact reconstruction does
  // not overflow the sum.
  const double top = *std::ranges::max_element(weights);
  double total = 0.0;
  for (double& w : weights) {
    w /= top;
    total += w;
  }
  for (double& w : weights) w /= total;
  return weights;
}

}  // namespace

CrcSolver::CrcSolver(FeatureDictionary dictionary, CrcConfig config)
    : dict_(std::move(dictionary)), cfg_(config) {
  validate(cfg_);
  if (dict_.size() == 0 || dict_.classes.empty()) throw ValidationError("dictionary is empty");
  kernels::gemm_tn(dict_.columns, dict_.columns, factor_);
  for (std::size_t i = 0; i < factor_.rows(); ++i) factor_(i, i) += cfg_.lambda;
  linalg::cholesky_in_place(factor_);
}

Vector CrcSolver::code(std::span<const double> y) const {
  const Vector yn = normalized(y, dict_.dim());
  return linalg::cholesky_solve(factor_, project(dict_, yn));
}

Vector CrcSolver::probability(std::span<const double> y, std::span<const double> alpha) const {
  const Vector yn = normalized(y, dict_.dim());
  return residual_probability(dict_, yn, alpha, cfg_.epsilon);
}

Matrix CrcSolver::probabilities(const Matrix& features) const {
  if (features.cols() != dict_.dim())
    throw ValidationError("feature dimension differs from dictionary dimension");
  Matrix out(features.rows(), dict_.classes.size());
  const auto n = static_cast<std::int64_t>(features.rows());
  // Rows are independent; each is computed exactly as by probability().
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto y = features.row(static_cast<std::size_t>(i));
    const Vector q = probability(y);
    std::ranges::copy(q, out.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

Vector crc_code(const FeatureDictionary& dict, std::span<const double> y, const CrcConfig& cfg) {
  return CrcSolver(dict, cfg).code(y);
}

Vector crc_probability(const FeatureDictionary& dict, std::span<const double> alpha,
                       std::span<const double> y, const CrcConfig& cfg) {
  validate(cfg);
  return residual_probability(dict, normalized(y, dict.dim()), alpha, cfg.epsilon);
}

void save_dictionary(const std::filesystem::path& path, const FeatureDictionary& dict) {
  io::Container c;
  c.manifest.set("kind", "dictionary");
  c.manifest.set("dim", dict.dim());
  c.manifest.set("columns", dict.size());
  c.manifest.set("classes", dict.classes.size());
  for (std::size_t i = 0; i < dict.classes.size(); ++i) {
    const ClassBlock& b = dict.classes[i];
    c.manifest.set("class." + std::to_string(i), std::to_string(b.label) + " " +
                                                     std::to_string(b.start) + " " +
                                                     std::to_string(b.count));
  }
  c.reals.assign(dict.columns.values().begin(), dict.columns.values().end());
  io::write_container(path, c);
}

FeatureDictionary load_dictionary(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path);
  if (c.manifest.get("kind") != "dictionary")
    throw IoError("'" + path.string() + "' is not a feature dictionary");
  FeatureDictionary dict;
  const std::size_t dim = c.manifest.get_u64("dim");
  const std::size_t cols = c.manifest.get_u64("columns");
  if (c.reals.size() != dim * cols)
    throw IoError("'" + path.string() + "' dictionary payload has the wrong length");
  dict.columns = Matrix(dim, cols);
  std::ranges::copy(c.reals, dict.columns.data());
  const std::size_t classes = c.manifest.get_u64("classes");
  std::size_t expected_start = 0;
  for (std::size_t i = 0; i < classes; ++i) {
    ClassBlock b;
    if (std::sscanf(c.manifest.get("class." + std::to_string(i)).c_str(), "%zu %zu %zu", &b.label,
                    &b.start, &b.count) != 3 ||
        b.start != expected_start)
      throw IoError("malformed class entry " + std::to_string(i) + " in '" + path.string() + "'");
    expected_start += b.count;
    dict.classes.push_back(b);
  }
  if (expected_start != cols)
    throw IoError("'" + path.string() + "' class blocks do not cover every column");
  return dict;
}

}  // namespace prt::crc
