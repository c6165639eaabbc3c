#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the code paths it checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "prt/matrix.hpp"
#include "prt/nn.hpp"
#include "prt/rng.hpp"

namespace oracle {

using prt::Matrix;
using prt::Vector;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  prt::Rng rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = g(rng);
  return m;
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
inline Matrix invert(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw std::runtime_error("singular");
    for (std::size_t c = 0; c < n; ++c) {
      std::swap(a(col, c), a(pivot, c));
      std::swap(inv(col, c), inv(pivot, c));
    }
    const double d = a(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      a(col, c) /= d;
      inv(col, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) -= f * a(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

/// alpha = (D^T D + lambda I)^-1 D^T y with D given as p x N, y normalized.
inline Vector ridge_by_inversion(const Matrix& d, std::span<const double> y_raw, double lambda) {
  const std::size_t p = d.rows(), n = d.cols();
  double norm = 0.0;
  for (double v : y_raw) norm += v * v;
  norm = std::sqrt(norm);
  Matrix gram(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < p; ++r) s += d(r, i) * d(r, j);
      gram(i, j) = s + (i == j ? lambda : 0.0);
    }
  Vector rhs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < p; ++r) rhs[i] += d(r, i) * y_raw[r] / norm;
  const Matrix inv = invert(gram);
  Vector alpha(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) alpha[i] += inv(i, j) * rhs[j];
  return alpha;
}

/// Class probabilities by masking alpha to each class's columns and
/// normalizing inverse squared residuals.
inline Vector masked_residual_probability(const Matrix& d, std::span<const int> column_class,
                                          std::size_t classes, std::span<const double> alpha,
                                          std::span<const double> y_raw, double eps) {
  double norm = 0.0;
  for (double v : y_raw) norm += v * v;
  norm = std::sqrt(norm);
  Vector w(classes);
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    double res = 0.0;
    for (std::size_t r = 0; r < d.rows(); ++r) {
      double recon = 0.0;
      for (std::size_t j = 0; j < d.cols(); ++j)
        recon += d(r, j) * (column_class[j] == static_cast<int>(c) ? alpha[j] : 0.0);
      res += (y_raw[r] / norm - recon) * (y_raw[r] / norm - recon);
    }
    w[c] = std::pow(std::sqrt(res) + eps, -2.0);
    total += w[c];
  }
  for (double& v : w) v /= total;
  return w;
}

/// Every parameter of a network as a flat list of references.
inline std::vector<double*> parameters(prt::nn::NetworkState& s) {
  std::vector<double*> out;
  for (auto& l : s.layers) {
    for (double& w : l.weights.values()) out.push_back(&w);
    for (double& b : l.bias) out.push_back(&b);
  }
  return out;
}

/// Plain per-sample forward pass and mean cross-entropy, written without the
/// library's kernels.
inline double cross_entropy(const prt::nn::NetworkState& s, const Matrix& x,
                            std::span<const int> y) {
  double total = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    std::vector<double> h(x.row(n).begin(), x.row(n).end());
    for (const auto& l : s.layers) {
      std::vector<double> z(l.weights.rows());
      for (std::size_t o = 0; o < z.size(); ++o) {
        double acc = l.bias[o];
        for (std::size_t i = 0; i < h.size(); ++i) acc += l.weights(o, i) * h[i];
        z[o] = (l.activation == prt::nn::Activation::relu) ? std::max(0.0, acc) : acc;
      }
      h = std::move(z);
    }
    double mx = h[0];
    for (double v : h) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : h) sum += std::exp(v - mx);
    total += -(h[static_cast<std::size_t>(y[n])] - mx - std::log(sum));
  }
  return total / static_cast<double>(x.rows());
}

/// Smallest |pre-activation| of any relu unit over the batch; central
/// differences are unreliable when this is below the step size.
inline double relu_margin(const prt::nn::NetworkState& s, const Matrix& x) {
  double margin = INFINITY;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    std::vector<double> h(x.row(n).begin(), x.row(n).end());
    for (const auto& l : s.layers) {
      std::vector<double> z(l.weights.rows());
      for (std::size_t o = 0; o < z.size(); ++o) {
        double acc = l.bias[o];
        for (std::size_t i = 0; i < h.size(); ++i) acc += l.weights(o, i) * h[i];
        if (l.activation == prt::nn::Activation::relu) {
          margin = std::min(margin, std::abs(acc));
          acc = std::max(0.0, acc);
        }
        z[o] = acc;
      }
      h = std::move(z);
    }
  }
  return margin;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Central-difference check of every parameter. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(prt::nn::NetworkState s, const Matrix& x, std::span<const int> y,
                                 const std::vector<double>& analytic, double step = 1e-5,
                                 double floor = 1e-6) {
  GradCheck out;
  auto params = parameters(s);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = *params[i];
    *params[i] = orig + step;
    const double up = cross_entropy(s, x, y);
    *params[i] = orig - step;
    const double down = cross_entropy(s, x, y);
    *params[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++out.checked;
  }
  return out;
}

inline std::vector<double> flatten(const prt::nn::Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].values().begin(), g.weights[l].values().end());
    out.insert(out.end(), g.biases[l].begin(), g.biases[l].end());
  }
  return out;
}

struct MetricOracle {
  double sen, spe, ppv, f1, acc;
};

/// SEN/SPE/F1/ACC straight from their definitions, zero on empty ratios.
inline MetricOracle metric_formulas(double tp, double tn, double fp, double fn) {
  auto safe = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
  const double tpr = safe(tp, tp + fn);
  const double ppv = safe(tp, tp + fp);
  return {100.0 * tpr, 100.0 * safe(tn, tn + fp), ppv, safe(2.0 * ppv * tpr, ppv + tpr),
          100.0 * (tp + tn) / (tp + tn + fp + fn)};
}

}  // namespace oracle
