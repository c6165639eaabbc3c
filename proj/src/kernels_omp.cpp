#include <omp.h>

#include <cstdint>
#include <limits>

#include "prt/errors.hpp"
#include "prt/kernels.hpp"

namespace prt::kernels {

namespace detail {
void check_nt(const Matrix& a, const Matrix& b);
void check_nn(const Matrix& a, const Matrix& b);
void check_tn(const Matrix& a, const Matrix& b);
void check_nearest(const Matrix& points, const Matrix& centers, std::size_t labels,
                   std::size_t distances);
}  // namespace detail

namespace omp {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::int64_t kParallelWork = 1 << 15;
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  detail::check_nt(a, b);
  c = Matrix(a.rows(), b.rows());
  const auto m = static_cast<std::int64_t>(a.rows());
  const auto n = static_cast<std::int64_t>(b.rows());
  const auto k = static_cast<std::int64_t>(a.cols());
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = ad + i * k;
    for (std::int64_t j = 0; j < n; ++j) {
      const double* bj = bd + j * k;
      double s = 0.0;
      for (std::int64_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      cd[i * n + j] = s;
    }
  }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  detail::check_nn(a, b);
  c = Matrix(a.rows(), b.cols());
  const auto m = static_cast<std::int64_t>(a.rows());
  const auto n = static_cast<std::int64_t>(b.cols());
  const auto k = static_cast<std::int64_t>(a.cols());
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = cd + i * n;
    for (std::int64_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      const double* bp = bd + p * n;
#pragma omp simd
      for (std::int64_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  detail::check_tn(a, b);
  c = Matrix(a.cols(), b.cols());
  const auto m = static_cast<std::int64_t>(a.cols());
  const auto n = static_cast<std::int64_t>(b.cols());
  const auto k = static_cast<std::int64_t>(a.rows());
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > kParallelWork)
  for (std::int64_t i = 0; i < m; ++i) {
    double* ci = cd + i * n;
    for (std::int64_t p = 0; p < k; ++p) {
      const double api = ad[p * m + i];
      const double* bp = bd + p * n;
#pragma omp simd
      for (std::int64_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void nearest_center(const Matrix& points, const Matrix& centers, std::span<int> labels,
                    std::span<double> distances) {
  detail::check_nearest(points, centers, labels.size(), distances.size());
  const auto count = static_cast<std::int64_t>(points.rows());
  const auto kc = static_cast<std::int64_t>(centers.rows());
  const auto dim = static_cast<std::int64_t>(points.cols());
#pragma omp parallel for schedule(static) if (count * kc * dim > kParallelWork)
  for (std::int64_t i = 0; i < count; ++i) {
    const double* x = points.data() + i * dim;
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (std::int64_t j = 0; j < kc; ++j) {
      const double* m = centers.data() + j * dim;
      double d = 0.0;
      for (std::int64_t p = 0; p < dim; ++p) {
        const double diff = x[p] - m[p];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        best_j = static_cast<int>(j);
      }
    }
    labels[i] = best_j;
    distances[i] = best;
  }
}

}  // namespace omp
}  // namespace prt::kernels
