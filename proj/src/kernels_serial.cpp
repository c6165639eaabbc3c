#include <limits>
#include <string>

#include "prt/errors.hpp"
#include "prt/kernels.hpp"

namespace prt::kernels {

namespace detail {

void check_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("gemm_nt: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.cols()) + " differ");
}

void check_nn(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ShapeError("gemm_nn: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
}

void check_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ShapeError("gemm_tn: inner dimensions " + std::to_string(a.rows()) + " and " +
                     std::to_string(b.rows()) + " differ");
}

void check_nearest(const Matrix& points, const Matrix& centers, std::size_t labels,
                   std::size_t distances) {
  if (points.cols() != centers.cols())
    throw ShapeError("nearest_center: point dimension differs from center dimension");
  if (centers.rows() == 0) throw ShapeError("nearest_center: no centers");
  if (labels != points.rows() || distances != points.rows())
    throw ShapeError("nearest_center: output spans must have one entry per point");
}

}  // namespace detail

namespace serial {

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  detail::check_nt(a, b);
  c = Matrix(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.data() + i * k;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c(i, j) = s;
    }
  }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  detail::check_nn(a, b);
  c = Matrix(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  detail::check_tn(a, b);
  c = Matrix(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.cols(); ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < a.rows(); ++p) {
      const double api = a(p, i);
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void nearest_center(const Matrix& points, const Matrix& centers, std::span<int> labels,
                    std::span<double> distances) {
  detail::check_nearest(points, centers, labels.size(), distances.size());
  const std::size_t dim = points.cols();
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const double* x = points.data() + i * dim;
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (std::size_t j = 0; j < centers.rows(); ++j) {
      const double* m = centers.data() + j * dim;
      double d = 0.0;
      for (std::size_t p = 0; p < dim; ++p) {
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

}  // namespace serial
}  // namespace prt::kernels
