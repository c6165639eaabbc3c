#include "prt/linalg.hpp"

#include <cmath>

#include "prt/errors.hpp"

namespace prt::linalg {

void cholesky_in_place(Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (!(diag > 0.0)) throw ValidationError("cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(diag);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      const double* ri = a.data() + i * n;
      const double* rj = a.data() + j * n;
      for (std::size_t k = 0; k < j; ++k) s -= ri[k] * rj[k];
      a(i, j) = s / ljj;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
}

Vector cholesky_solve(const Matrix& factor, std::span<const double> b) {
  const std::size_t n = factor.rows();
  if (b.size() != n) throw ShapeError("cholesky_solve: right-hand side has the wrong length");
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= factor(i, k) * x[k];
    x[i] = s / factor(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= factor(k, i) * x[k];
    x[i] = s / factor(i, i);
  }
  return x;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace prt::linalg
