#pragma once

#include <span>

#include "prt/matrix.hpp"

namespace prt::linalg {

/// Overwrites the lower triangle of the symmetric positive definite `a` with
/// its Cholesky factor L (a = L L^T); the strict upper triangle is zeroed.
/// Throws ValidationError if a pivot is not positive.
void cholesky_in_place(Matrix& a);

/// Solves L L^T x = b given the factor from cholesky_in_place.
Vector cholesky_solve(const Matrix& factor, std::span<const double> b);

double norm2(std::span<const double> v);

}  // namespace prt::linalg
