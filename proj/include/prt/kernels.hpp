#pragma once

// Dense kernels used by training, clustering and dictionary coding.
//
// Every kernel exists twice: `serial` is the plain reference loop nest and
// `omp` the OpenMP-parallel version. Both accumulate each output element in
// the same order, so their results are bit-identical for any thread count.
// Library code calls the unqualified names, which resolve to `omp`.

#include <span>

#include "prt/matrix.hpp"

namespace prt::kernels {

namespace serial {

/// c = a * b^T  (a: m x k, b: n x k, c: m x n)
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
/// c = a * b    (a: m x k, b: k x n, c: m x n)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
/// c = a^T * b  (a: k x m, b: k x n, c: m x n)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);

/// For every row of `points`, index of the nearest row of `centers` under
/// squared Euclidean distance (lowest index on ties) and that distance.
void nearest_center(const Matrix& points, const Matrix& centers, std::span<int> labels,
                    std::span<double> distances);

}  // namespace serial

namespace omp {

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void nearest_center(const Matrix& points, const Matrix& centers, std::span<int> labels,
                    std::span<double> distances);

}  // namespace omp

using omp::gemm_nn;
using omp::gemm_nt;
using omp::gemm_tn;
using omp::nearest_center;

}  // namespace prt::kernels
