#pragma once

#include "selflabel/matrix.hpp"

namespace selflabel {

// Hot linear-algebra loops. The omp variants parallelise over output rows;
// every row keeps the serial inner-loop order, so results are bit-identical
// to the serial reference at any thread count.
namespace kernels {

// Caps the OpenMP thread pool (SELFLABEL_THREADS env var is applied by the
// CLI at startup). n <= 0 leaves the runtime default untouched.
void set_max_threads(int n);

// C = A * B
DenseMatrix gemm_nn(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B
DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b);

// out(i,j) = m(i,j) + v(j)
void add_row_vector(DenseMatrix& m, const std::vector<double>& v);

}  // namespace kernels

// Serial reference implementations, kept for testing and benchmarking.
namespace ref {

DenseMatrix gemm_nn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace ref

}  // namespace selflabel
