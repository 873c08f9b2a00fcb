#include "selflabel/kernels.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace selflabel {

namespace {

void check_mul(std::size_t ac, std::size_t br, const char* who) {
  if (ac != br) throw std::invalid_argument(std::string(who) + ": inner dims differ");
}

}  // namespace

namespace kernels {

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

DenseMatrix gemm_nn(const DenseMatrix& a, const DenseMatrix& b) {
  check_mul(a.cols(), b.rows(), "gemm_nn");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseMatrix c(m, n);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < (long long)m; ++ii) {
    const std::size_t i = (std::size_t)ii;
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b) {
  check_mul(a.cols(), b.cols(), "gemm_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  DenseMatrix c(m, n);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < (long long)m; ++ii) {
    const std::size_t i = (std::size_t)ii;
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
  return c;
}

DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b) {
  check_mul(a.rows(), b.rows(), "gemm_tn");
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  DenseMatrix c(m, n);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < (long long)m; ++ii) {
    const std::size_t i = (std::size_t)ii;
    double* ci = c.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a(p, i);
      const double* bp = b.row(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

void add_row_vector(DenseMatrix& m, const std::vector<double>& v) {
  if (v.size() != m.cols())
    throw std::invalid_argument("add_row_vector: length mismatch");
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < (long long)m.rows(); ++ii) {
    double* r = m.row((std::size_t)ii);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += v[j];
  }
}

}  // namespace kernels

namespace ref {

DenseMatrix gemm_nn(const DenseMatrix& a, const DenseMatrix& b) {
  check_mul(a.cols(), b.rows(), "ref::gemm_nn");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double aip = a(i, p);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aip * b(p, j);
    }
  return c;
}

DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b) {
  check_mul(a.cols(), b.cols(), "ref::gemm_nt");
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  return c;
}

DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b) {
  check_mul(a.rows(), b.rows(), "ref::gemm_tn");
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t p = 0; p < a.rows(); ++p) {
      const double api = a(p, i);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += api * b(p, j);
    }
  return c;
}

}  // namespace ref

}  // namespace selflabel
