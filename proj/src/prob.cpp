#include "selflabel/prob.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selflabel {

DistributionBatch::DistributionBatch(DenseMatrix m) : mat_(std::move(m)) {
  for (std::size_t i = 0; i < mat_.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < mat_.cols(); ++j) {
      const double p = mat_(i, j);
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("DistributionBatch: entry outside [0,1]");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-9)
      throw std::invalid_argument("DistributionBatch: row does not sum to 1");
  }
}

DistributionBatch softmax_rows(const DenseMatrix& logits, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("softmax_rows: temperature must be positive");
  logits.require_finite("softmax_rows");
  DenseMatrix out(logits.rows(), logits.cols());
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < (long long)logits.rows(); ++ii) {
    const std::size_t i = (std::size_t)ii;
    const double* in = logits.row(i);
    double* o = out.row(i);
    const std::size_t k = logits.cols();
    double mx = in[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, in[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      o[j] = std::exp((in[j] - mx) / temperature);
      s += o[j];
    }
    for (std::size_t j = 0; j < k; ++j) o[j] /= s;
  }
  return DistributionBatch::unchecked(std::move(out));
}

double entropy(const DistributionBatch& dist) {
  const DenseMatrix& m = dist.mat();
  double h = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double p = m(i, j);
      if (p > 0.0) h -= p * std::log(p);
    }
  return h / static_cast<double>(m.rows());
}

double kl_divergence(const DistributionBatch& pi, const DistributionBatch& gamma) {
  const DenseMatrix& p = pi.mat();
  const DenseMatrix& g = gamma.mat();
  if (!p.same_shape(g))
    throw std::invalid_argument("kl_divergence: shape mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const double a = p(i, j);
      if (a > 0.0) d += a * (std::log(a) - std::log(std::max(g(i, j), kLogFloor)));
    }
  return d / static_cast<double>(p.rows());
}

}  // namespace selflabel
