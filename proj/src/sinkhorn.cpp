#include "selflabel/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selflabel::sinkhorn {

TransportPlan solve(const DenseMatrix& logits, double lambda, std::size_t iters) {
  if (!(lambda > 0.0)) throw std::invalid_argument("sinkhorn: lambda must be positive");
  if (iters < 1) throw std::invalid_argument("sinkhorn: need at least one iteration");

  const DenseMatrix k = softmax_rows(logits, lambda).mat();
  const std::size_t m = k.rows(), kk = k.cols();
  const double b = 1.0 / static_cast<double>(m);
  const double c = 1.0 / static_cast<double>(kk);

  std::vector<double> u(m, 1.0), v(kk, 1.0);
  for (std::size_t t = 0; t < iters; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < kk; ++j) s += k(i, j) * v[j];
      u[i] = b / std::max(s, kScalingFloor);
    }
    for (std::size_t j = 0; j < kk; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += k(i, j) * u[i];
      v[j] = c / std::max(s, kScalingFloor);
    }
  }
  for (double x : u)
    if (!std::isfinite(x)) throw std::runtime_error("sinkhorn: row scaling diverged");
  for (double x : v)
    if (!std::isfinite(x)) throw std::runtime_error("sinkhorn: column scaling diverged");

  DenseMatrix q(m, kk);
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < (long long)m; ++ii) {
    const std::size_t i = (std::size_t)ii;
    double s = 0.0;
    for (std::size_t j = 0; j < kk; ++j) {
      q(i, j) = u[i] * k(i, j) * v[j];
      s += q(i, j);
    }
    for (std::size_t j = 0; j < kk; ++j) q(i, j) /= s;
  }
  return TransportPlan{DistributionBatch::unchecked(std::move(q))};
}

PlanWithEntropy solve_with_entropy(const DenseMatrix& logits, double lambda,
                                   std::size_t iters) {
  PlanWithEntropy out{solve(logits, lambda, iters), 0.0};
  out.h = entropy(out.plan.q);
  return out;
}

}  // namespace selflabel::sinkhorn
