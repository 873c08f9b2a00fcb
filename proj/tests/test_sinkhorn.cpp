#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "selflabel/rng.hpp"
#include "selflabel/sinkhorn.hpp"

using namespace selflabel;

namespace {

// High-precision oracle: same alternating-scaling scheme but run to
// convergence with long double accumulation, written scalar-by-scalar.
DenseMatrix oracle_sinkhorn(const DenseMatrix& logits, double lambda,
                            std::size_t iters) {
  const std::size_t m = logits.rows(), k = logits.cols();
  std::vector<long double> kmat(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    long double mx = logits(i, 0);
    for (std::size_t j = 1; j < k; ++j) mx = std::max<long double>(mx, logits(i, j));
    long double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      kmat[i * k + j] = std::exp((static_cast<long double>(logits(i, j)) - mx) /
                                 static_cast<long double>(lambda));
      z += kmat[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) kmat[i * k + j] /= z;
  }
  std::vector<long double> u(m, 1.0L), v(k, 1.0L);
  const long double b = 1.0L / static_cast<long double>(m);
  const long double c = 1.0L / static_cast<long double>(k);
  for (std::size_t t = 0; t < iters; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      long double kv = 0.0L;
      for (std::size_t j = 0; j < k; ++j) kv += kmat[i * k + j] * v[j];
      u[i] = b / kv;
    }
    for (std::size_t j = 0; j < k; ++j) {
      long double ku = 0.0L;
      for (std::size_t i = 0; i < m; ++i) ku += kmat[i * k + j] * u[i];
      v[j] = c / ku;
    }
  }
  DenseMatrix q(m, k);
  for (std::size_t i = 0; i < m; ++i) {
    long double row = 0.0L;
    for (std::size_t j = 0; j < k; ++j) row += u[i] * kmat[i * k + j] * v[j];
    for (std::size_t j = 0; j < k; ++j)
      q(i, j) = static_cast<double>(u[i] * kmat[i * k + j] * v[j] / row);
  }
  return q;
}

}  // namespace

TEST_CASE("uniform logits are a fixed point") {
  DenseMatrix logits(5, 4, 2.5);
  TransportPlan plan = sinkhorn::solve(logits, 0.7, 1);
  for (double v : plan.q.mat().values())
    CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("diagonal-dominant logits converge to near-permutation rows") {
  DenseMatrix logits(3, 3);
  for (std::size_t i = 0; i < 3; ++i) logits(i, i) = 10.0;
  auto solved = sinkhorn::solve_with_entropy(logits, 1.0, 50);
  for (std::size_t i = 0; i < 3; ++i) CHECK(solved.plan.q.mat()(i, i) >= 0.99);
  CHECK(solved.h <= 0.05);
  DenseMatrix oracle = oracle_sinkhorn(logits, 1.0, 50);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(solved.plan.q.mat()(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-10));
}

TEST_CASE("solver matches the long-double oracle on random batches") {
  Rng rng(31);
  for (int t = 0; t < 5; ++t) {
    DenseMatrix logits = sample_gaussian(rng, 12, 7);
    TransportPlan plan = sinkhorn::solve(logits, 0.6, 10);
    DenseMatrix oracle = oracle_sinkhorn(logits, 0.6, 10);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 7; ++j)
        CHECK(plan.q.mat()(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-10));
  }
}

TEST_CASE("column means approach the balanced marginal") {
  Rng rng(32);
  DenseMatrix logits = sample_gaussian(rng, 4, 2);
  TransportPlan plan = sinkhorn::solve(logits, 0.5, 10);
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean += plan.q.mat()(i, j);
    mean /= 4.0;
    CHECK(std::abs(mean - 0.5) <= 1e-3);
  }
}

TEST_CASE("rows sum to one exactly up to rounding") {
  Rng rng(33);
  DenseMatrix logits = sample_gaussian(rng, 64, 16);
  TransportPlan plan = sinkhorn::solve(logits, 0.3, 10);
  for (std::size_t i = 0; i < 64; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 16; ++j) s += plan.q.mat()(i, j);
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("uniform kernel has entropy log k") {
  DenseMatrix logits(8, 5);
  auto solved = sinkhorn::solve_with_entropy(logits, 1.0, 3);
  CHECK(solved.h == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("entropy of Q is non-decreasing in lambda") {
  Rng rng(34);
  const double grid[] = {0.2, 0.5, 1.0, 2.0};
  for (int t = 0; t < 10; ++t) {
    DenseMatrix logits = sample_gaussian(rng, 32, 10);
    double prev = -1.0;
    for (double lam : grid) {
      auto solved = sinkhorn::solve_with_entropy(logits, lam);
      CHECK(solved.h >= prev - 1e-12);
      prev = solved.h;
    }
  }
}

TEST_CASE("large lambda flattens Q relative to P") {
  Rng rng(35);
  for (int t = 0; t < 10; ++t) {
    DenseMatrix logits = sample_gaussian(rng, 32, 8);
    const double hp = entropy(softmax_rows(logits));
    auto solved = sinkhorn::solve_with_entropy(logits, 2.0);
    CHECK(solved.h >= hp - 1e-9);
  }
}

TEST_CASE("solver is deterministic") {
  Rng rng(36);
  DenseMatrix logits = sample_gaussian(rng, 20, 6);
  CHECK(sinkhorn::solve(logits, 0.4).q.mat() == sinkhorn::solve(logits, 0.4).q.mat());
}
