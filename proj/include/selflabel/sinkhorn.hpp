#pragma once

#include "selflabel/prob.hpp"

namespace selflabel {

// Balanced target distribution solved as entropically regularised optimal
// transport over uniform marginals b = 1/m, c = 1/k.
struct TransportPlan {
  DistributionBatch q;
};

namespace sinkhorn {

inline constexpr std::size_t kDefaultIters = 10;
inline constexpr double kScalingFloor = 1e-30;

// K = softmax(O / lambda); alternate u <- b/(Kv), v <- c/(K^T u) for T
// rounds; Q = diag(u) K diag(v), then row-normalised. Q is a detached
// target: no gradient path exists through this solver.
TransportPlan solve(const DenseMatrix& logits, double lambda,
                    std::size_t iters = kDefaultIters);

struct PlanWithEntropy {
  TransportPlan plan;
  double h;  // per-row entropy of Q
};

PlanWithEntropy solve_with_entropy(const DenseMatrix& logits, double lambda,
                                   std::size_t iters = kDefaultIters);

}  // namespace sinkhorn

}  // namespace selflabel
