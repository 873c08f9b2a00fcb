#pragma once

#include <cstdint>

#include "selflabel/sinkhorn.hpp"

namespace selflabel {

// Entropy-targeting policy for the Sinkhorn temperature lambda.
struct AdaptConfig {
  double h_target = 0.0;  // log(sqrt k); fill via for_output_dim
  double h_tol = 5e-3;
  double h_step = 0.1;
  std::uint64_t warmup_steps = 0;  // 100 * (n/m)
  std::size_t max_inner_iters = 5;
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  std::size_t output_dim = 0;

  static AdaptConfig for_output_dim(std::size_t k, std::uint64_t warmup_steps);
};

struct AdaptState {
  double lambda = 1.0;
  std::uint64_t step = 0;
};

// Cosine warm-up of the entropy target: log k at step 0, easing down to
// log(sqrt k) at warmup_steps and beyond.
double scheduled_target(const AdaptConfig& cfg, std::uint64_t step);

struct AdaptResult {
  TransportPlan plan;
  double h_q = 0.0;
  double h_target = 0.0;      // schedule value used for this call
  std::size_t updates = 0;    // lambda moves taken (<= max_inner_iters)
};

// Solve Q at the current lambda; nudge lambda by h_step toward the entropy
// target (clamped to [lambda_min, lambda_max]) and re-solve, at most
// max_inner_iters times. The final lambda persists in state.
AdaptResult adapt_and_solve(const DenseMatrix& logits, AdaptState& state,
                            const AdaptConfig& cfg,
                            std::size_t sinkhorn_iters = sinkhorn::kDefaultIters);

}  // namespace selflabel
