#include "selflabel/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selflabel {

AdaptConfig AdaptConfig::for_output_dim(std::size_t k, std::uint64_t warmup_steps) {
  if (k < 2) throw std::invalid_argument("AdaptConfig: output_dim must be >= 2");
  AdaptConfig cfg;
  cfg.output_dim = k;
  cfg.h_target = std::log(std::sqrt(static_cast<double>(k)));
  cfg.warmup_steps = warmup_steps;
  return cfg;
}

double scheduled_target(const AdaptConfig& cfg, std::uint64_t step) {
  const double progress =
      cfg.warmup_steps == 0
          ? 1.0
          : std::min(static_cast<double>(step) / static_cast<double>(cfg.warmup_steps), 1.0);
  const double h_scale = (std::cos(M_PI * progress) + 1.0) / 2.0;
  const double log_k = std::log(static_cast<double>(cfg.output_dim));
  return cfg.h_target + (log_k - cfg.h_target) * h_scale;
}

AdaptResult adapt_and_solve(const DenseMatrix& logits, AdaptState& state,
                            const AdaptConfig& cfg, std::size_t sinkhorn_iters) {
  AdaptResult res;
  res.h_target = scheduled_target(cfg, state.step);
  auto solved = sinkhorn::solve_with_entropy(logits, state.lambda, sinkhorn_iters);
  for (std::size_t t = 0; t < cfg.max_inner_iters; ++t) {
    const double diff = solved.h - res.h_target;
    if (diff > cfg.h_tol) {
      state.lambda = std::max(state.lambda - cfg.h_step, cfg.lambda_min);
    } else if (diff < -cfg.h_tol) {
      state.lambda = std::min(state.lambda + cfg.h_step, cfg.lambda_max);
    } else {
      break;
    }
    ++res.updates;
    solved = sinkhorn::solve_with_entropy(logits, state.lambda, sinkhorn_iters);
  }
  res.plan = std::move(solved.plan);
  res.h_q = solved.h;
  return res;
}

}  // namespace selflabel
