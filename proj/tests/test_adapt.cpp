#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "selflabel/adapt.hpp"
#include "selflabel/rng.hpp"

using namespace selflabel;

namespace {

AdaptConfig cfg_for(std::size_t k, std::uint64_t warmup) {
  return AdaptConfig::for_output_dim(k, warmup);
}

}  // namespace

TEST_CASE("cosine schedule endpoints and midpoint are exact") {
  AdaptConfig cfg = cfg_for(100, 800);
  const double logk = std::log(100.0);
  const double half = 0.5 * logk;  // log sqrt(k)
  CHECK(scheduled_target(cfg, 0) == doctest::Approx(logk).epsilon(1e-14));
  CHECK(scheduled_target(cfg, 800) == doctest::Approx(half).epsilon(1e-14));
  CHECK(scheduled_target(cfg, 5000) == doctest::Approx(half).epsilon(1e-14));
  CHECK(scheduled_target(cfg, 400) == doctest::Approx((logk + half) / 2).epsilon(1e-13));
}

TEST_CASE("schedule is monotone non-increasing during warm-up") {
  AdaptConfig cfg = cfg_for(64, 200);
  double prev = scheduled_target(cfg, 0);
  for (std::uint64_t s = 1; s <= 200; ++s) {
    double cur = scheduled_target(cfg, s);
    CHECK(cur <= prev + 1e-14);
    prev = cur;
  }
}

TEST_CASE("dead band: in-tolerance entry leaves lambda untouched") {
  // Uniform logits give H(Q) = log k; at step 0 the target is also log k.
  AdaptConfig cfg = cfg_for(16, 100);
  AdaptState state;
  state.lambda = 0.55;
  DenseMatrix logits(8, 16);
  AdaptResult res = adapt_and_solve(logits, state, cfg);
  CHECK(res.updates == 0);
  CHECK(state.lambda == 0.55);
  CHECK(res.h_q == doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("clamp saturation at the lower bound") {
  // Uniform logits keep H(Q) = log k regardless of lambda, while the settled
  // target is log sqrt(k): lambda is pushed down and pinned at the clamp.
  AdaptConfig cfg = cfg_for(16, 1);
  AdaptState state;
  state.lambda = 0.15;
  state.step = 1000;
  DenseMatrix logits(8, 16);
  AdaptResult res = adapt_and_solve(logits, state, cfg);
  CHECK(state.lambda == doctest::Approx(cfg.lambda_min));
  CHECK(res.updates <= cfg.max_inner_iters);
}

TEST_CASE("exit disjunction holds on random batches past warm-up") {
  Rng rng(21);
  AdaptConfig cfg = cfg_for(16, 1);
  const double half = 0.5 * std::log(16.0);
  for (int t = 0; t < 100; ++t) {
    DenseMatrix logits = sample_gaussian(rng, 64, 16);
    for (auto& v : logits.values()) v *= 3.0;
    AdaptState state;
    state.step = 10000;  // far past warm-up: target settled at log sqrt(k)
    AdaptResult res = adapt_and_solve(logits, state, cfg);
    CHECK(res.updates <= cfg.max_inner_iters);
    CHECK(state.lambda >= cfg.lambda_min);
    CHECK(state.lambda <= cfg.lambda_max);
    const bool in_band = std::abs(res.h_q - half) <= cfg.h_tol;
    const bool clamped = state.lambda == cfg.lambda_min || state.lambda == cfg.lambda_max;
    const bool exhausted = res.updates == cfg.max_inner_iters;
    CHECK((in_band || clamped || exhausted));
  }
}

TEST_CASE("lambda moves in the correct direction") {
  Rng rng(22);
  DenseMatrix logits = sample_gaussian(rng, 64, 16);
  for (auto& v : logits.values()) v *= 5.0;  // sharp logits: low-entropy Q at lambda=1
  AdaptConfig cfg = cfg_for(16, 1);
  cfg.max_inner_iters = 1;

  // Entropy below target -> lambda must rise (flatten).
  AdaptState low;
  low.lambda = 0.3;
  low.step = 10000;
  AdaptResult res_low = adapt_and_solve(logits, low, cfg);
  if (res_low.updates > 0 && res_low.h_q < res_low.h_target)
    CHECK(low.lambda > 0.3 - 1e-12);

  // Entropy above target -> lambda must fall (sharpen).
  DenseMatrix flat(64, 16);  // uniform: entropy log k, above log sqrt(k)
  AdaptState high;
  high.lambda = 0.8;
  high.step = 10000;
  AdaptResult res_high = adapt_and_solve(flat, high, cfg);
  CHECK(res_high.updates == 1);
  CHECK(high.lambda == doctest::Approx(0.7));
}

TEST_CASE("settled state re-solves idempotently") {
  Rng rng(23);
  DenseMatrix logits = sample_gaussian(rng, 64, 16);
  AdaptConfig cfg = cfg_for(16, 1);
  AdaptState state;
  state.step = 10000;
  (void)adapt_and_solve(logits, state, cfg);
  const double settled = state.lambda;
  AdaptResult again = adapt_and_solve(logits, state, cfg);
  // Either the dead band holds (no move) or the clamp keeps lambda in place.
  if (std::abs(again.h_q - again.h_target) <= cfg.h_tol) {
    CHECK(again.updates == 0);
    CHECK(state.lambda == settled);
  }
}

TEST_CASE("adapt_and_solve does not advance the step counter") {
  AdaptConfig cfg = cfg_for(8, 10);
  AdaptState state;
  state.step = 42;
  DenseMatrix logits(4, 8);
  (void)adapt_and_solve(logits, state, cfg);
  CHECK(state.step == 42);
}
