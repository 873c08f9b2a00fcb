#include "selflabel/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selflabel {

PerturbMode parse_perturb_mode(const std::string& s) {
  if (s == "NP") return PerturbMode::kNP;
  if (s == "RP") return PerturbMode::kRP;
  if (s == "RP+VAT") return PerturbMode::kRPVAT;
  if (s == "VAT") return PerturbMode::kVAT;
  throw std::invalid_argument("unknown perturbation mode '" + s +
                              "' (expected NP, RP, RP+VAT or VAT)");
}

std::string to_string(PerturbMode m) {
  switch (m) {
    case PerturbMode::kNP: return "NP";
    case PerturbMode::kRP: return "RP";
    case PerturbMode::kRPVAT: return "RP+VAT";
    case PerturbMode::kVAT: return "VAT";
  }
  return "?";
}

namespace {

struct View {
  DenseMatrix logits;
  DistributionBatch p;
  ForwardTape tape;
  double mean_grad_norm = 0.0;
};

View clean_view(const ForwardResult& clean) {
  View v;
  v.logits = clean.logits;
  v.p = softmax_rows(clean.logits);
  v.tape = clean.tape;
  return v;
}

View random_view(ModelParams& params, const DenseMatrix& batch, double xi, Rng& rng) {
  DenseMatrix r = sample_gaussian(rng, batch.rows(), batch.cols());
  scale_rows_to_norm(r, xi);
  DenseMatrix perturbed = batch;
  for (std::size_t i = 0; i < perturbed.size(); ++i)
    perturbed.values()[i] += r.values()[i];
  ForwardResult fwd = forward(params, perturbed, Mode::kTrain);
  View v;
  v.logits = std::move(fwd.logits);
  v.p = softmax_rows(v.logits);
  v.tape = std::move(fwd.tape);
  return v;
}

View adversarial_view(ModelParams& params, const DenseMatrix& batch,
                      const DistributionBatch& anchor, const VatConfig& cfg,
                      Rng& rng) {
  VatResult res = vat_forward(params, batch, anchor, cfg, rng);
  View v;
  v.logits = std::move(res.o_vadv);
  v.p = std::move(res.p_vadv);
  v.tape = std::move(res.tape);
  v.mean_grad_norm = res.mean_grad_norm;
  return v;
}

View make_view(PerturbMode mode, bool first, ModelParams& params,
               const DenseMatrix& batch, const ForwardResult& clean,
               const DistributionBatch& anchor, const VatConfig& vat_cfg,
               Rng& rng) {
  switch (mode) {
    case PerturbMode::kNP:
      return clean_view(clean);
    case PerturbMode::kRP:
      return random_view(params, batch, vat_cfg.xi, rng);
    case PerturbMode::kRPVAT:
      return first ? random_view(params, batch, vat_cfg.xi, rng)
                   : adversarial_view(params, batch, anchor, vat_cfg, rng);
    case PerturbMode::kVAT:
      return adversarial_view(params, batch, anchor, vat_cfg, rng);
  }
  throw std::logic_error("make_view: unreachable");
}

// dL/dlogits for D_KL(target || softmax(logits)): (softmax - target)/m.
DenseMatrix kl_logit_grad(const DistributionBatch& p, const DistributionBatch& target) {
  const std::size_t m = p.rows(), k = p.cols();
  DenseMatrix g(m, k);
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j)
      g(i, j) = (p.mat()(i, j) - target.mat()(i, j)) / md;
  return g;
}

}  // namespace

StepResult train_step(ModelParams& params, const DenseMatrix& batch,
                      AdaptState& adapt_state, const AdaptConfig& adapt_cfg,
                      const TrainConfig& cfg, Rng& rng, AdamState& adam_state,
                      double lr) {
  // Clean anchor prediction at the current parameters.
  ForwardResult clean = forward(params, batch, Mode::kTrain);
  DistributionBatch anchor = softmax_rows(clean.logits);

  Rng rng1 = rng.split("view1");
  Rng rng2 = rng.split("view2");
  View v1 = make_view(cfg.mode, true, params, batch, clean, anchor, cfg.vat, rng1);
  AdaptResult a1 = adapt_and_solve(v1.logits, adapt_state, adapt_cfg, cfg.sinkhorn_iters);
  View v2 = make_view(cfg.mode, false, params, batch, clean, anchor, cfg.vat, rng2);
  AdaptResult a2 = adapt_and_solve(v2.logits, adapt_state, adapt_cfg, cfg.sinkhorn_iters);

  // Swapped objective: each view predicts the other's target.
  const double loss = kl_divergence(a2.plan.q, v1.p) + kl_divergence(a1.plan.q, v2.p);
  if (!std::isfinite(loss))
    throw std::runtime_error("train_step: non-finite loss (training diverged)");

  ParamGradients grads = backward_params(v1.tape, params, kl_logit_grad(v1.p, a2.plan.q));
  ParamGradients g2 = backward_params(v2.tape, params, kl_logit_grad(v2.p, a1.plan.q));
  accumulate(grads, g2);
  adam_step(params, grads, adam_state, lr);

  StepResult out;
  out.loss = loss;
  out.record.step = adapt_state.step;
  out.record.loss = loss;
  out.record.lambda = adapt_state.lambda;
  out.record.h_q = a2.h_q;
  out.record.h_target = a2.h_target;
  out.record.lr = lr;
  out.record.mean_grad_norm = (v1.mean_grad_norm + v2.mean_grad_norm) / 2.0;
  const std::size_t k = cfg.output_dim;
  out.record.q_col_mean.assign(k, 0.0);
  const double mrows = static_cast<double>(batch.rows());
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < batch.rows(); ++i)
      s += a1.plan.q.mat()(i, j) + a2.plan.q.mat()(i, j);
    out.record.q_col_mean[j] = s / (2.0 * mrows);
  }
  adapt_state.step += 1;
  return out;
}

ModelParams init_model(const TrainConfig& cfg, std::size_t input_dim) {
  const bool bn_enc = cfg.bn_placement == BnPlacement::kEncoder ||
                      cfg.bn_placement == BnPlacement::kBoth;
  const bool bn_cls = cfg.bn_placement == BnPlacement::kClassifier ||
                      cfg.bn_placement == BnPlacement::kBoth;
  Rng init_rng = Rng(cfg.seed).split("init");
  return init_params(
      encoder_specs(input_dim, cfg.encoder_hidden, cfg.embedding_dim, bn_enc),
      classifier_specs(cfg.embedding_dim, cfg.classifier_hidden, cfg.output_dim, bn_cls),
      init_rng);
}

TrainedModel fit(const Dataset& dataset, const TrainConfig& cfg,
                 const TrainerSinks& sinks) {
  const std::size_t n = dataset.n(), m = cfg.batch_size;
  if (n < m) throw std::invalid_argument("fit: dataset smaller than one batch");
  if (cfg.output_dim < 2 || cfg.embedding_dim < 1)
    throw std::invalid_argument("fit: need k >= 2 and l >= 1");

  TrainedModel out;
  out.params = init_model(cfg, dataset.dim());

  TrainConfig run_cfg = cfg;
  if (cfg.epsilon_auto) run_cfg.vat.epsilon = suggest_epsilon(dataset);

  const std::size_t steps_per_epoch = n / m;  // final partial batch dropped
  AdaptConfig adapt_cfg = AdaptConfig::for_output_dim(
      cfg.output_dim, 100 * static_cast<std::uint64_t>(steps_per_epoch));
  adapt_cfg.h_tol = cfg.h_tol;
  adapt_cfg.h_step = cfg.h_step;
  AdaptState adapt_state;
  AdamState adam_state = AdamState::for_params(out.params);

  Rng root(cfg.seed);
  const std::size_t drop_epoch = cfg.effective_lr_drop_epoch();
  const std::size_t ckpt_every =
      cfg.checkpoint_every > 0 ? cfg.checkpoint_every
                               : std::max<std::size_t>(1, cfg.epochs / 10);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = root.split("shuffle/" + std::to_string(epoch));
    for (std::size_t i = n; i-- > 1;) {
      const std::size_t j = (std::size_t)shuffle_rng.next_below(i + 1);
      std::swap(order[i], order[j]);
    }
    const double lr = epoch >= drop_epoch ? cfg.lr_after_drop : cfg.lr_initial;
    for (std::size_t bstep = 0; bstep < steps_per_epoch; ++bstep) {
      DenseMatrix batch(m, dataset.dim());
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t src = order[bstep * m + i];
        for (std::size_t j = 0; j < dataset.dim(); ++j)
          batch(i, j) = dataset.x(src, j);
      }
      Rng step_rng = root.split("step/" + std::to_string(adapt_state.step));
      StepResult sr = train_step(out.params, batch, adapt_state, adapt_cfg,
                                 run_cfg, step_rng, adam_state, lr);
      sr.record.epoch = epoch;
      out.report.steps += 1;
      if (out.report.steps % std::max<std::size_t>(1, cfg.log_every) == 0) {
        out.report.trace.push_back(sr.record);
        if (sinks.on_step) sinks.on_step(sr.record);
      }
    }
    if (sinks.on_checkpoint &&
        ((epoch + 1) % ckpt_every == 0 || epoch + 1 == cfg.epochs))
      sinks.on_checkpoint(epoch + 1, out.params);
  }
  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace selflabel
