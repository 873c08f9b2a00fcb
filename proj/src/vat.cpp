#include "selflabel/vat.hpp"

#include <cmath>
#include <stdexcept>

namespace selflabel {

namespace {

constexpr double kDegenerateNorm = 1e-12;

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values()[i] += b.values()[i];
  return out;
}

}  // namespace

void scale_rows_to_norm(DenseMatrix& r, double target) {
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double n = row_l2_norm(r, i);
    if (n < kDegenerateNorm) continue;
    const double s = target / n;
    for (std::size_t j = 0; j < r.cols(); ++j) r(i, j) *= s;
  }
}

VatResult vat_forward(ModelParams& params, const DenseMatrix& batch,
                      const DistributionBatch& anchor, const VatConfig& cfg,
                      Rng& rng) {
  if (!(cfg.xi > 0.0) || !(cfg.epsilon >= 0.0))
    throw std::invalid_argument("vat_forward: xi must be positive, epsilon non-negative");
  if (anchor.rows() != batch.rows())
    throw std::invalid_argument("vat_forward: anchor/batch row mismatch");
  const std::size_t m = batch.rows(), d = batch.cols();

  // Step 1: random probe.
  DenseMatrix r = sample_gaussian(rng, m, d);
  scale_rows_to_norm(r, cfg.xi);
  ForwardResult probe = forward(params, add(batch, r), Mode::kTrain);
  DistributionBatch p_r = softmax_rows(probe.logits);

  // d D_KL(P || softmax(O_r)) / d O_r = (P_r - P) / m, anchor detached.
  DenseMatrix grad_logits(m, anchor.cols());
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < anchor.cols(); ++j)
      grad_logits(i, j) = (p_r.mat()(i, j) - anchor.mat()(i, j)) / md;

  // Step 2: adversarial direction from the input gradient.
  DenseMatrix g = backward_input(probe.tape, params, grad_logits);
  g.require_finite("vat_forward: input gradient");

  VatResult res;
  res.r_vadv.r = DenseMatrix(m, d);
  double norm_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double gn = row_l2_norm(g, i);
    norm_sum += gn;
    if (gn < kDegenerateNorm) {
      // Zero-gradient fallback: reuse the random direction at norm epsilon.
      const double rn = row_l2_norm(r, i);
      const double s = rn < kDegenerateNorm ? 0.0 : cfg.epsilon / rn;
      for (std::size_t j = 0; j < d; ++j) res.r_vadv.r(i, j) = s * r(i, j);
    } else {
      const double s = cfg.epsilon / gn;
      for (std::size_t j = 0; j < d; ++j) res.r_vadv.r(i, j) = s * g(i, j);
    }
  }
  res.mean_grad_norm = norm_sum / md;

  res.perturbed_input = add(batch, res.r_vadv.r);
  ForwardResult adv = forward(params, res.perturbed_input, Mode::kTrain);
  res.o_vadv = adv.logits;
  res.p_vadv = softmax_rows(adv.logits);
  res.tape = std::move(adv.tape);
  return res;
}

TwoViewVat two_view_vat(ModelParams& params, const DenseMatrix& batch,
                        const DistributionBatch& anchor, const VatConfig& cfg,
                        Rng& rng) {
  TwoViewVat views;
  views.first = vat_forward(params, batch, anchor, cfg, rng);
  views.second = vat_forward(params, batch, anchor, cfg, rng);
  return views;
}

}  // namespace selflabel
