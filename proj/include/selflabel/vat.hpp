#pragma once

#include "selflabel/nn.hpp"
#include "selflabel/prob.hpp"
#include "selflabel/rng.hpp"

namespace selflabel {

struct VatConfig {
  double xi = 10.0;   // l2-norm of the random probe perturbation
  double epsilon = 1.0;  // l2-norm of the adversarial perturbation
};

struct PerturbationBatch {
  DenseMatrix r;  // m x d
};

struct VatResult {
  DistributionBatch p_vadv;  // softmax of the perturbed logits
  DenseMatrix o_vadv;        // perturbed logits
  PerturbationBatch r_vadv;  // adversarial perturbations, row norm epsilon
  ForwardTape tape;          // tape of the perturbed forward pass (for the
                             // training backward)
  DenseMatrix perturbed_input;
  double mean_grad_norm = 0.0;  // telemetry: mean ||g_i|| before scaling
};

// Two-step virtual-adversarial perturbation: probe with a xi-scaled random
// direction, take the input gradient of D_KL(anchor || probe prediction),
// scale each gradient row to norm epsilon, and forward once more. Rows with
// vanishing gradient fall back to the epsilon-scaled random direction.
// The anchor receives no gradient. Forward passes run in train mode with
// per-pass batch statistics.
VatResult vat_forward(ModelParams& params, const DenseMatrix& batch,
                      const DistributionBatch& anchor, const VatConfig& cfg,
                      Rng& rng);

struct TwoViewVat {
  VatResult first;
  VatResult second;
};

// Two independent vat_forward calls anchored on the same clean prediction,
// with freshly re-sampled random perturbations.
TwoViewVat two_view_vat(ModelParams& params, const DenseMatrix& batch,
                        const DistributionBatch& anchor, const VatConfig& cfg,
                        Rng& rng);

// Scales every row of r to l2-norm `target`; zero rows stay zero.
void scale_rows_to_norm(DenseMatrix& r, double target);

}  // namespace selflabel
