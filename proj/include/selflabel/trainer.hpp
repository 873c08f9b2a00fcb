#pragma once

#include <functional>
#include <string>
#include <vector>

#include "selflabel/adapt.hpp"
#include "selflabel/data.hpp"
#include "selflabel/nn.hpp"
#include "selflabel/vat.hpp"

namespace selflabel {

// How each of the two views perturbs the batch.
enum class PerturbMode { kNP, kRP, kRPVAT, kVAT };

PerturbMode parse_perturb_mode(const std::string& s);
std::string to_string(PerturbMode m);

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t output_dim = 100;    // k
  std::size_t embedding_dim = 10;  // l
  std::vector<std::size_t> encoder_hidden = {1024, 1024};
  std::vector<std::size_t> classifier_hidden = {128, 128};
  std::size_t epochs = 5000;
  double lr_initial = 5e-4;
  double lr_after_drop = 1e-4;
  // 0 = automatic: 1000 when epochs >= 1000, else epochs/5.
  std::size_t lr_drop_epoch = 0;
  std::uint64_t seed = 0;
  VatConfig vat;
  bool epsilon_auto = false;  // epsilon = 0.2 * mean data l2-norm
  double h_tol = 5e-3;
  double h_step = 0.1;
  std::size_t sinkhorn_iters = sinkhorn::kDefaultIters;
  BnPlacement bn_placement = BnPlacement::kBoth;
  PerturbMode mode = PerturbMode::kVAT;
  std::size_t checkpoint_every = 0;  // epochs; 0 = max(1, epochs/10)
  std::size_t log_every = 1;         // steps between telemetry records

  std::size_t effective_lr_drop_epoch() const {
    if (lr_drop_epoch > 0) return lr_drop_epoch;
    return epochs >= 1000 ? 1000 : std::max<std::size_t>(1, epochs / 5);
  }
};

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double lambda = 0.0;
  double h_q = 0.0;
  double h_target = 0.0;
  double lr = 0.0;
  double mean_grad_norm = 0.0;
  // Column means of the Sinkhorn target, averaged over the two views; the
  // balance (no-collapse) invariant is audited from these.
  std::vector<double> q_col_mean;
};

struct TrainerSinks {
  std::function<void(const StepRecord&)> on_step;
  // Called at checkpoint cadence and once at the end (epoch, params).
  std::function<void(std::size_t, const ModelParams&)> on_checkpoint;
};

struct TrainReport {
  std::vector<StepRecord> trace;
  double wall_seconds = 0.0;
  std::uint64_t steps = 0;
};

struct StepResult {
  double loss = 0.0;
  StepRecord record;
};

// One swapped-objective update: clean anchor, two perturbed views, a
// Sinkhorn target per view with lambda threaded first view -> second, KL
// loss with detached targets, Adam step. rng must be the step's dedicated
// stream.
StepResult train_step(ModelParams& params, const DenseMatrix& batch,
                      AdaptState& adapt_state, const AdaptConfig& adapt_cfg,
                      const TrainConfig& cfg, Rng& rng, AdamState& adam_state,
                      double lr);

struct TrainedModel {
  ModelParams params;
  TrainReport report;
};

// Full run: per-epoch shuffled batches (final partial batch dropped), lr
// drop schedule, telemetry and checkpoint sinks.
TrainedModel fit(const Dataset& dataset, const TrainConfig& cfg,
                 const TrainerSinks& sinks = {});

// Builds the model/adapt configuration exactly as fit does, for callers
// that need matching shapes (e.g. checkpoint evaluation).
ModelParams init_model(const TrainConfig& cfg, std::size_t input_dim);

}  // namespace selflabel
