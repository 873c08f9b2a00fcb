#pragma once

#include <cstdint>
#include <vector>

#include "selflabel/matrix.hpp"
#include "selflabel/rng.hpp"

namespace selflabel {

enum class Activation { kRelu, kIdentity };
enum class Mode { kTrain, kEval };

// Where batch-norm layers sit, for the ablation variants.
enum class BnPlacement { kNone, kEncoder, kClassifier, kBoth };

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::kIdentity;
  bool batch_norm = false;
};

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.9;

struct Layer {
  LayerSpec spec;
  DenseMatrix w;  // in_dim x out_dim
  std::vector<double> b;
  // Batch-norm state; populated iff spec.batch_norm.
  std::vector<double> bn_gamma, bn_beta, bn_run_mean, bn_run_var;
};

// Encoder f_psi followed by classifier g_phi; theta = {psi, phi}.
struct ModelParams {
  std::vector<Layer> encoder;
  std::vector<Layer> classifier;

  std::size_t input_dim() const { return encoder.front().spec.in_dim; }
  std::size_t latent_dim() const { return encoder.back().spec.out_dim; }
  std::size_t output_dim() const { return classifier.back().spec.out_dim; }
  std::size_t layer_count() const { return encoder.size() + classifier.size(); }
  const Layer& layer(std::size_t i) const {
    return i < encoder.size() ? encoder[i] : classifier[i - encoder.size()];
  }
  Layer& layer(std::size_t i) {
    return i < encoder.size() ? encoder[i] : classifier[i - encoder.size()];
  }
};

// Hidden layers get ReLU (plus BN where placement says so); the latent and
// logit layers stay linear without BN.
std::vector<LayerSpec> encoder_specs(std::size_t input_dim,
                                     const std::vector<std::size_t>& hidden,
                                     std::size_t latent_dim, bool batch_norm);
std::vector<LayerSpec> classifier_specs(std::size_t latent_dim,
                                        const std::vector<std::size_t>& hidden,
                                        std::size_t output_dim, bool batch_norm);

// He-uniform weights (bound sqrt(6/in_dim)), zero biases, BN scale 1 shift 0.
ModelParams init_params(const std::vector<LayerSpec>& encoder,
                        const std::vector<LayerSpec>& classifier, Rng& rng);

struct LayerTape {
  DenseMatrix input;          // m x in_dim
  DenseMatrix pre_act;        // value fed to the activation
  DenseMatrix bn_xhat;        // normalised linear output (BN layers only)
  std::vector<double> bn_inv_std;  // 1/sqrt(var + eps) per feature
};

struct ForwardTape {
  Mode mode = Mode::kTrain;
  std::vector<LayerTape> layers;
};

struct ForwardResult {
  DenseMatrix latent;  // m x l
  DenseMatrix logits;  // m x k
  ForwardTape tape;
};

// Train mode normalises with batch statistics and updates running stats;
// eval mode reads running stats and leaves params untouched.
ForwardResult forward(ModelParams& params, const DenseMatrix& batch, Mode mode);
ForwardResult forward_eval(const ModelParams& params, const DenseMatrix& batch);

struct LayerGrads {
  DenseMatrix dw;
  std::vector<double> db, dgamma, dbeta;
};

struct ParamGradients {
  std::vector<LayerGrads> encoder;
  std::vector<LayerGrads> classifier;
};

struct BackwardResult {
  ParamGradients grads;
  DenseMatrix input_grad;  // m x d
};

// Reverse pass from dL/dlogits through the taped train-mode forward. The BN
// backward accounts for the batch statistics' dependence on the inputs.
BackwardResult backward(const ForwardTape& tape, const ModelParams& params,
                        const DenseMatrix& loss_grad_on_logits);
ParamGradients backward_params(const ForwardTape& tape, const ModelParams& params,
                               const DenseMatrix& loss_grad_on_logits);
DenseMatrix backward_input(const ForwardTape& tape, const ModelParams& params,
                           const DenseMatrix& loss_grad_on_logits);

void accumulate(ParamGradients& into, const ParamGradients& other);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;  // one slot per learnable tensor
  std::vector<std::vector<double>> v;

  static AdamState for_params(const ModelParams& params);
};

// Standard Adam with bias correction; throws on non-finite gradients.
void adam_step(ModelParams& params, const ParamGradients& grads, AdamState& state,
               double lr);

}  // namespace selflabel
