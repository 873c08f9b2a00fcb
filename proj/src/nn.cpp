#include "selflabel/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "selflabel/kernels.hpp"

namespace selflabel {

namespace {

std::vector<LayerSpec> stack_specs(std::size_t in, const std::vector<std::size_t>& hidden,
                                   std::size_t out, bool batch_norm) {
  std::vector<LayerSpec> specs;
  std::size_t prev = in;
  for (std::size_t h : hidden) {
    specs.push_back({prev, h, Activation::kRelu, batch_norm});
    prev = h;
  }
  specs.push_back({prev, out, Activation::kIdentity, false});
  return specs;
}

Layer init_layer(const LayerSpec& spec, Rng& rng) {
  if (spec.in_dim == 0 || spec.out_dim == 0)
    throw std::invalid_argument("init_params: zero layer dimension");
  Layer layer;
  layer.spec = spec;
  layer.w = DenseMatrix(spec.in_dim, spec.out_dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(spec.in_dim));
  for (double& x : layer.w.values()) x = rng.next_uniform(-bound, bound);
  layer.b.assign(spec.out_dim, 0.0);
  if (spec.batch_norm) {
    layer.bn_gamma.assign(spec.out_dim, 1.0);
    layer.bn_beta.assign(spec.out_dim, 0.0);
    layer.bn_run_mean.assign(spec.out_dim, 0.0);
    layer.bn_run_var.assign(spec.out_dim, 1.0);
  }
  return layer;
}

// Runs one layer forward; returns the activation output.
DenseMatrix layer_forward(Layer& layer, const DenseMatrix& x, Mode mode,
                          LayerTape* tape) {
  if (x.cols() != layer.spec.in_dim)
    throw std::invalid_argument("forward: batch width does not match layer input dim");
  DenseMatrix lin = kernels::gemm_nn(x, layer.w);
  kernels::add_row_vector(lin, layer.b);

  if (tape) tape->input = x;

  if (layer.spec.batch_norm) {
    const std::size_t m = lin.rows(), f = lin.cols();
    std::vector<double> mu(f, 0.0), var(f, 0.0), inv_std(f, 0.0);
    if (mode == Mode::kTrain) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < f; ++j) mu[j] += lin(i, j);
      for (std::size_t j = 0; j < f; ++j) mu[j] /= static_cast<double>(m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < f; ++j) {
          const double d = lin(i, j) - mu[j];
          var[j] += d * d;
        }
      for (std::size_t j = 0; j < f; ++j) var[j] /= static_cast<double>(m);
      for (std::size_t j = 0; j < f; ++j) {
        layer.bn_run_mean[j] = kBnMomentum * layer.bn_run_mean[j] + (1.0 - kBnMomentum) * mu[j];
        layer.bn_run_var[j] = kBnMomentum * layer.bn_run_var[j] + (1.0 - kBnMomentum) * var[j];
      }
    } else {
      mu = layer.bn_run_mean;
      var = layer.bn_run_var;
    }
    for (std::size_t j = 0; j < f; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + kBnEpsilon);

    DenseMatrix xhat(m, f);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < (long long)m; ++ii) {
      const std::size_t i = (std::size_t)ii;
      for (std::size_t j = 0; j < f; ++j)
        xhat(i, j) = (lin(i, j) - mu[j]) * inv_std[j];
    }
    DenseMatrix pre(m, f);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < (long long)m; ++ii) {
      const std::size_t i = (std::size_t)ii;
      for (std::size_t j = 0; j < f; ++j)
        pre(i, j) = layer.bn_gamma[j] * xhat(i, j) + layer.bn_beta[j];
    }
    if (tape) {
      tape->bn_xhat = xhat;
      tape->bn_inv_std = inv_std;
      tape->pre_act = pre;
    }
    lin = std::move(pre);
  } else if (tape) {
    tape->pre_act = lin;
  }

  if (layer.spec.activation == Activation::kRelu) {
    for (double& v : lin.values())
      if (v < 0.0) v = 0.0;
  }
  return lin;
}

// Backward through one layer: consumes dL/d(activation output), returns
// dL/d(layer input) and fills parameter gradients.
DenseMatrix layer_backward(const Layer& layer, const LayerTape& tape,
                           DenseMatrix grad_out, LayerGrads& grads) {
  const std::size_t m = grad_out.rows(), f = layer.spec.out_dim;

  if (layer.spec.activation == Activation::kRelu) {
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < (long long)m; ++ii) {
      const std::size_t i = (std::size_t)ii;
      for (std::size_t j = 0; j < f; ++j)
        if (tape.pre_act(i, j) <= 0.0) grad_out(i, j) = 0.0;
    }
  }

  DenseMatrix grad_lin;
  if (layer.spec.batch_norm) {
    grads.dgamma.assign(f, 0.0);
    grads.dbeta.assign(f, 0.0);
    std::vector<double> sum_dxhat(f, 0.0), sum_dxhat_xhat(f, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < f; ++j) {
        const double dy = grad_out(i, j);
        grads.dgamma[j] += dy * tape.bn_xhat(i, j);
        grads.dbeta[j] += dy;
        const double dxhat = dy * layer.bn_gamma[j];
        sum_dxhat[j] += dxhat;
        sum_dxhat_xhat[j] += dxhat * tape.bn_xhat(i, j);
      }
    grad_lin = DenseMatrix(m, f);
    const double md = static_cast<double>(m);
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < (long long)m; ++ii) {
      const std::size_t i = (std::size_t)ii;
      for (std::size_t j = 0; j < f; ++j) {
        const double dxhat = grad_out(i, j) * layer.bn_gamma[j];
        grad_lin(i, j) = tape.bn_inv_std[j] / md *
                         (md * dxhat - sum_dxhat[j] -
                          tape.bn_xhat(i, j) * sum_dxhat_xhat[j]);
      }
    }
  } else {
    grad_lin = std::move(grad_out);
  }

  grads.dw = kernels::gemm_tn(tape.input, grad_lin);
  grads.db.assign(f, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < f; ++j) grads.db[j] += grad_lin(i, j);

  return kernels::gemm_nt(grad_lin, layer.w);
}

template <typename Fn>
void for_each_tensor(ModelParams& params, ParamGradients* grads, Fn&& fn) {
  auto walk = [&](std::vector<Layer>& layers, std::vector<LayerGrads>* lg) {
    for (std::size_t li = 0; li < layers.size(); ++li) {
      Layer& l = layers[li];
      LayerGrads* g = lg ? &(*lg)[li] : nullptr;
      fn(l.w.values(), g ? &g->dw.values() : nullptr);
      fn(l.b, g ? &g->db : nullptr);
      if (l.spec.batch_norm) {
        fn(l.bn_gamma, g ? &g->dgamma : nullptr);
        fn(l.bn_beta, g ? &g->dbeta : nullptr);
      }
    }
  };
  walk(params.encoder, grads ? &grads->encoder : nullptr);
  walk(params.classifier, grads ? &grads->classifier : nullptr);
}

}  // namespace

std::vector<LayerSpec> encoder_specs(std::size_t input_dim,
                                     const std::vector<std::size_t>& hidden,
                                     std::size_t latent_dim, bool batch_norm) {
  return stack_specs(input_dim, hidden, latent_dim, batch_norm);
}

std::vector<LayerSpec> classifier_specs(std::size_t latent_dim,
                                        const std::vector<std::size_t>& hidden,
                                        std::size_t output_dim, bool batch_norm) {
  return stack_specs(latent_dim, hidden, output_dim, batch_norm);
}

ModelParams init_params(const std::vector<LayerSpec>& encoder,
                        const std::vector<LayerSpec>& classifier, Rng& rng) {
  if (encoder.empty() || classifier.empty())
    throw std::invalid_argument("init_params: empty layer stack");
  if (encoder.back().out_dim != classifier.front().in_dim)
    throw std::invalid_argument("init_params: encoder/classifier dim mismatch");
  ModelParams params;
  for (const auto& s : encoder) params.encoder.push_back(init_layer(s, rng));
  for (const auto& s : classifier) params.classifier.push_back(init_layer(s, rng));
  return params;
}

ForwardResult forward(ModelParams& params, const DenseMatrix& batch, Mode mode) {
  batch.require_finite("forward");
  ForwardResult res;
  res.tape.mode = mode;
  res.tape.layers.resize(params.layer_count());
  DenseMatrix x = batch;
  std::size_t li = 0;
  for (auto& layer : params.encoder)
    x = layer_forward(layer, x, mode, &res.tape.layers[li++]);
  res.latent = x;
  for (auto& layer : params.classifier)
    x = layer_forward(layer, x, mode, &res.tape.layers[li++]);
  res.logits = std::move(x);
  return res;
}

ForwardResult forward_eval(const ModelParams& params, const DenseMatrix& batch) {
  // Eval mode never touches running stats, so the const_cast is safe.
  return forward(const_cast<ModelParams&>(params), batch, Mode::kEval);
}

BackwardResult backward(const ForwardTape& tape, const ModelParams& params,
                        const DenseMatrix& loss_grad_on_logits) {
  if (tape.mode != Mode::kTrain)
    throw std::logic_error("backward: tape must come from a train-mode forward");
  if (tape.layers.size() != params.layer_count())
    throw std::logic_error("backward: tape/params layer count mismatch");
  if (loss_grad_on_logits.cols() != params.output_dim())
    throw std::invalid_argument("backward: upstream gradient width mismatch");

  BackwardResult res;
  res.grads.encoder.resize(params.encoder.size());
  res.grads.classifier.resize(params.classifier.size());
  DenseMatrix g = loss_grad_on_logits;
  for (std::size_t i = params.layer_count(); i-- > 0;) {
    LayerGrads& lg = i < params.encoder.size()
                         ? res.grads.encoder[i]
                         : res.grads.classifier[i - params.encoder.size()];
    g = layer_backward(params.layer(i), tape.layers[i], std::move(g), lg);
  }
  res.input_grad = std::move(g);
  return res;
}

ParamGradients backward_params(const ForwardTape& tape, const ModelParams& params,
                               const DenseMatrix& loss_grad_on_logits) {
  return backward(tape, params, loss_grad_on_logits).grads;
}

DenseMatrix backward_input(const ForwardTape& tape, const ModelParams& params,
                           const DenseMatrix& loss_grad_on_logits) {
  return backward(tape, params, loss_grad_on_logits).input_grad;
}

void accumulate(ParamGradients& into, const ParamGradients& other) {
  auto add_stack = [](std::vector<LayerGrads>& a, const std::vector<LayerGrads>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a[i].dw.size(); ++j)
        a[i].dw.values()[j] += b[i].dw.values()[j];
      for (std::size_t j = 0; j < a[i].db.size(); ++j) a[i].db[j] += b[i].db[j];
      for (std::size_t j = 0; j < a[i].dgamma.size(); ++j)
        a[i].dgamma[j] += b[i].dgamma[j];
      for (std::size_t j = 0; j < a[i].dbeta.size(); ++j)
        a[i].dbeta[j] += b[i].dbeta[j];
    }
  };
  add_stack(into.encoder, other.encoder);
  add_stack(into.classifier, other.classifier);
}

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState state;
  for_each_tensor(const_cast<ModelParams&>(params), nullptr,
                  [&](std::vector<double>& t, std::vector<double>*) {
                    state.m.emplace_back(t.size(), 0.0);
                    state.v.emplace_back(t.size(), 0.0);
                  });
  return state;
}

void adam_step(ModelParams& params, const ParamGradients& grads, AdamState& state,
               double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  std::size_t slot = 0;
  for_each_tensor(params, const_cast<ParamGradients*>(&grads),
                  [&](std::vector<double>& t, std::vector<double>* g) {
                    if (!g || g->size() != t.size())
                      throw std::logic_error("adam_step: gradient shape mismatch");
                    std::vector<double>& m = state.m[slot];
                    std::vector<double>& v = state.v[slot];
                    ++slot;
                    for (std::size_t i = 0; i < t.size(); ++i) {
                      const double gi = (*g)[i];
                      if (!std::isfinite(gi))
                        throw std::runtime_error("adam_step: non-finite gradient (training diverged)");
                      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
                      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
                      const double mhat = m[i] / bc1;
                      const double vhat = v[i] / bc2;
                      t[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
                    }
                  });
}

}  // namespace selflabel
