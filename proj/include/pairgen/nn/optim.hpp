#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>

#include "pairgen/nn/parameters.hpp"
#include "pairgen/rng.hpp"

namespace pairgen::nn {

struct OptimizerConfig {
  double lr_max = 5e-5;
  long warmup = 500;
  double grad_clip = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Linear warmup to lr_max, then inverse square-root decay. Steps start at 1.
double learning_rate(const OptimizerConfig& cfg, long step);

struct AdamState {
  ParameterSet<float> m, v;
  explicit AdamState(const ModelConfig& config);
};

// Per-example loss. Accumulates d(loss)/d(params) into grads when non-null.
template <class S, class Example>
using ExampleLoss = std::function<double(const Model<S>&, const Example&, ParameterSet<S>* grads, Rng* dropout)>;

template <class S>
double global_norm(const ParameterSet<S>& grads);

// Rescales grads so their global L2 norm is at most max_norm; returns the pre-clip norm.
template <class S>
double clip_global_norm(ParameterSet<S>& grads, double max_norm);

void adam_update(Model<float>& model, const ParameterSet<float>& grads, AdamState& state, long step, double lr,
                 const OptimizerConfig& cfg);

// One optimizer step on the mean loss over the batch. Returns the pre-update loss.
template <class Example>
double train_step(Model<float>& model, std::span<const Example> batch, const ExampleLoss<float, Example>& loss,
                  AdamState& state, long step, const OptimizerConfig& cfg, Rng* dropout_rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  ParameterSet<float> grads(parameter_schema(model.config));
  double total = 0;
  for (const auto& ex : batch) total += loss(model, ex, &grads, dropout_rng);
  const double mean = total / static_cast<double>(batch.size());
  if (!std::isfinite(mean)) throw std::runtime_error("diverged");
  const float inv = 1.0f / static_cast<float>(batch.size());
  for (std::size_t i = 0; i < grads.size(); ++i) grads.value(i) *= inv;
  const double norm = clip_global_norm(grads, cfg.grad_clip);
  if (!std::isfinite(norm)) throw std::runtime_error("diverged");
  adam_update(model, grads, state, step, learning_rate(cfg, step), cfg);
  return mean;
}

}  // namespace pairgen::nn
