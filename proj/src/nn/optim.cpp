#include "pairgen/nn/optim.hpp"

#include <algorithm>

namespace pairgen::nn {

double learning_rate(const OptimizerConfig& cfg, long step) {
  if (step < 1) throw std::invalid_argument("optimizer steps start at 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(std::max<long>(cfg.warmup, 1));
  return cfg.lr_max * std::min(s / w, std::sqrt(w / s));
}

AdamState::AdamState(const ModelConfig& config)
    : m(parameter_schema(config)), v(parameter_schema(config)) {}

template <class S>
double global_norm(const ParameterSet<S>& grads) {
  double sq = 0;
  for (std::size_t i = 0; i < grads.size(); ++i) sq += grads.value(i).template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

template <class S>
double clip_global_norm(ParameterSet<S>& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (std::isfinite(norm) && norm > max_norm) {
    const S scale = static_cast<S>(max_norm / norm);
    for (std::size_t i = 0; i < grads.size(); ++i) grads.value(i) *= scale;
  }
  return norm;
}

void adam_update(Model<float>& model, const ParameterSet<float>& grads, AdamState& state, long step, double lr,
                 const OptimizerConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
  const float step_size = static_cast<float>(lr / bc1);
  const float inv_sqrt_bc2 = static_cast<float>(1.0 / std::sqrt(bc2));
  const float eps = static_cast<float>(cfg.eps);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& m = state.m.value(i);
    auto& v = state.v.value(i);
    const auto& g = grads.value(i);
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    model.params.value(i).array() -=
        step_size * m.array() / ((v.array().sqrt() * inv_sqrt_bc2) + eps);
  }
}

template double global_norm(const ParameterSet<float>&);
template double global_norm(const ParameterSet<double>&);
template double clip_global_norm(ParameterSet<float>&, double);
template double clip_global_norm(ParameterSet<double>&, double);

}  // namespace pairgen::nn
