#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pairgen/nn/optim.hpp"

namespace pairgen::nn {

struct GradcheckResult {
  double max_relative_error = 0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
// gradient is zero from dividing round-off by round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

template <class Example>
double batch_loss(const Model<double>& model, std::span<const Example> batch,
                  const ExampleLoss<double, Example>& loss, ParameterSet<double>* grads) {
  double total = 0;
  for (const auto& ex : batch) total += loss(model, ex, grads, nullptr);
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grads)
    for (std::size_t i = 0; i < grads->size(); ++i) grads->value(i) *= inv;
  return total * inv;
}

// Central finite differences against the analytic gradient. Checks every
// coordinate when the model has at most `coordinates` scalars; otherwise at
// least one coordinate per tensor plus a seeded uniform sample up to `coordinates`.
template <class Example>
GradcheckResult gradcheck(Model<double>& model, std::span<const Example> batch,
                          const ExampleLoss<double, Example>& loss, double epsilon, std::size_t coordinates = 200,
                          std::uint64_t seed = 0) {
  ParameterSet<double> grads(parameter_schema(model.config));
  batch_loss(model, batch, loss, &grads);

  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  const std::size_t total = model.params.scalar_count();
  if (total <= coordinates) {
    for (std::size_t t = 0; t < model.params.size(); ++t)
      for (Eigen::Index k = 0; k < model.params.value(t).size(); ++k) coords.emplace_back(t, k);
  } else {
    Rng rng(derive_seed(seed, "gradcheck"));
    for (std::size_t t = 0; t < model.params.size(); ++t) {
      const auto n = static_cast<std::uint64_t>(model.params.value(t).size());
      coords.emplace_back(t, static_cast<Eigen::Index>(uniform_below(rng, n)));
    }
    std::vector<std::size_t> offsets(model.params.size() + 1, 0);
    for (std::size_t t = 0; t < model.params.size(); ++t)
      offsets[t + 1] = offsets[t] + static_cast<std::size_t>(model.params.value(t).size());
    while (coords.size() < coordinates) {
      const std::size_t flat = uniform_below(rng, total);
      const auto t = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) - offsets.begin() - 1);
      coords.emplace_back(t, static_cast<Eigen::Index>(flat - offsets[t]));
    }
  }

  GradcheckResult result;
  result.coordinates = coords.size();
  for (const auto& [t, k] : coords) {
    double& w = model.params.value(t).data()[k];
    const double saved = w;
    w = saved + epsilon;
    const double plus = batch_loss<Example>(model, batch, loss, nullptr);
    w = saved - epsilon;
    const double minus = batch_loss<Example>(model, batch, loss, nullptr);
    w = saved;
    const double numeric = (plus - minus) / (2 * epsilon);
    const double err = relative_error(grads.value(t).data()[k], numeric);
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = model.params.name(t);
    }
  }
  return result;
}

}  // namespace pairgen::nn
