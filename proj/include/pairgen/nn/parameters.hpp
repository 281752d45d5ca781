#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pairgen/nn/config.hpp"
#include "pairgen/nn/tensor.hpp"

namespace pairgen::nn {

struct ParameterShape {
  std::string name;
  int rows = 0;
  int cols = 0;
};

// Every named tensor the config implies, in a fixed order.
std::vector<ParameterShape> parameter_schema(const ModelConfig& config);

template <class S>
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(const std::vector<ParameterShape>& schema);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix<S>& value(std::size_t i) { return values_[i]; }
  const Matrix<S>& value(std::size_t i) const { return values_[i]; }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }
  Matrix<S>& operator[](std::string_view name);
  const Matrix<S>& operator[](std::string_view name) const;

  void set_zero();
  std::size_t scalar_count() const;
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<S>> values_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

template <class S>
struct Model {
  ModelConfig config;
  ParameterSet<S> params;

  // N(0, init_std) weights, zero biases, unit layer-norm gains.
  static Model initialized(const ModelConfig& config, std::uint64_t seed, double init_std = 0.02);

  template <class T>
  Model<T> cast() const {
    Model<T> out{config, ParameterSet<T>(parameter_schema(config))};
    for (std::size_t i = 0; i < params.size(); ++i) out.params.value(i) = params.value(i).template cast<T>();
    return out;
  }
};

}  // namespace pairgen::nn
