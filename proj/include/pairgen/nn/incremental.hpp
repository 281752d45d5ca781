#pragma once

#include <string>
#include <vector>

#include "pairgen/nn/layers.hpp"
#include "pairgen/nn/parameters.hpp"

namespace pairgen::nn {

// Key/value-cached evaluation for autoregressive decoding. Produces the same
// hidden states as ForwardPass under a causal (or hybrid) mask.
template <class S>
class IncrementalState {
 public:
  // causal_lm and bidir_causal_hybrid.
  explicit IncrementalState(const Model<S>& model);
  // encoder_decoder: runs the encoder over `source` once.
  IncrementalState(const Model<S>& model, const Sequence& source);

  // Appends rows to the cache and returns their final hidden states. New rows
  // attend to every cached row; among themselves causally, or fully when
  // `bidirectional` (the planner's input prefix).
  Matrix<S> append(const Sequence& rows, bool bidirectional = false);

  Matrix<S> token_logits(const Matrix<S>& hidden) const;
  Matrix<S> position_logits(const Matrix<S>& hidden) const;

  int length() const { return length_; }
  const Model<S>& model() const { return *model_; }

 private:
  struct LayerCache {
    Matrix<S> k, v;              // self-attention, max_len rows
    Matrix<S> cross_k, cross_v;  // encoder memory projections
  };

  const Model<S>* model_;
  std::string prefix_;
  bool cross_ = false;
  std::vector<LayerCache> layers_;
  int length_ = 0;
};

}  // namespace pairgen::nn
