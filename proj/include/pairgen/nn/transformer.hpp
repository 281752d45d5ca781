#pragma once

#include <optional>
#include <vector>

#include "pairgen/nn/layers.hpp"
#include "pairgen/nn/mask.hpp"
#include "pairgen/nn/parameters.hpp"

namespace pairgen::nn {

template <class S>
struct ForwardTrace {
  // Output of every block, then the final-norm output H^L that feeds the heads.
  std::vector<Matrix<S>> hidden_states;
  std::vector<Matrix<S>> encoder_states;  // encoder_decoder only
  Matrix<S> logits;                       // rows: positions from head_from
  Matrix<S> position_logits;              // bidir_causal_hybrid only
};

// One forward pass with the activations kept for backpropagation.
template <class S>
class ForwardPass {
 public:
  // Single-stack kinds. Heads are evaluated for rows [head_from, L).
  ForwardPass(const Model<S>& model, const Sequence& seq, const AttentionMask& mask, int head_from = 0,
              Rng* dropout_rng = nullptr, bool keep_trace = false);
  // encoder_decoder: bidirectional encoder (or source_mask), causal decoder.
  ForwardPass(const Model<S>& model, const Sequence& source, const Sequence& target, Rng* dropout_rng = nullptr,
              bool keep_trace = false, const AttentionMask* source_mask = nullptr);

  ForwardPass(const ForwardPass&) = delete;
  ForwardPass& operator=(const ForwardPass&) = delete;

  const Matrix<S>& logits() const { return logits_; }
  const Matrix<S>& position_logits() const { return position_logits_; }
  ForwardTrace<S> trace() const;

  // Accumulates gradients of a loss whose derivatives w.r.t. the head outputs are given.
  void backward(const Matrix<S>& dlogits, const Matrix<S>* dposition_logits, ParameterSet<S>& grads) const;

 private:
  void check_length(std::size_t n) const;
  StackSpec spec(const std::string& prefix, bool cross) const;

  const Model<S>* model_;
  Sequence seq_, source_;
  AttentionMask mask_, causal_;
  const AttentionMask* source_mask_ = nullptr;
  AttentionMask source_mask_copy_;
  int head_from_ = 0;
  StackCache<S> cache_, enc_cache_;
  Matrix<S> hidden_, memory_;
  Matrix<S> logits_, position_logits_;
  std::vector<Matrix<S>> hidden_states_, encoder_states_;
};

// Convenience inference entry points (no dropout).
template <class S>
ForwardTrace<S> forward(const Model<S>& model, const Sequence& seq, const AttentionMask& mask);
template <class S>
ForwardTrace<S> forward(const Model<S>& model, const Sequence& source, const Sequence& target);

}  // namespace pairgen::nn
