#pragma once

// Forward/backward primitives shared by the full-sequence and incremental
// transformer paths. Activations are row-major (sequence x features).

#include <string>
#include <vector>

#include "pairgen/nn/mask.hpp"
#include "pairgen/nn/parameters.hpp"
#include "pairgen/rng.hpp"

namespace pairgen::nn {

template <class S>
Matrix<S> linear(const Matrix<S>& x, const Matrix<S>& w, const Matrix<S>& b);

// Accumulates dw, db; writes dx when requested.
template <class S>
void linear_backward(const Matrix<S>& x, const Matrix<S>& w, const Matrix<S>& dy, Matrix<S>& dw, Matrix<S>& db,
                     Matrix<S>* dx);

template <class S>
struct LayerNormCache {
  Matrix<S> xhat;
  Eigen::Matrix<S, Eigen::Dynamic, 1> rstd;
};

template <class S>
Matrix<S> layer_norm(const Matrix<S>& x, const Matrix<S>& gain, const Matrix<S>& bias, LayerNormCache<S>* cache);

template <class S>
Matrix<S> layer_norm_backward(const Matrix<S>& dy, const Matrix<S>& gain, const LayerNormCache<S>& cache,
                              Matrix<S>& dgain, Matrix<S>& dbias);

// tanh approximation
template <class S>
Matrix<S> gelu(const Matrix<S>& x);
template <class S>
Matrix<S> gelu_backward(const Matrix<S>& x, const Matrix<S>& dy);

// Inverted dropout scale matrix; empty when inactive.
template <class S>
Matrix<S> dropout_scale(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng);

template <class S>
struct AttentionWeights {
  const Matrix<S>* wq;
  const Matrix<S>* bq;
  const Matrix<S>* wk;
  const Matrix<S>* bk;
  const Matrix<S>* wv;
  const Matrix<S>* bv;
  const Matrix<S>* wo;
  const Matrix<S>* bo;
};

template <class S>
struct AttentionGrads {
  Matrix<S>* wq;
  Matrix<S>* bq;
  Matrix<S>* wk;
  Matrix<S>* bk;
  Matrix<S>* wv;
  Matrix<S>* bv;
  Matrix<S>* wo;
  Matrix<S>* bo;
};

template <class S>
AttentionWeights<S> attention_weights(const ParameterSet<S>& p, const std::string& prefix);
template <class S>
AttentionGrads<S> attention_grads(ParameterSet<S>& g, const std::string& prefix);

template <class S>
struct AttentionCache {
  Matrix<S> q_in, kv_in, q, k, v, context;
  std::vector<Matrix<S>> probs;  // per head, Lq x Lk
};

// Multi-head scaled dot-product attention; mask == nullptr means unrestricted.
template <class S>
Matrix<S> attention_forward(const Matrix<S>& q_in, const Matrix<S>& kv_in, const AttentionWeights<S>& w, int heads,
                            const AttentionMask* mask, AttentionCache<S>* cache);

template <class S>
void attention_backward(const Matrix<S>& dout, const AttentionWeights<S>& w, const AttentionGrads<S>& g, int heads,
                        const AttentionCache<S>& cache, Matrix<S>& dq_in, Matrix<S>& dkv_in);

// Row-wise softmax over scores restricted to allowed columns; in place.
template <class S>
void masked_softmax_rows(Matrix<S>& scores, const AttentionMask* mask);

template <class S>
struct BlockCache {
  LayerNormCache<S> ln_self, ln_cross, ln_ffn;
  AttentionCache<S> self, cross;
  Matrix<S> drop_self, drop_cross, drop_ffn;
  Matrix<S> ffn_in, ffn_h, ffn_a;
};

template <class S>
struct StackCache {
  std::vector<BlockCache<S>> blocks;
  LayerNormCache<S> final_ln;
};

struct StackSpec {
  std::string prefix;  // "enc", "dec" or "layer"
  int n_layers = 0;
  int heads = 1;
  bool cross = false;
  double dropout = 0.0;
};

// Runs the pre-norm block stack followed by the final layer norm.
template <class S>
Matrix<S> stack_forward(const ParameterSet<S>& p, const StackSpec& spec, Matrix<S> x, const AttentionMask* mask,
                        const Matrix<S>* memory, Rng* dropout_rng, StackCache<S>* cache,
                        std::vector<Matrix<S>>* hidden_states);

// Returns d(input); accumulates parameter gradients and, for cross stacks, d(memory).
template <class S>
Matrix<S> stack_backward(const ParameterSet<S>& p, ParameterSet<S>& g, const StackSpec& spec, const Matrix<S>& dout,
                         const StackCache<S>& cache, Matrix<S>* dmemory);

template <class S>
Matrix<S> embed(const ParameterSet<S>& p, const Sequence& seq, bool segments);

template <class S>
void embed_backward(ParameterSet<S>& g, const Sequence& seq, bool segments, const Matrix<S>& dx);

// Sum of token negative log-likelihoods; writes scale * (softmax - onehot).
template <class S>
double softmax_cross_entropy(const Matrix<S>& logits, const std::vector<int>& targets, Matrix<S>* dlogits, double scale);

// Numerically stable log-softmax of one row, in double.
std::vector<double> log_softmax(const double* logits, int n);

}  // namespace pairgen::nn
