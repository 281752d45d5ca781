#include "pairgen/nn/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pairgen::nn {

Sequence Sequence::plain(std::vector<int> ids, int segment) {
  Sequence s;
  s.positions.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) s.positions[i] = static_cast<int>(i);
  if (segment >= 0) s.segments.assign(ids.size(), segment);
  s.ids = std::move(ids);
  return s;
}

template <class S>
Matrix<S> linear(const Matrix<S>& x, const Matrix<S>& w, const Matrix<S>& b) {
  Matrix<S> y(x.rows(), w.cols());
  y.noalias() = x * w;
  y.rowwise() += b.row(0);
  return y;
}

template <class S>
void linear_backward(const Matrix<S>& x, const Matrix<S>& w, const Matrix<S>& dy, Matrix<S>& dw, Matrix<S>& db,
                     Matrix<S>* dx) {
  dw.noalias() += x.transpose() * dy;
  db.row(0) += dy.colwise().sum();
  if (dx) {
    dx->resize(dy.rows(), w.rows());
    dx->noalias() = dy * w.transpose();
  }
}

constexpr double kLayerNormEps = 1e-5;

template <class S>
Matrix<S> layer_norm(const Matrix<S>& x, const Matrix<S>& gain, const Matrix<S>& bias, LayerNormCache<S>* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix<S> xhat(n, d);
  Eigen::Matrix<S, Eigen::Dynamic, 1> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mean = x.row(i).mean();
    const S var = (x.row(i).array() - mean).square().mean();
    rstd(i) = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  Matrix<S> y = xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <class S>
Matrix<S> layer_norm_backward(const Matrix<S>& dy, const Matrix<S>& gain, const LayerNormCache<S>& cache,
                              Matrix<S>& dgain, Matrix<S>& dbias) {
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  Matrix<S> dxhat = dy.array().rowwise() * gain.row(0).array();
  Matrix<S> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const S m1 = dxhat.row(i).mean();
    const S m2 = (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) = cache.rstd(i) * (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2);
  }
  return dx;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

template <class S>
Matrix<S> gelu(const Matrix<S>& x) {
  return x.unaryExpr([](S v) {
    const S u = static_cast<S>(kGeluC) * (v + static_cast<S>(kGeluA) * v * v * v);
    return S(0.5) * v * (S(1) + std::tanh(u));
  });
}

template <class S>
Matrix<S> gelu_backward(const Matrix<S>& x, const Matrix<S>& dy) {
  return x.binaryExpr(dy, [](S v, S g) {
    const S u = static_cast<S>(kGeluC) * (v + static_cast<S>(kGeluA) * v * v * v);
    const S t = std::tanh(u);
    const S du = static_cast<S>(kGeluC) * (S(1) + S(3) * static_cast<S>(kGeluA) * v * v);
    return g * (S(0.5) * (S(1) + t) + S(0.5) * v * (S(1) - t * t) * du);
  });
}

template <class S>
Matrix<S> dropout_scale(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
  if (!rng || p <= 0.0) return {};
  Matrix<S> m(rows, cols);
  const S keep = static_cast<S>(1.0 / (1.0 - p));
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = uniform01(*rng) < p ? S(0) : keep;
  return m;
}

template <class S>
AttentionWeights<S> attention_weights(const ParameterSet<S>& p, const std::string& prefix) {
  return {&p[prefix + ".wq"], &p[prefix + ".bq"], &p[prefix + ".wk"], &p[prefix + ".bk"],
          &p[prefix + ".wv"], &p[prefix + ".bv"], &p[prefix + ".wo"], &p[prefix + ".bo"]};
}

template <class S>
AttentionGrads<S> attention_grads(ParameterSet<S>& g, const std::string& prefix) {
  return {&g[prefix + ".wq"], &g[prefix + ".bq"], &g[prefix + ".wk"], &g[prefix + ".bk"],
          &g[prefix + ".wv"], &g[prefix + ".bv"], &g[prefix + ".wo"], &g[prefix + ".bo"]};
}

template <class S>
void masked_softmax_rows(Matrix<S>& scores, const AttentionMask* mask) {
  const Eigen::Index rows = scores.rows(), cols = scores.cols();
  for (Eigen::Index i = 0; i < rows; ++i) {
    S mx = -std::numeric_limits<S>::infinity();
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!mask || (*mask)(static_cast<int>(i), static_cast<int>(j))) mx = std::max(mx, scores(i, j));
    S sum = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (mask && !(*mask)(static_cast<int>(i), static_cast<int>(j))) {
        scores(i, j) = 0;
      } else {
        scores(i, j) = std::exp(scores(i, j) - mx);
        sum += scores(i, j);
      }
    }
    scores.row(i) /= sum;
  }
}

template <class S>
Matrix<S> attention_forward(const Matrix<S>& q_in, const Matrix<S>& kv_in, const AttentionWeights<S>& w, int heads,
                            const AttentionMask* mask, AttentionCache<S>* cache) {
  const Eigen::Index d = w.wq->cols();
  const Eigen::Index dh = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  if (mask && (mask->size() != q_in.rows() || mask->size() != kv_in.rows()))
    throw std::invalid_argument("attention mask does not match sequence length");

  Matrix<S> q = linear(q_in, *w.wq, *w.bq);
  Matrix<S> k = linear(kv_in, *w.wk, *w.bk);
  Matrix<S> v = linear(kv_in, *w.wv, *w.bv);
  Matrix<S> context(q_in.rows(), d);
  std::vector<Matrix<S>> probs(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Matrix<S> s(q.rows(), k.rows());
    s.noalias() = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose();
    s *= scale;
    masked_softmax_rows(s, mask);
    context.middleCols(h * dh, dh).noalias() = s * v.middleCols(h * dh, dh);
    probs[static_cast<std::size_t>(h)] = std::move(s);
  }
  Matrix<S> out = linear(context, *w.wo, *w.bo);
  if (cache) {
    cache->q_in = q_in;
    cache->kv_in = kv_in;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->probs = std::move(probs);
  }
  return out;
}

template <class S>
void attention_backward(const Matrix<S>& dout, const AttentionWeights<S>& w, const AttentionGrads<S>& g, int heads,
                        const AttentionCache<S>& c, Matrix<S>& dq_in, Matrix<S>& dkv_in) {
  const Eigen::Index d = w.wq->cols();
  const Eigen::Index dh = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  Matrix<S> dcontext;
  linear_backward(c.context, *w.wo, dout, *g.wo, *g.bo, &dcontext);

  Matrix<S> dq(c.q.rows(), d), dk(c.k.rows(), d), dv(c.v.rows(), d);
  for (int h = 0; h < heads; ++h) {
    const Matrix<S>& p = c.probs[static_cast<std::size_t>(h)];
    const auto dctx = dcontext.middleCols(h * dh, dh);
    Matrix<S> dp(p.rows(), p.cols());
    dp.noalias() = dctx * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh).noalias() = p.transpose() * dctx;
    // softmax backward: ds = p * (dp - rowsum(dp * p))
    Eigen::Matrix<S, Eigen::Dynamic, 1> dot = (dp.array() * p.array()).rowwise().sum();
    Matrix<S> ds = p.array() * (dp.array().colwise() - dot.array());
    ds *= scale;
    dq.middleCols(h * dh, dh).noalias() = ds * c.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * c.q.middleCols(h * dh, dh);
  }
  linear_backward(c.q_in, *w.wq, dq, *g.wq, *g.bq, &dq_in);
  Matrix<S> dkv_from_k, dkv_from_v;
  linear_backward(c.kv_in, *w.wk, dk, *g.wk, *g.bk, &dkv_from_k);
  linear_backward(c.kv_in, *w.wv, dv, *g.wv, *g.bv, &dkv_from_v);
  dkv_in = dkv_from_k + dkv_from_v;
}

namespace {

template <class S>
Matrix<S> apply_dropout(Matrix<S> x, const Matrix<S>& scale) {
  if (scale.size() == 0) return x;
  return x.cwiseProduct(scale);
}

template <class S>
Matrix<S> dropout_grad(const Matrix<S>& dy, const Matrix<S>& scale) {
  if (scale.size() == 0) return dy;
  return dy.cwiseProduct(scale);
}

}  // namespace

template <class S>
Matrix<S> stack_forward(const ParameterSet<S>& p, const StackSpec& spec, Matrix<S> x, const AttentionMask* mask,
                        const Matrix<S>* memory, Rng* rng, StackCache<S>* cache,
                        std::vector<Matrix<S>>* hidden_states) {
  if (cache) cache->blocks.resize(static_cast<std::size_t>(spec.n_layers));
  for (int l = 0; l < spec.n_layers; ++l) {
    const std::string b = spec.prefix + "." + std::to_string(l);
    BlockCache<S> local;
    BlockCache<S>& bc = cache ? cache->blocks[static_cast<std::size_t>(l)] : local;

    Matrix<S> a_in = layer_norm(x, p[b + ".ln_self.gain"], p[b + ".ln_self.bias"], cache ? &bc.ln_self : nullptr);
    Matrix<S> a = attention_forward(a_in, a_in, attention_weights(p, b + ".self"), spec.heads, mask,
                                    cache ? &bc.self : nullptr);
    bc.drop_self = dropout_scale<S>(a.rows(), a.cols(), spec.dropout, rng);
    x += apply_dropout(std::move(a), bc.drop_self);

    if (spec.cross) {
      Matrix<S> c_in = layer_norm(x, p[b + ".ln_cross.gain"], p[b + ".ln_cross.bias"], cache ? &bc.ln_cross : nullptr);
      Matrix<S> c = attention_forward(c_in, *memory, attention_weights(p, b + ".cross"), spec.heads, nullptr,
                                      cache ? &bc.cross : nullptr);
      bc.drop_cross = dropout_scale<S>(c.rows(), c.cols(), spec.dropout, rng);
      x += apply_dropout(std::move(c), bc.drop_cross);
    }

    Matrix<S> f_in = layer_norm(x, p[b + ".ln_ffn.gain"], p[b + ".ln_ffn.bias"], cache ? &bc.ln_ffn : nullptr);
    Matrix<S> h = linear(f_in, p[b + ".ffn.w1"], p[b + ".ffn.b1"]);
    Matrix<S> act = gelu(h);
    Matrix<S> f = linear(act, p[b + ".ffn.w2"], p[b + ".ffn.b2"]);
    bc.drop_ffn = dropout_scale<S>(f.rows(), f.cols(), spec.dropout, rng);
    x += apply_dropout(std::move(f), bc.drop_ffn);
    if (cache) {
      bc.ffn_in = std::move(f_in);
      bc.ffn_h = std::move(h);
      bc.ffn_a = std::move(act);
    }
    if (hidden_states) hidden_states->push_back(x);
  }
  Matrix<S> out = layer_norm(x, p[spec.prefix + ".final_ln.gain"], p[spec.prefix + ".final_ln.bias"],
                             cache ? &cache->final_ln : nullptr);
  if (hidden_states) hidden_states->push_back(out);
  return out;
}

template <class S>
Matrix<S> stack_backward(const ParameterSet<S>& p, ParameterSet<S>& g, const StackSpec& spec, const Matrix<S>& dout,
                         const StackCache<S>& cache, Matrix<S>* dmemory) {
  const std::string fl = spec.prefix + ".final_ln";
  Matrix<S> dx = layer_norm_backward(dout, p[fl + ".gain"], cache.final_ln, g[fl + ".gain"], g[fl + ".bias"]);
  for (int l = spec.n_layers - 1; l >= 0; --l) {
    const std::string b = spec.prefix + "." + std::to_string(l);
    const BlockCache<S>& bc = cache.blocks[static_cast<std::size_t>(l)];

    {  // feed-forward branch
      Matrix<S> df = dropout_grad(dx, bc.drop_ffn);
      Matrix<S> dact;
      linear_backward(bc.ffn_a, p[b + ".ffn.w2"], df, g[b + ".ffn.w2"], g[b + ".ffn.b2"], &dact);
      Matrix<S> dh = gelu_backward(bc.ffn_h, dact);
      Matrix<S> dfin;
      linear_backward(bc.ffn_in, p[b + ".ffn.w1"], dh, g[b + ".ffn.w1"], g[b + ".ffn.b1"], &dfin);
      dx += layer_norm_backward(dfin, p[b + ".ln_ffn.gain"], bc.ln_ffn, g[b + ".ln_ffn.gain"], g[b + ".ln_ffn.bias"]);
    }
    if (spec.cross) {
      Matrix<S> dc = dropout_grad(dx, bc.drop_cross);
      Matrix<S> dq_in, dmem;
      attention_backward(dc, attention_weights(p, b + ".cross"), attention_grads(g, b + ".cross"), spec.heads,
                         bc.cross, dq_in, dmem);
      if (dmemory) *dmemory += dmem;
      dx += layer_norm_backward(dq_in, p[b + ".ln_cross.gain"], bc.ln_cross, g[b + ".ln_cross.gain"],
                                g[b + ".ln_cross.bias"]);
    }
    {
      Matrix<S> da = dropout_grad(dx, bc.drop_self);
      Matrix<S> dq_in, dkv_in;
      attention_backward(da, attention_weights(p, b + ".self"), attention_grads(g, b + ".self"), spec.heads, bc.self,
                         dq_in, dkv_in);
      dq_in += dkv_in;
      dx += layer_norm_backward(dq_in, p[b + ".ln_self.gain"], bc.ln_self, g[b + ".ln_self.gain"],
                                g[b + ".ln_self.bias"]);
    }
  }
  return dx;
}

template <class S>
Matrix<S> embed(const ParameterSet<S>& p, const Sequence& seq, bool segments) {
  const auto& tok = p["embed.token"];
  const auto& pos = p["embed.position"];
  const Eigen::Index n = static_cast<Eigen::Index>(seq.size());
  if (seq.positions.size() != seq.size()) throw std::invalid_argument("positions do not match ids");
  if (segments != !seq.segments.empty()) throw std::invalid_argument("segment ids supplied iff the model uses them");
  if (segments && seq.segments.size() != seq.size()) throw std::invalid_argument("segments do not match ids");
  Matrix<S> x(n, tok.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (seq.ids[k] < 0 || seq.ids[k] >= tok.rows()) throw std::out_of_range("token id out of range");
    if (seq.positions[k] < 0 || seq.positions[k] >= pos.rows()) throw std::length_error("sequence too long");
    x.row(i) = tok.row(seq.ids[k]) + pos.row(seq.positions[k]);
    if (segments) x.row(i) += p["embed.segment"].row(seq.segments[k]);
  }
  if (!seq.slots.empty()) {
    if (seq.slots.size() % seq.size() != 0) throw std::invalid_argument("slots do not match ids");
    const std::size_t w = seq.slots.size() / seq.size();
    for (std::size_t k = 0; k < w; ++k) {
      const auto& slot = p["embed.slot." + std::to_string(k)];
      for (Eigen::Index i = 0; i < n; ++i) {
        const int s = seq.slots[static_cast<std::size_t>(i) * w + k];
        if (s < 0 || s >= slot.rows()) throw std::out_of_range("slot id out of range");
        x.row(i) += slot.row(s);
      }
    }
  }
  return x;
}

template <class S>
void embed_backward(ParameterSet<S>& g, const Sequence& seq, bool segments, const Matrix<S>& dx) {
  auto& tok = g["embed.token"];
  auto& pos = g["embed.position"];
  Matrix<S>* seg = segments ? &g["embed.segment"] : nullptr;
  for (Eigen::Index i = 0; i < dx.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    tok.row(seq.ids[k]) += dx.row(i);
    pos.row(seq.positions[k]) += dx.row(i);
    if (seg) seg->row(seq.segments[k]) += dx.row(i);
  }
  if (!seq.slots.empty()) {
    const std::size_t w = seq.slots.size() / seq.size();
    for (std::size_t k = 0; k < w; ++k) {
      auto& slot = g["embed.slot." + std::to_string(k)];
      for (Eigen::Index i = 0; i < dx.rows(); ++i) slot.row(seq.slots[static_cast<std::size_t>(i) * w + k]) += dx.row(i);
    }
  }
}

std::vector<double> log_softmax(const double* logits, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) mx = std::max(mx, logits[j]);
  double sum = 0;
  for (int j = 0; j < n; ++j) sum += std::exp(logits[j] - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] = logits[j] - lse;
  return out;
}

template <class S>
double softmax_cross_entropy(const Matrix<S>& logits, const std::vector<int>& targets, Matrix<S>* dlogits,
                             double scale) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw std::invalid_argument("targets do not match logits rows");
  const int v = static_cast<int>(logits.cols());
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  double total = 0;
  std::vector<double> row(static_cast<std::size_t>(v));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (int j = 0; j < v; ++j) row[static_cast<std::size_t>(j)] = static_cast<double>(logits(i, j));
    const auto lp = log_softmax(row.data(), v);
    const int t = targets[static_cast<std::size_t>(i)];
    total -= lp[static_cast<std::size_t>(t)];
    if (dlogits) {
      for (int j = 0; j < v; ++j)
        (*dlogits)(i, j) = static_cast<S>(scale * (std::exp(lp[static_cast<std::size_t>(j)]) - (j == t ? 1.0 : 0.0)));
    }
  }
  return total;
}

#define PAIRGEN_INSTANTIATE_LAYERS(S)                                                                              \
  template Matrix<S> linear(const Matrix<S>&, const Matrix<S>&, const Matrix<S>&);                                 \
  template void linear_backward(const Matrix<S>&, const Matrix<S>&, const Matrix<S>&, Matrix<S>&, Matrix<S>&,      \
                                Matrix<S>*);                                                                       \
  template Matrix<S> layer_norm(const Matrix<S>&, const Matrix<S>&, const Matrix<S>&, LayerNormCache<S>*);         \
  template Matrix<S> layer_norm_backward(const Matrix<S>&, const Matrix<S>&, const LayerNormCache<S>&, Matrix<S>&, \
                                         Matrix<S>&);                                                              \
  template Matrix<S> gelu(const Matrix<S>&);                                                                       \
  template Matrix<S> gelu_backward(const Matrix<S>&, const Matrix<S>&);                                            \
  template Matrix<S> dropout_scale(Eigen::Index, Eigen::Index, double, Rng*);                                      \
  template AttentionWeights<S> attention_weights(const ParameterSet<S>&, const std::string&);                      \
  template AttentionGrads<S> attention_grads(ParameterSet<S>&, const std::string&);                                \
  template void masked_softmax_rows(Matrix<S>&, const AttentionMask*);                                             \
  template Matrix<S> attention_forward(const Matrix<S>&, const Matrix<S>&, const AttentionWeights<S>&, int,        \
                                       const AttentionMask*, AttentionCache<S>*);                                  \
  template void attention_backward(const Matrix<S>&, const AttentionWeights<S>&, const AttentionGrads<S>&, int,    \
                                   const AttentionCache<S>&, Matrix<S>&, Matrix<S>&);                              \
  template Matrix<S> stack_forward(const ParameterSet<S>&, const StackSpec&, Matrix<S>, const AttentionMask*,      \
                                   const Matrix<S>*, Rng*, StackCache<S>*, std::vector<Matrix<S>>*);               \
  template Matrix<S> stack_backward(const ParameterSet<S>&, ParameterSet<S>&, const StackSpec&, const Matrix<S>&,  \
                                    const StackCache<S>&, Matrix<S>*);                                             \
  template Matrix<S> embed(const ParameterSet<S>&, const Sequence&, bool);                                         \
  template void embed_backward(ParameterSet<S>&, const Sequence&, bool, const Matrix<S>&);                         \
  template double softmax_cross_entropy(const Matrix<S>&, const std::vector<int>&, Matrix<S>*, double);

PAIRGEN_INSTANTIATE_LAYERS(float)
PAIRGEN_INSTANTIATE_LAYERS(double)

}  // namespace pairgen::nn
