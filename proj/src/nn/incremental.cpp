#include "pairgen/nn/incremental.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pairgen::nn {

template <class S>
IncrementalState<S>::IncrementalState(const Model<S>& model) : model_(&model), prefix_("layer") {
  if (model.config.kind == ModelKind::encoder_decoder) throw std::logic_error("encoder_decoder needs a source");
  layers_.resize(static_cast<std::size_t>(model.config.n_layers));
}

template <class S>
IncrementalState<S>::IncrementalState(const Model<S>& model, const Sequence& source)
    : model_(&model), prefix_("dec"), cross_(true) {
  const auto& c = model.config;
  if (c.kind != ModelKind::encoder_decoder) throw std::logic_error("source given to a single-stack model");
  if (source.size() == 0) throw std::invalid_argument("empty sequence");
  if (static_cast<int>(source.size()) > c.max_len) throw std::length_error("sequence too long");
  if (!source.slots.empty()) throw std::invalid_argument("slots belong to decoder rows");
  Matrix<S> x = embed(model.params, source, c.uses_segment_embeddings);
  const Matrix<S> memory =
      stack_forward<S>(model.params, {"enc", c.n_layers, c.n_heads, false, 0.0}, std::move(x), nullptr, nullptr,
                    nullptr, nullptr, nullptr);
  layers_.resize(static_cast<std::size_t>(c.n_layers));
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string b = "dec." + std::to_string(l) + ".cross";
    auto& lc = layers_[static_cast<std::size_t>(l)];
    lc.cross_k = linear(memory, model.params[b + ".wk"], model.params[b + ".bk"]);
    lc.cross_v = linear(memory, model.params[b + ".wv"], model.params[b + ".bv"]);
  }
}

namespace {

// Attention of `q` rows against the first `limit(i)` cached key rows.
template <class S, class Limit>
Matrix<S> cached_attention(const Matrix<S>& q, const Matrix<S>& k, const Matrix<S>& v, int keys, int heads,
                           Limit limit) {
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  Matrix<S> context(q.rows(), d);
  for (int h = 0; h < heads; ++h) {
    Matrix<S> s(q.rows(), keys);
    s.noalias() = q.middleCols(h * dh, dh) * k.topRows(keys).middleCols(h * dh, dh).transpose();
    s *= scale;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const int n = limit(static_cast<int>(i));
      const S mx = s.row(i).head(n).maxCoeff();
      S sum = 0;
      for (int j = 0; j < keys; ++j) {
        s(i, j) = j < n ? std::exp(s(i, j) - mx) : S(0);
        sum += s(i, j);
      }
      s.row(i) /= sum;
    }
    context.middleCols(h * dh, dh).noalias() = s * v.topRows(keys).middleCols(h * dh, dh);
  }
  return context;
}

}  // namespace

template <class S>
Matrix<S> IncrementalState<S>::append(const Sequence& rows, bool bidirectional) {
  const auto& c = model_->config;
  const auto& p = model_->params;
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw std::invalid_argument("empty append");
  if (length_ + n > c.max_len) throw std::length_error("sequence too long");
  if (rows.slots.size() != rows.size() * static_cast<std::size_t>(c.slot_window))
    throw std::invalid_argument("decoder rows need slot_window slots each");
  Matrix<S> x = embed(p, rows, c.uses_segment_embeddings);
  const int base = length_;
  const int total = base + n;
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string b = prefix_ + "." + std::to_string(l);
    auto& lc = layers_[static_cast<std::size_t>(l)];
    if (lc.k.rows() == 0) {
      lc.k = Matrix<S>::Zero(c.max_len, c.d_model);
      lc.v = Matrix<S>::Zero(c.max_len, c.d_model);
    }
    {
      const Matrix<S> a_in = layer_norm<S>(x, p[b + ".ln_self.gain"], p[b + ".ln_self.bias"], nullptr);
      const Matrix<S> q = linear(a_in, p[b + ".self.wq"], p[b + ".self.bq"]);
      lc.k.middleRows(base, n) = linear(a_in, p[b + ".self.wk"], p[b + ".self.bk"]);
      lc.v.middleRows(base, n) = linear(a_in, p[b + ".self.wv"], p[b + ".self.bv"]);
      const Matrix<S> ctx = cached_attention<S>(q, lc.k, lc.v, total, c.n_heads, [&](int i) {
        return bidirectional ? total : base + i + 1;
      });
      x += linear(ctx, p[b + ".self.wo"], p[b + ".self.bo"]);
    }
    if (cross_) {
      const Matrix<S> c_in = layer_norm<S>(x, p[b + ".ln_cross.gain"], p[b + ".ln_cross.bias"], nullptr);
      const Matrix<S> q = linear(c_in, p[b + ".cross.wq"], p[b + ".cross.bq"]);
      const int keys = static_cast<int>(lc.cross_k.rows());
      const Matrix<S> ctx =
          cached_attention<S>(q, lc.cross_k, lc.cross_v, keys, c.n_heads, [&](int) { return keys; });
      x += linear(ctx, p[b + ".cross.wo"], p[b + ".cross.bo"]);
    }
    const Matrix<S> f_in = layer_norm<S>(x, p[b + ".ln_ffn.gain"], p[b + ".ln_ffn.bias"], nullptr);
    x += linear(gelu(linear(f_in, p[b + ".ffn.w1"], p[b + ".ffn.b1"])), p[b + ".ffn.w2"], p[b + ".ffn.b2"]);
  }
  length_ = total;
  return layer_norm<S>(x, p[prefix_ + ".final_ln.gain"], p[prefix_ + ".final_ln.bias"], nullptr);
}

template <class S>
Matrix<S> IncrementalState<S>::token_logits(const Matrix<S>& hidden) const {
  return linear(hidden, model_->params["head.token.w"], model_->params["head.token.b"]);
}

template <class S>
Matrix<S> IncrementalState<S>::position_logits(const Matrix<S>& hidden) const {
  return linear(hidden, model_->params["head.position.w"], model_->params["head.position.b"]);
}

template class IncrementalState<float>;
template class IncrementalState<double>;

}  // namespace pairgen::nn
