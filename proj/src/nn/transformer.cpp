#include "pairgen/nn/transformer.hpp"

#include <stdexcept>

namespace pairgen::nn {

template <class S>
void ForwardPass<S>::check_length(std::size_t n) const {
  if (n == 0) throw std::invalid_argument("empty sequence");
  if (static_cast<int>(n) > model_->config.max_len) throw std::length_error("sequence too long");
}

template <class S>
StackSpec ForwardPass<S>::spec(const std::string& prefix, bool cross) const {
  const auto& c = model_->config;
  return {prefix, c.n_layers, c.n_heads, cross, c.dropout};
}

template <class S>
ForwardPass<S>::ForwardPass(const Model<S>& model, const Sequence& seq, const AttentionMask& mask, int head_from,
                            Rng* dropout_rng, bool keep_trace)
    : model_(&model), seq_(seq), mask_(mask), head_from_(head_from) {
  const auto& c = model.config;
  if (c.kind == ModelKind::encoder_decoder) throw std::logic_error("encoder_decoder needs source and target");
  if (!seq.slots.empty()) throw std::invalid_argument("slot embeddings need an encoder_decoder model");
  check_length(seq.size());
  if (mask.size() != static_cast<int>(seq.size())) throw std::invalid_argument("mask does not match sequence");
  if (head_from < 0 || head_from > static_cast<int>(seq.size())) throw std::invalid_argument("bad head_from");

  Matrix<S> x = embed(model.params, seq, c.uses_segment_embeddings);
  hidden_ = stack_forward<S>(model.params, spec("layer", false), std::move(x), &mask_, nullptr,
                          dropout_rng, &cache_, keep_trace ? &hidden_states_ : nullptr);
  const Eigen::Index rows = hidden_.rows() - head_from;
  const auto h = hidden_.bottomRows(rows);
  logits_ = linear<S>(h, model.params["head.token.w"], model.params["head.token.b"]);
  if (c.kind == ModelKind::bidir_causal_hybrid)
    position_logits_ = linear<S>(h, model.params["head.position.w"], model.params["head.position.b"]);
}

template <class S>
ForwardPass<S>::ForwardPass(const Model<S>& model, const Sequence& source, const Sequence& target, Rng* dropout_rng,
                            bool keep_trace, const AttentionMask* source_mask)
    : model_(&model), seq_(target), source_(source) {
  const auto& c = model.config;
  if (c.kind != ModelKind::encoder_decoder) throw std::logic_error("source/target forward needs encoder_decoder");
  check_length(source.size());
  check_length(target.size());
  if (source_mask) {
    source_mask_copy_ = *source_mask;
    source_mask_ = &source_mask_copy_;
  }
  causal_ = build_causal_mask(static_cast<int>(target.size()));
  if (!source.slots.empty()) throw std::invalid_argument("slots belong to decoder rows");
  if (target.slots.size() != target.size() * static_cast<std::size_t>(c.slot_window))
    throw std::invalid_argument("decoder rows need slot_window slots each");

  Matrix<S> xs = embed(model.params, source, c.uses_segment_embeddings);
  memory_ = stack_forward<S>(model.params, spec("enc", false), std::move(xs), source_mask_, nullptr, dropout_rng,
                          &enc_cache_, keep_trace ? &encoder_states_ : nullptr);
  Matrix<S> xt = embed(model.params, seq_, c.uses_segment_embeddings);
  hidden_ = stack_forward<S>(model.params, spec("dec", true), std::move(xt), &causal_, &memory_, dropout_rng, &cache_,
                          keep_trace ? &hidden_states_ : nullptr);
  logits_ = linear(hidden_, model.params["head.token.w"], model.params["head.token.b"]);
}

template <class S>
ForwardTrace<S> ForwardPass<S>::trace() const {
  ForwardTrace<S> t;
  t.hidden_states = hidden_states_;
  if (t.hidden_states.empty()) t.hidden_states.push_back(hidden_);
  t.encoder_states = encoder_states_;
  t.logits = logits_;
  t.position_logits = position_logits_;
  return t;
}

template <class S>
void ForwardPass<S>::backward(const Matrix<S>& dlogits, const Matrix<S>* dposition_logits,
                              ParameterSet<S>& g) const {
  const auto& p = model_->params;
  const auto& c = model_->config;
  const Eigen::Index rows = hidden_.rows() - head_from_;
  Matrix<S> dh = Matrix<S>::Zero(hidden_.rows(), hidden_.cols());
  {
    const Matrix<S> h = hidden_.bottomRows(rows);
    Matrix<S> d;
    linear_backward(h, p["head.token.w"], dlogits, g["head.token.w"], g["head.token.b"], &d);
    dh.bottomRows(rows) += d;
    if (dposition_logits) {
      linear_backward(h, p["head.position.w"], *dposition_logits, g["head.position.w"], g["head.position.b"], &d);
      dh.bottomRows(rows) += d;
    }
  }
  if (c.kind == ModelKind::encoder_decoder) {
    Matrix<S> dmemory = Matrix<S>::Zero(memory_.rows(), memory_.cols());
    Matrix<S> dxt = stack_backward<S>(p, g, spec("dec", true), dh, cache_, &dmemory);
    embed_backward(g, seq_, c.uses_segment_embeddings, dxt);
    Matrix<S> dxs = stack_backward<S>(p, g, spec("enc", false), dmemory, enc_cache_, nullptr);
    embed_backward(g, source_, c.uses_segment_embeddings, dxs);
  } else {
    Matrix<S> dx = stack_backward<S>(p, g, spec("layer", false), dh, cache_, nullptr);
    embed_backward(g, seq_, c.uses_segment_embeddings, dx);
  }
}

template <class S>
ForwardTrace<S> forward(const Model<S>& model, const Sequence& seq, const AttentionMask& mask) {
  return ForwardPass<S>(model, seq, mask, 0, nullptr, true).trace();
}

template <class S>
ForwardTrace<S> forward(const Model<S>& model, const Sequence& source, const Sequence& target) {
  return ForwardPass<S>(model, source, target, nullptr, true).trace();
}

template class ForwardPass<float>;
template class ForwardPass<double>;
template ForwardTrace<float> forward(const Model<float>&, const Sequence&, const AttentionMask&);
template ForwardTrace<double> forward(const Model<double>&, const Sequence&, const AttentionMask&);
template ForwardTrace<float> forward(const Model<float>&, const Sequence&, const Sequence&);
template ForwardTrace<double> forward(const Model<double>&, const Sequence&, const Sequence&);

}  // namespace pairgen::nn
