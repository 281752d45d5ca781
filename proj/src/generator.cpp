#include "pairgen/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pairgen/nn/incremental.hpp"
#include "pairgen/nn/transformer.hpp"
#include "pairgen/templates.hpp"
#include "pairgen/vocab.hpp"

namespace pairgen {

std::string to_string(GenerationMode mode) {
  switch (mode) {
    case GenerationMode::seq2seq: return "seq2seq";
    case GenerationMode::kp_seq2seq: return "kp_seq2seq";
    case GenerationMode::pair_light: return "pair_light";
    case GenerationMode::pair_full: return "pair_full";
  }
  return "?";
}

GenerationMode parse_generation_mode(std::string_view name) {
  if (name == "seq2seq") return GenerationMode::seq2seq;
  if (name == "kp_seq2seq") return GenerationMode::kp_seq2seq;
  if (name == "pair_light") return GenerationMode::pair_light;
  if (name == "pair_full") return GenerationMode::pair_full;
  throw std::invalid_argument("unknown mode: " + std::string(name));
}

CorruptionStrategy parse_corruption_strategy(std::string_view name) {
  if (name == "any" || name == "any_token") return CorruptionStrategy::any_token;
  if (name == "nonkp" || name == "non_keyphrase") return CorruptionStrategy::non_keyphrase;
  throw std::invalid_argument("unknown corruption strategy: " + std::string(name));
}

void DecodeConfig::validate(int vocab_size) const {
  if (k < 1 || k > vocab_size) throw std::invalid_argument("decode.k must be in [1, vocab size]");
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("decode.p must be in (0, 1]");
  if (!(temperature > 0)) throw std::invalid_argument("decode.temperature must be positive");
  if (window < 0) throw std::invalid_argument("decode.window must be >= 0");
  if (samples < 1) throw std::invalid_argument("decode.samples must be >= 1");
  if (max_len < 1) throw std::invalid_argument("decode.max_len must be >= 1");
}

TokenIds corrupt_target(const TokenIds& y, const std::vector<Span>& spans, const CorruptionConfig& cfg, Rng& rng) {
  if (!(cfg.mask_fraction >= 0 && cfg.mask_fraction <= 1)) throw std::invalid_argument("mask_fraction out of range");
  std::vector<char> eligible(y.size(), 1);
  if (cfg.strategy == CorruptionStrategy::non_keyphrase)
    for (const auto& sp : spans)
      for (int i = sp.start; i <= sp.end && i < static_cast<int>(y.size()); ++i) eligible[static_cast<std::size_t>(i)] = 0;
  std::vector<int> pool;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (eligible[i]) pool.push_back(static_cast<int>(i));
  const auto count = static_cast<std::size_t>(std::lround(cfg.mask_fraction * static_cast<double>(pool.size())));
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  TokenIds out = y;
  for (std::size_t i = 0; i < count; ++i) out[static_cast<std::size_t>(pool[i])] = kMask;
  return out;
}

TokenIds plan_for_encoder(const ContentPlan& plan) {
  TokenIds out = plan.assignment();
  if (!out.empty() && out.back() == kEos) out.pop_back();
  return out;
}

TokenIds keyphrases_for_encoder(const KeyphraseSet& keyphrases, Rng& rng) {
  std::vector<std::size_t> order(keyphrases.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
  TokenIds out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out.push_back(kSep);
    const auto& ph = keyphrases[order[i]];
    out.insert(out.end(), ph.begin(), ph.end());
  }
  return out;
}

namespace {

void append_segment(nn::Sequence& seq, const TokenIds& ids, int segment, bool segments, bool trailing_sep) {
  int pos = 0;
  for (int id : ids) {
    seq.ids.push_back(id);
    seq.positions.push_back(pos++);
    if (segments) seq.segments.push_back(segment);
  }
  if (trailing_sep) {
    seq.ids.push_back(kSep);
    seq.positions.push_back(pos);
    if (segments) seq.segments.push_back(segment);
  }
}

}  // namespace

nn::Sequence encoder_input(const GenerationInput& in, const Template* tmpl, bool segments) {
  nn::Sequence seq;
  switch (in.mode) {
    case GenerationMode::seq2seq:
      append_segment(seq, in.prompt, kPromptSegment, segments, false);
      break;
    case GenerationMode::kp_seq2seq:
      append_segment(seq, in.prompt, kPromptSegment, segments, true);
      append_segment(seq, in.plan, kPlanSegment, segments, false);
      break;
    case GenerationMode::pair_light:
    case GenerationMode::pair_full:
      if (!tmpl) throw std::invalid_argument("pair modes need a template");
      append_segment(seq, in.prompt, kPromptSegment, segments, true);
      append_segment(seq, in.plan, kPlanSegment, segments, true);
      append_segment(seq, tmpl->tokens, kTemplateSegment, segments, false);
      break;
  }
  if (seq.size() == 0) append_segment(seq, {}, kPromptSegment, segments, true);
  return seq;
}

nn::Sequence decoder_input(const TokenIds& y, bool segments, const TokenIds* tmpl, int slot_window) {
  std::vector<int> ids;
  ids.reserve(y.size() + 1);
  ids.push_back(kBos);
  ids.insert(ids.end(), y.begin(), y.end());
  nn::Sequence seq = nn::Sequence::plain(std::move(ids), segments ? kDecoderSegment : -1);
  if (tmpl)
    for (std::size_t i = 0; i < seq.size(); ++i) append_slots(seq.slots, *tmpl, i, slot_window);
  return seq;
}

template <class S>
double generator_loss(const nn::Model<S>& model, const nn::Sequence& source, const TokenIds& y,
                      nn::ParameterSet<S>* grads, Rng* dropout, const TokenIds* tmpl) {
  const int window = model.config.slot_window;
  if (window > 0 && !tmpl) throw std::invalid_argument("this generator needs the template");
  const nn::Sequence target = decoder_input(y, model.config.uses_segment_embeddings, window > 0 ? tmpl : nullptr, window);
  std::vector<int> labels = y;
  labels.push_back(kEos);
  const nn::ForwardPass<S> pass(model, source, target, dropout);
  const double inv = 1.0 / static_cast<double>(labels.size());
  nn::Matrix<S> dl;
  const double loss = inv * nn::softmax_cross_entropy(pass.logits(), labels, grads ? &dl : nullptr, inv);
  if (grads) pass.backward(dl, nullptr, *grads);
  return loss;
}

template <class S>
double lm_loss(const nn::Model<S>& lm, const TokenIds& y, nn::ParameterSet<S>* grads, Rng* dropout) {
  const nn::Sequence input = decoder_input(y, false);
  std::vector<int> labels = y;
  labels.push_back(kEos);
  const nn::ForwardPass<S> pass(lm, input, nn::build_causal_mask(static_cast<int>(input.size())), 0, dropout);
  const double inv = 1.0 / static_cast<double>(labels.size());
  nn::Matrix<S> dl;
  const double loss = inv * nn::softmax_cross_entropy(pass.logits(), labels, grads ? &dl : nullptr, inv);
  if (grads) pass.backward(dl, nullptr, *grads);
  return loss;
}

template <class S>
double lm_perplexity(const nn::Model<S>& lm, const TokenIds& tokens) {
  if (tokens.empty()) throw std::invalid_argument("empty input");
  TokenIds prefix(tokens.begin(), tokens.end() - 1);
  const nn::Sequence input = decoder_input(prefix, false);
  const nn::ForwardPass<S> pass(lm, input, nn::build_causal_mask(static_cast<int>(input.size())));
  return std::exp(nn::softmax_cross_entropy<S>(pass.logits(), tokens, nullptr, 0.0) /
                  static_cast<double>(tokens.size()));
}

NucleusCandidates nucleus_filter(std::span<const double> logits, int k, double p, double temperature) {
  const int v = static_cast<int>(logits.size());
  if (v == 0) throw std::invalid_argument("empty logits");
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& x : scaled) x /= temperature;
  const auto lp = nn::log_softmax(scaled.data(), v);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i)
    if (std::isfinite(lp[static_cast<std::size_t>(i)])) order.push_back(i);
  if (order.empty()) throw std::invalid_argument("no admissible token");
  // only the k most likely tokens can survive, so only they need ordering
  const auto keep = std::min(order.size(), static_cast<std::size_t>(std::max(k, 1)));
  auto more_likely = [&](int a, int b) {
    const double la = lp[static_cast<std::size_t>(a)], lb = lp[static_cast<std::size_t>(b)];
    return la > lb || (la == lb && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(keep), order.end(), more_likely);
  order.resize(keep);
  NucleusCandidates out;
  double mass = 0;
  for (int id : order) {
    if (static_cast<int>(out.ids.size()) >= k) break;
    if (!out.ids.empty() && mass >= p) break;
    const double q = std::exp(lp[static_cast<std::size_t>(id)]);
    out.ids.push_back(id);
    out.probs.push_back(q);
    mass += q;
  }
  for (double& q : out.probs) q /= mass;
  return out;
}

namespace {

bool ends_recently(const TokenIds& out, const TokenIds& phrase, int window) {
  const int n = static_cast<int>(out.size());
  const int len = static_cast<int>(phrase.size());
  for (int e = n - 1; e >= std::max(0, n - window); --e) {
    const int s = e - len + 1;
    if (s >= 0 && std::equal(phrase.begin(), phrase.end(), out.begin() + s)) return true;
  }
  return false;
}

bool in_span(const Template& tmpl, int i) {
  return std::any_of(tmpl.spans.begin(), tmpl.spans.end(), [i](const Span& s) { return s.start <= i && i <= s.end; });
}

}  // namespace

template <class S>
Draft decode_enforced(const nn::Model<S>& model, const nn::Sequence& source, const Template& tmpl, bool fixed_length,
                      const DecodeConfig& cfg, Rng& rng) {
  const int vocab = model.config.vocab_size;
  const bool segments = model.config.uses_segment_embeddings;
  const int steps = fixed_length ? std::min(tmpl.doc_length, cfg.max_len) : cfg.max_len;
  std::vector<const Span*> span_at(static_cast<std::size_t>(std::max(steps, 0)), nullptr);
  for (const auto& sp : tmpl.spans)
    if (sp.start < steps) span_at[static_cast<std::size_t>(sp.start)] = &sp;

  nn::IncrementalState<S> state(model, source);
  Draft draft;
  std::vector<double> logits(static_cast<std::size_t>(vocab));
  TokenIds forcing;  // remaining tokens of a phrase being copied
  int prev = kBos;
  for (int i = 0; i < steps; ++i) {
    nn::Sequence row{{prev}, {i}, {}, {}};
    if (segments) row.segments = {kDecoderSegment};
    append_slots(row.slots, tmpl.tokens, static_cast<std::size_t>(i), model.config.slot_window);
    const auto h = state.append(row);
    const auto l = state.token_logits(h);
    for (int j = 0; j < vocab; ++j) logits[static_cast<std::size_t>(j)] = static_cast<double>(l(0, j));
    for (int j = 0; j < kNumSpecialTokens; ++j)
      if (j != kUnk && (fixed_length || j != kEos))
        logits[static_cast<std::size_t>(j)] = -std::numeric_limits<double>::infinity();
    for (double& x : logits) x /= cfg.temperature;
    const auto lp = nn::log_softmax(logits.data(), vocab);

    if (cfg.enforce && forcing.empty() && span_at[static_cast<std::size_t>(i)]) {
      const Span& sp = *span_at[static_cast<std::size_t>(i)];
      const TokenIds phrase(tmpl.tokens.begin() + sp.start, tmpl.tokens.begin() + sp.end + 1);
      if (!ends_recently(draft.tokens, phrase, cfg.window)) forcing.assign(phrase.rbegin(), phrase.rend());
    }
    int token;
    bool forced = false;
    const auto ui = static_cast<std::size_t>(i);
    if (!forcing.empty()) {
      token = forcing.back();
      forcing.pop_back();
      forced = true;
    } else if (cfg.copy_kept && fixed_length && ui < tmpl.tokens.size() && tmpl.tokens[ui] != kMask &&
               !in_span(tmpl, i)) {
      token = tmpl.tokens[ui];
    } else {
      // the temperature is already folded into logits
      const auto cand = nucleus_filter(logits, cfg.k, cfg.p, 1.0);
      const double u = uniform01(rng);
      double acc = 0;
      token = cand.ids.back();
      for (std::size_t c = 0; c < cand.ids.size(); ++c) {
        acc += cand.probs[c];
        if (u < acc) {
          token = cand.ids[c];
          break;
        }
      }
    }
    if (token == kEos) break;
    draft.tokens.push_back(token);
    draft.probs.push_back(std::exp(lp[static_cast<std::size_t>(token)]));
    draft.forced.push_back(forced);
    prev = token;
  }
  return draft;
}

template <class S>
BestDraft generate_best(const nn::Model<S>& model, const nn::Model<S>& lm, const nn::Sequence& source,
                        const Template& tmpl, bool fixed_length, const DecodeConfig& cfg, std::uint64_t seed) {
  BestDraft best;
  for (int i = 0; i < cfg.samples; ++i) {
    Rng rng(derive_seed(seed, "candidate", static_cast<std::uint64_t>(i)));
    Draft d = decode_enforced(model, source, tmpl, fixed_length, cfg, rng);
    const double ppl = d.tokens.empty() ? std::numeric_limits<double>::infinity() : lm_perplexity(lm, d.tokens);
    best.candidate_perplexities.push_back(ppl);
    if (i == 0 || ppl < best.perplexity) {
      best.perplexity = ppl;
      best.draft = std::move(d);
      best.chosen = i;
    }
  }
  return best;
}

GeneratorExample make_generator_example(GenerationMode mode, const TokenIds& prompt, const TokenIds& y,
                                        const ContentPlan& oracle, const KeyphraseSet& keyphrases,
                                        const GeneratorTrainConfig& cfg, bool segments, Rng& rng) {
  GeneratorExample ex;
  GenerationInput in{mode, prompt, {}};
  const std::size_t cap = static_cast<std::size_t>(cfg.max_target_len);
  ex.target.assign(y.begin(), y.begin() + static_cast<long>(std::min(y.size(), cap)));
  auto fraction = [&] { return cfg.fraction_min + (cfg.fraction_max - cfg.fraction_min) * uniform01(rng); };
  const bool initial = uniform01(rng) < cfg.initial_template_rate;
  switch (mode) {
    case GenerationMode::seq2seq:
      break;
    case GenerationMode::kp_seq2seq:
      in.plan = keyphrases_for_encoder(keyphrases, rng);
      break;
    case GenerationMode::pair_light: {
      in.plan = plan_for_encoder(oracle);
      Template t = light_template();
      if (!initial) {
        t.tokens = corrupt_target(ex.target, {}, {CorruptionStrategy::any_token, fraction()}, rng);
        t.doc_length = static_cast<int>(t.tokens.size());
      }
      ex.source = encoder_input(in, &t, segments);
      ex.template_tokens = t.tokens;
      return ex;
    }
    case GenerationMode::pair_full: {
      in.plan = plan_for_encoder(oracle);
      Template t = build_template(oracle, cfg.max_target_len);
      ex.target.resize(static_cast<std::size_t>(t.doc_length));
      if (!initial) {
        t.tokens = corrupt_target(ex.target, t.spans, {cfg.strategy, fraction()}, rng);
      }
      ex.source = encoder_input(in, &t, segments);
      ex.template_tokens = t.tokens;
      return ex;
    }
  }
  ex.source = encoder_input(in, nullptr, segments);
  return ex;
}

template double generator_loss(const nn::Model<float>&, const nn::Sequence&, const TokenIds&,
                               nn::ParameterSet<float>*, Rng*, const TokenIds*);
template double generator_loss(const nn::Model<double>&, const nn::Sequence&, const TokenIds&,
                               nn::ParameterSet<double>*, Rng*, const TokenIds*);
template double lm_loss(const nn::Model<float>&, const TokenIds&, nn::ParameterSet<float>*, Rng*);
template double lm_loss(const nn::Model<double>&, const TokenIds&, nn::ParameterSet<double>*, Rng*);
template double lm_perplexity(const nn::Model<float>&, const TokenIds&);
template double lm_perplexity(const nn::Model<double>&, const TokenIds&);
template Draft decode_enforced(const nn::Model<float>&, const nn::Sequence&, const Template&, bool,
                               const DecodeConfig&, Rng&);
template Draft decode_enforced(const nn::Model<double>&, const nn::Sequence&, const Template&, bool,
                               const DecodeConfig&, Rng&);
template BestDraft generate_best(const nn::Model<float>&, const nn::Model<float>&, const nn::Sequence&,
                                 const Template&, bool, const DecodeConfig&, std::uint64_t);
template BestDraft generate_best(const nn::Model<double>&, const nn::Model<double>&, const nn::Sequence&,
                                 const Template&, bool, const DecodeConfig&, std::uint64_t);

}  // namespace pairgen
