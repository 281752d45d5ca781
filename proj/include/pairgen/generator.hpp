#pragma once

#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairgen/nn/parameters.hpp"
#include "pairgen/plan.hpp"
#include "pairgen/rng.hpp"
#include "pairgen/vocab.hpp"

namespace pairgen {

enum class GenerationMode { seq2seq, kp_seq2seq, pair_light, pair_full };

std::string to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view name);

// Encoder segment ids; decoder tokens use kDecoderSegment.
inline constexpr int kPromptSegment = 0;
inline constexpr int kPlanSegment = 1;
inline constexpr int kTemplateSegment = 2;
inline constexpr int kDecoderSegment = 3;
inline constexpr int kGeneratorSegments = 4;

struct DecodeConfig {
  int k = 50;
  double p = 0.9;
  double temperature = 1.0;
  bool enforce = true;
  int window = 5;
  int samples = 3;  // candidates reranked by perplexity
  int max_len = 128;
  // Fixed-length decoding copies every unmasked non-span template token
  // instead of sampling it, so refinement only rewrites masked positions.
  bool copy_kept = false;
  void validate(int vocab_size) const;
};

enum class CorruptionStrategy { any_token, non_keyphrase };

CorruptionStrategy parse_corruption_strategy(std::string_view name);

struct CorruptionConfig {
  CorruptionStrategy strategy = CorruptionStrategy::non_keyphrase;
  double mask_fraction = 0.5;
};

// Masks exactly round(fraction * eligible) eligible positions, drawn uniformly
// without replacement. Eligible: every position, or every non-span position.
TokenIds corrupt_target(const TokenIds& y, const std::vector<Span>& spans, const CorruptionConfig& cfg, Rng& rng);

// What conditions one sample, besides the template.
struct GenerationInput {
  GenerationMode mode = GenerationMode::pair_full;
  TokenIds prompt;
  // pair modes: m' without [EOS]; kp_seq2seq: kp1 [SEP] kp2 ...; seq2seq: empty.
  TokenIds plan;
};

TokenIds plan_for_encoder(const ContentPlan& plan);
TokenIds keyphrases_for_encoder(const KeyphraseSet& keyphrases, Rng& rng);

// Segment-wise concatenation; every segment restarts its position ids at 0
// so template slot i and decoder step i share a position id:
//   prompt [SEP] | plan [SEP] | template   (pair modes)
//   prompt [SEP] | plan                   (kp_seq2seq)
//   prompt                                (seq2seq)
nn::Sequence encoder_input(const GenerationInput& in, const Template* tmpl, bool segments);

// [BOS] y, positions 0.., decoder segment when segments are used. With a
// template and slot_window > 0, row i also carries append_slots(*tmpl, i, ..).
nn::Sequence decoder_input(const TokenIds& y, bool segments, const TokenIds* tmpl = nullptr, int slot_window = 0);

// Appends the template tokens at output positions i .. i+window-1, [PAD] past the end.
inline void append_slots(std::vector<int>& out, const TokenIds& tmpl, std::size_t i, int window) {
  for (std::size_t k = i; k < i + static_cast<std::size_t>(window); ++k) out.push_back(k < tmpl.size() ? tmpl[k] : kPad);
}

// Mean token cross-entropy of the decoder against y [EOS] under teacher
// forcing. `tmpl` is required by slot-embedding models and ignored otherwise.
template <class S>
double generator_loss(const nn::Model<S>& model, const nn::Sequence& source, const TokenIds& y,
                      nn::ParameterSet<S>* grads, Rng* dropout, const TokenIds* tmpl = nullptr);

// Mean token cross-entropy of a causal LM over [BOS] y [EOS].
template <class S>
double lm_loss(const nn::Model<S>& lm, const TokenIds& y, nn::ParameterSet<S>* grads, Rng* dropout);

// exp of the mean negative log-probability of each token given [BOS] and its prefix.
template <class S>
double lm_perplexity(const nn::Model<S>& lm, const TokenIds& tokens);

struct NucleusCandidates {
  std::vector<int> ids;       // descending probability
  std::vector<double> probs;  // renormalized over ids
};

// softmax(logits / temperature), then the smallest descending prefix with mass
// >= p, capped at k entries and never empty. Tokens with -inf logits are never kept.
NucleusCandidates nucleus_filter(std::span<const double> logits, int k, double p, double temperature);

// Samples y^(r). With fixed_length the decoder runs exactly
// min(tmpl.doc_length, cfg.max_len) steps and every reserved token except
// [UNK] is banned; otherwise it stops at a sampled [EOS] or cfg.max_len.
// With cfg.enforce, reaching a span start copies the phrase unless the
// phrase already ends within the last cfg.window emitted tokens.
template <class S>
Draft decode_enforced(const nn::Model<S>& model, const nn::Sequence& source, const Template& tmpl, bool fixed_length,
                      const DecodeConfig& cfg, Rng& rng);

struct BestDraft {
  Draft draft;
  double perplexity = std::numeric_limits<double>::infinity();
  std::vector<double> candidate_perplexities;
  int chosen = 0;
};

// cfg.samples decodes on streams derive_seed(seed, "candidate", i); the
// lowest-perplexity draft wins, ties to the lower stream. Empty drafts score +inf.
template <class S>
BestDraft generate_best(const nn::Model<S>& model, const nn::Model<S>& lm, const nn::Sequence& source,
                        const Template& tmpl, bool fixed_length, const DecodeConfig& cfg, std::uint64_t seed);

inline bool fixed_length_mode(GenerationMode mode) { return mode == GenerationMode::pair_full; }

}  // namespace pairgen

namespace pairgen {

struct GeneratorTrainConfig {
  CorruptionStrategy strategy = CorruptionStrategy::non_keyphrase;
  double fraction_min = 0.3;
  double fraction_max = 0.8;
  // Probability of training on the inference-time initial template instead
  // of a corrupted target (full: every non-span slot masked; light: one [MASK]).
  double initial_template_rate = 0.25;
  int max_target_len = 128;
  // Pair-mode decoder rows embed this many template tokens starting at their
  // own output position (0 = encoder-only template).
  int slot_window = 12;
};

struct GeneratorExample {
  nn::Sequence source;
  TokenIds target;    // y, truncated to the template length
  TokenIds template_tokens;  // pair modes: the template also given to the encoder
};

// One denoising example for `mode` with fresh corruption drawn from rng.
GeneratorExample make_generator_example(GenerationMode mode, const TokenIds& prompt, const TokenIds& y,
                                        const ContentPlan& oracle, const KeyphraseSet& keyphrases,
                                        const GeneratorTrainConfig& cfg, bool segments, Rng& rng);

}  // namespace pairgen
