#include "pairgen/refine.hpp"

#include <stdexcept>

#include "pairgen/templates.hpp"

namespace pairgen {

int mask_count(int len, int r, int R) {
  if (R < 1 || r < 1 || r > R || len < 0) throw std::invalid_argument("mask_count needs 1 <= r <= R and len >= 0");
  return static_cast<int>(static_cast<long long>(len) * (R - r) / R);
}

template <class S>
RefineResult run_refinement(const nn::Model<S>& generator, const nn::Model<S>& lm, const GenerationInput& input,
                            const Template& initial, const RefineConfig& cfg, std::uint64_t seed) {
  if (cfg.R < 1) throw std::invalid_argument("R must be >= 1");
  const bool segments = generator.config.uses_segment_embeddings;
  const bool fixed = fixed_length_mode(input.mode);
  const bool templated = input.mode == GenerationMode::pair_full || input.mode == GenerationMode::pair_light;
  RefineResult result;
  Template current = initial;
  for (int r = 1; r <= cfg.R; ++r) {
    RefineStep step;
    step.iteration = r;
    step.seed = derive_seed(seed, "iteration", static_cast<std::uint64_t>(r));
    step.input = current;
    const nn::Sequence source = encoder_input(input, templated ? &current : nullptr, segments);
    BestDraft best = generate_best(generator, lm, source, current, fixed, cfg.decode, step.seed);
    step.draft = best.draft;
    step.perplexity = best.perplexity;
    step.candidate_perplexities = std::move(best.candidate_perplexities);
    step.chosen = best.chosen;
    step.mask_count = mask_count(static_cast<int>(best.draft.size()), r, cfg.R);
    MaskedTemplate next = mask_low_confidence(best.draft, initial, step.mask_count);
    step.masked = next.masked;
    current = std::move(next.tmpl);
    result.trace.push_back(std::move(step));
  }
  result.final_draft = result.trace.back().draft;
  return result;
}

template RefineResult run_refinement(const nn::Model<float>&, const nn::Model<float>&, const GenerationInput&,
                                     const Template&, const RefineConfig&, std::uint64_t);
template RefineResult run_refinement(const nn::Model<double>&, const nn::Model<double>&, const GenerationInput&,
                                     const Template&, const RefineConfig&, std::uint64_t);

}  // namespace pairgen
