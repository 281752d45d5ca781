#pragma once

#include <string>
#include <vector>

#include "pairgen/plan.hpp"
#include "pairgen/vocab.hpp"

namespace pairgen {

inline constexpr int kDefaultMaxTargetLength = 128;

// Repairs a raw planner output:
//  1. each phrase occupies consecutive positions from its first predicted one;
//  2. within a sentence, a phrase starting at or before the previous phrase's
//     end moves to previous end + 1;
//  3. retokenize_plan (identity for a shared word-level vocabulary).
// Phrases are then pulled back so every position is at most kMaxPosition - 1,
// and each sentence length grows to cover its last phrase (capped at
// kMaxPosition). A sentence whose phrases cannot fit in kMaxPosition slots
// loses its trailing phrases.
ContentPlan correct_plan(const ContentPlan& raw);

// Rule 3 hook: maps phrase tokens into the generator's vocabulary.
ContentPlan retokenize_plan(const ContentPlan& plan);

// Sentences laid out back to back; phrase tokens at their global offsets,
// [MASK] elsewhere; truncated to max_target_len with crossing spans dropped.
Template build_template(const ContentPlan& plan, int max_target_len = kDefaultMaxTargetLength);

// A single-[MASK] template with no spans, the starting point without positions.
Template light_template();

struct MaskedTemplate {
  Template tmpl;
  std::vector<int> masked;  // ascending
  bool clamped = false;     // fewer than n maskable tokens
};

// Copies the draft, restores the span tokens of `base`, and masks the n
// non-span tokens with the lowest probability (lower index first on ties).
MaskedTemplate mask_low_confidence(const Draft& draft, const Template& base, int n);

// "_" for [MASK], spans in brackets.
std::string render_template(const Template& t, const Vocabulary& vocab);
// {"doc_length":..,"spans":[{"phrase":..,"start":..,"end":..}],"dropped":[..]}
std::string template_sidecar(const Template& t);

}  // namespace pairgen
