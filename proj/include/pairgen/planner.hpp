#pragma once

#include <vector>

#include "pairgen/nn/parameters.hpp"
#include "pairgen/plan.hpp"
#include "pairgen/rng.hpp"

namespace pairgen {

inline constexpr double kPositionLossWeight = 0.1;

// Gold keyphrase positions read off a reference split into sentences.
// Phrases are located longest first, each at its earliest occurrence that
// does not overlap an already placed phrase, then ordered by occurrence.
// Throws std::invalid_argument naming the phrase when it cannot be placed.
ContentPlan extract_oracle_plan(const std::vector<TokenIds>& reference, const KeyphraseSet& keyphrases);

struct PlanExample {
  TokenIds prompt;
  KeyphraseSet keyphrases;
  TokenIds gold_assignment;
  std::vector<int> gold_positions;
};

PlanExample make_plan_example(const TokenIds& prompt, const KeyphraseSet& keyphrases, const ContentPlan& gold);

// prompt [SEP] kp1 [SEP] kp2 ..., segment 0. Phrases are serialized in the
// set's stored order; the pipeline builds sets from canonical_keyphrases so
// that this is surface order.
nn::Sequence planner_input(const TokenIds& prompt, const KeyphraseSet& keyphrases);

// planner_input followed by [BOK] and all but the last gold assignment token,
// segment 1. Positions continue from the input.
nn::Sequence planner_training_sequence(const PlanExample& ex, int* input_len);

struct PlannerLossParts {
  double assignment = 0;  // mean token cross-entropy over the assignment
  double position = 0;    // mean cross-entropy of the position head
  double position_weight = kPositionLossWeight;
  double total() const { return assignment + position_weight * position; }
};

// Gradients, when requested, are those of total().
template <class S>
PlannerLossParts planner_loss(const nn::Model<S>& model, const PlanExample& ex, nn::ParameterSet<S>* grads,
                              Rng* dropout, double position_weight = kPositionLossWeight);

// Restricted greedy decoding. Candidates are the next tokens of unused
// keyphrases, [SEN] and [EOS]; a started phrase is finished before another
// begins (continuing a longer phrase wins over closing a shorter one); a
// phrase is only started if it fits in the remaining budget of kMaxPosition
// assignment tokens.
template <class S>
ContentPlan predict_plan(const nn::Model<S>& model, const TokenIds& prompt, const KeyphraseSet& keyphrases);

}  // namespace pairgen
