#pragma once

#include <optional>
#include <vector>

#include "pairgen/jsonl.hpp"
#include "pairgen/plan.hpp"

namespace pairgen {

// Corpus BLEU-4 against one reference per candidate. smooth adds one to the
// matched and total counts of 2- to 4-grams.
double bleu4(const std::vector<TokenIds>& candidates, const std::vector<TokenIds>& references, bool smooth = false);

std::size_t lcs_length(const TokenIds& a, const TokenIds& b);

// LCS F-score of one pair; 0 when either side is empty.
double rouge_l(const TokenIds& candidate, const TokenIds& reference);
// Mean pairwise ROUGE-L.
double rouge_l(const std::vector<TokenIds>& candidates, const std::vector<TokenIds>& references);

struct PlanMetrics {
  double assignment_f1 = 0;
  std::optional<double> position_mae;  // absent when nothing matched
};

// F1 over the multiset of (phrase, sentence index) pairs; MAE of start
// positions over matched pairs.
PlanMetrics plan_metrics(const ContentPlan& predicted, const ContentPlan& gold);

struct TemplateStats {
  double tokens = 0;           // layout length per plan
  double sentences = 0;        // per plan
  double kp_per_sentence = 0;  // pooled over sentences
  std::optional<double> kp_distance;  // pooled over same-sentence neighbours
};

TemplateStats template_stats(const std::vector<ContentPlan>& plans);

// Share of planned phrases found contiguously in the matching output.
double kp_coverage(const std::vector<TokenIds>& outputs, const std::vector<ContentPlan>& plans);

Json to_json(const PlanMetrics& m);
Json to_json(const TemplateStats& s);

}  // namespace pairgen
