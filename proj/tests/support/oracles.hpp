#pragma once

// Brute-force reference implementations shared by the unit and acceptance
// tests. None of them call the library code they are used to check.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pairgen/plan.hpp"
#include "pairgen/rng.hpp"

namespace pairgen::oracle {

// Sort by probability (ties to lower id), keep the smallest prefix reaching
// mass p, then cut to k.
std::vector<int> nucleus(const std::vector<double>& logits, int k, double p, double temperature);

// Corpus BLEU-4 from direct n-gram counting; smoothing adds one to the
// matched and total counts of orders 2..4.
double bleu(const std::vector<TokenIds>& cands, const std::vector<TokenIds>& refs, bool smooth);

// Longest common subsequence by trying every subsequence of the shorter side.
std::size_t lcs(const TokenIds& a, const TokenIds& b);
double rouge_l(const TokenIds& cand, const TokenIds& ref);

// -log softmax(row)[target].
double cross_entropy(const Eigen::Matrix<double, 1, Eigen::Dynamic>& row, int target);

// Empty when `fixed` is a valid correction of `raw`, otherwise the first
// violated property.
std::string plan_violation(const ContentPlan& raw, const ContentPlan& fixed);

// Phrase starts of a sentence whose phrases all fit below the cap.
std::vector<int> expected_starts(const SentencePlan& s);

ContentPlan random_raw_plan(Rng& rng);
TokenIds random_sequence(Rng& rng, std::size_t max_len, int vocab);

}  // namespace pairgen::oracle
