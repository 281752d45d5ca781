#pragma once

#include <cstdint>
#include <vector>

#include "pairgen/generator.hpp"

namespace pairgen {

struct RefineConfig {
  int R = 5;
  DecodeConfig decode;
};

// floor(len * (1 - r / R)) in integer arithmetic.
int mask_count(int len, int r, int R);

struct RefineStep {
  int iteration = 0;
  std::uint64_t seed = 0;
  Template input;          // t^(r-1)
  Draft draft;             // y^(r)
  double perplexity = 0;
  std::vector<double> candidate_perplexities;
  int chosen = 0;
  int mask_count = 0;      // n applied to y^(r)
  std::vector<int> masked;
};

struct RefineResult {
  Draft final_draft;
  std::vector<RefineStep> trace;
};

// Iteration r decodes from t^(r-1) with seed derive_seed(seed, "iteration", r),
// so the first r iterations do not depend on R.
template <class S>
RefineResult run_refinement(const nn::Model<S>& generator, const nn::Model<S>& lm, const GenerationInput& input,
                            const Template& initial, const RefineConfig& cfg, std::uint64_t seed);

}  // namespace pairgen
