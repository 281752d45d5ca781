#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pairgen/corpus.hpp"
#include "pairgen/generator.hpp"
#include "pairgen/nn/config.hpp"
#include "pairgen/nn/optim.hpp"
#include "pairgen/planner.hpp"

namespace pairgen {

struct TrainBudget {
  int batch_size = 10;
  long steps = 1000;
  std::optional<double> lr_max;  // falls back to [train]
  std::optional<long> warmup;
  nn::OptimizerConfig optimizer(const nn::OptimizerConfig& shared) const;
};

// Every tunable of a run. Defaults follow the published settings where one exists.
struct Config {
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "runs/default";
  // Generators trained and evaluated by end2end.
  std::vector<GenerationMode> modes{GenerationMode::seq2seq, GenerationMode::kp_seq2seq, GenerationMode::pair_light,
                                    GenerationMode::pair_full};
  bool predicted_plans = true;  // end2end also runs the pair modes on planner output

  GrammarConfig grammar;
  int n_docs = 14400;  // about 10,000 training documents left after dropping keyphrase-less ones
  std::array<double, 3> split{0.75, 0.125, 0.125};
  double signature_threshold = 10.83;
  int max_keyphrase_length = kMaxKeyphraseLength;
  int min_count = 1;

  // Shape shared by the three networks. The encoder input of a pair model is
  // prompt + plan + template, which can exceed 256 tokens with long plans.
  nn::ModelConfig model = [] {
    nn::ModelConfig m;
    m.max_len = 512;
    return m;
  }();
  double init_std = 0.02;
  nn::OptimizerConfig optimizer;

  TrainBudget planner{20, 2000, {}, {}};
  double position_loss_weight = kPositionLossWeight;
  TrainBudget generator{10, 4000, {}, {}};
  GeneratorTrainConfig generator_train;
  TrainBudget lm{20, 2000, {}, {}};

  DecodeConfig decode;
  int R = 5;

  bool bleu_smoothing = false;
  int test_limit = 0;  // evaluate only the first N test documents; 0 = all
  int decode_seeds = 3;
};

// INI file with sections [experiment] [corpus] [vocab] [model] [train]
// [planner] [generator] [lm] [decode] [refine] [eval]. Unknown sections or
// keys and unparsable values raise std::invalid_argument naming section.key.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& text);

// Canonical INI rendering of every key.
std::string render_config(const Config& cfg);

}  // namespace pairgen
