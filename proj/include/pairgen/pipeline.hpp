#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pairgen/config.hpp"
#include "pairgen/document.hpp"
#include "pairgen/generator.hpp"
#include "pairgen/jsonl.hpp"
#include "pairgen/nn/parameters.hpp"
#include "pairgen/plan.hpp"
#include "pairgen/refine.hpp"
#include "pairgen/vocab.hpp"

namespace pairgen {

// A document mapped into vocabulary ids with its oracle plan.
struct EncodedDoc {
  TokenIds prompt;
  std::vector<TokenIds> sentences;
  TokenIds target;
  KeyphraseSet keyphrases;
  ContentPlan oracle;
};

EncodedDoc encode_document(const Document& doc, const Vocabulary& vocab);
std::vector<EncodedDoc> encode_documents(const std::vector<Document>& docs, const Vocabulary& vocab);

nn::ModelConfig planner_model_config(const Config& cfg, int vocab_size);
// Pair modes also get template slot embeddings (generator.slot_window).
nn::ModelConfig generator_model_config(const Config& cfg, GenerationMode mode, int vocab_size);
nn::ModelConfig lm_model_config(const Config& cfg, int vocab_size);

struct TrainingOutcome {
  nn::Model<float> model;
  std::vector<Json> log;  // {"step","loss"} windows, then {"valid_loss"}
};

using Progress = std::function<void(const std::string&)>;

TrainingOutcome train_planner(const Config& cfg, const std::vector<EncodedDoc>& train,
                              const std::vector<EncodedDoc>& valid, int vocab_size, const Progress& progress = {});
TrainingOutcome train_generator(const Config& cfg, GenerationMode mode, const std::vector<EncodedDoc>& train,
                                const std::vector<EncodedDoc>& valid, int vocab_size, const Progress& progress = {});
TrainingOutcome train_lm(const Config& cfg, const std::vector<EncodedDoc>& train, const std::vector<EncodedDoc>& valid,
                         int vocab_size, const Progress& progress = {});

// Encoder conditioning and starting template of one sample. kp_seq2seq
// shuffles the keyphrases with kp_seed; the other modes ignore it.
struct PreparedSample {
  GenerationInput input;
  Template initial;
};
PreparedSample prepare_sample(GenerationMode mode, const TokenIds& prompt, const ContentPlan& plan,
                              const KeyphraseSet& keyphrases, int max_target_len, std::uint64_t kp_seed);

// Refinement only iterates for the template modes; the plain baselines
// always run a single pass.
int effective_rounds(GenerationMode mode, int R);

// Seed of sample `index` under decoding seed `run`.
std::uint64_t sample_seed(std::uint64_t seed, int run, std::size_t index);

// Command-line overrides shared by the commands.
struct CommandOptions {
  std::optional<GenerationMode> mode;
  std::optional<std::filesystem::path> plans;
  std::optional<int> R;
  bool no_enforce = false;
  std::optional<CorruptionStrategy> strategy;
  bool verbose = true;
};

// Artifact locations under cfg.out_dir.
struct RunPaths {
  std::filesystem::path root;
  explicit RunPaths(std::filesystem::path r) : root(std::move(r)) {}
  std::filesystem::path corpus() const { return root / "corpus.jsonl"; }
  std::filesystem::path split(const std::string& name) const { return root / "data" / (name + ".jsonl"); }
  std::filesystem::path vocab() const { return root / "data" / "vocab.txt"; }
  std::filesystem::path model(const std::string& name) const { return root / "models" / (name + ".ckpt"); }
  std::filesystem::path train_log(const std::string& name) const { return root / "logs" / (name + ".jsonl"); }
  std::filesystem::path plans(const std::string& name) const { return root / "plans" / (name + ".jsonl"); }
  std::filesystem::path output(const std::string& stem) const { return root / "outputs" / (stem + ".jsonl"); }
  std::filesystem::path trace(const std::string& stem) const { return root / "traces" / (stem + ".jsonl"); }
  std::filesystem::path report(const std::string& stem) const { return root / "reports" / (stem + ".json"); }
};

std::string generator_name(GenerationMode mode);

// Runs one named command and returns a JSON summary of what it produced.
// Throws std::invalid_argument for bad configuration or inputs.
Json run_command(const std::string& command, const Config& cfg, const CommandOptions& options);

const std::vector<std::string>& command_names();

// Finite-difference check of the planner, generator and LM losses on small
// random double-precision models.
Json gradcheck_report(std::uint64_t seed);

}  // namespace pairgen
