#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "pairgen/config.hpp"
#include "pairgen/pipeline.hpp"

using namespace pairgen;

namespace {

const std::map<std::string, std::string> kDescriptions{
    {"synth", "write a synthetic corpus"},
    {"extract-kp", "split the corpus, extract keyphrases and build the vocabulary"},
    {"train-planner", "train the content planner"},
    {"train-generator", "train the generator for --mode"},
    {"train-lm", "train the reranking language model"},
    {"plan", "predict plans for the test split"},
    {"generate", "decode one draft per test document"},
    {"refine", "decode with iterative refinement"},
    {"evaluate", "score outputs against the test split"},
    {"end2end", "run every stage and write report.json"},
    {"gradcheck", "finite-difference check of all three model kinds"},
};

void fail(const std::string& command, const std::string& message) {
  std::cout << Json{{"ok", false}, {"command", command}, {"error", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pairgen: planning, template mask-and-fill and iterative refinement"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, mode, plans, strategy;
  std::optional<int> rounds;
  bool no_enforce = false, quiet = false;

  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("--config", config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override experiment.seed");
    sub->add_option("--out-dir", out_dir, "override experiment.out_dir");
    sub->add_option("--mode", mode, "seq2seq | kp_seq2seq | pair_light | pair_full");
    sub->add_option("--plans", plans, "plan file (JSON lines)");
    sub->add_option("--R", rounds, "refinement iterations");
    sub->add_flag("--no-enforce", no_enforce, "disable keyphrase enforcement");
    sub->add_option("--strategy", strategy, "training corruption: any | nonkp");
    sub->add_flag("--quiet", quiet, "no progress on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name(), e.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    CommandOptions opts;
    if (!mode.empty()) opts.mode = parse_generation_mode(mode);
    if (!plans.empty()) opts.plans = plans;
    if (rounds) opts.R = *rounds;
    if (!strategy.empty()) opts.strategy = parse_corruption_strategy(strategy);
    opts.no_enforce = no_enforce;
    opts.verbose = !quiet;
    const Json summary = run_command(command, cfg, opts);
    std::cout << Json{{"ok", true}, {"command", command}, {"result", summary}}.dump() << std::endl;
  } catch (const std::exception& e) {
    fail(command, e.what());
    return 1;
  }
  return 0;
}
