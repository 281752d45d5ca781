#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "pairgen/corpus.hpp"
#include "pairgen/eval.hpp"
#include "pairgen/nn/checkpoint.hpp"
#include "pairgen/nn/gradcheck.hpp"
#include "pairgen/pipeline.hpp"
#include "pairgen/planner.hpp"
#include "pairgen/templates.hpp"

namespace pairgen {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kSplits{"train", "valid", "test"};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw std::invalid_argument(what + " not found: " + p.string());
}

void ensure_parent(const fs::path& p) { fs::create_directories(p.parent_path()); }

void write_json(const fs::path& p, const Json& j) {
  ensure_parent(p);
  write_file_atomic(p, j.dump(2) + "\n");
}

void write_rows(const fs::path& p, const std::vector<Json>& rows) {
  ensure_parent(p);
  write_jsonl(p, rows);
}

Progress progress_for(const CommandOptions& o) {
  if (!o.verbose) return {};
  return [](const std::string& msg) { std::cerr << "[pairgen] " << msg << std::endl; };
}

struct Data {
  Vocabulary vocab;
  std::vector<Document> docs;
  std::vector<EncodedDoc> encoded;
};

Data load_split(const RunPaths& paths, const std::string& name, std::size_t limit = 0) {
  require_file(paths.vocab(), "vocabulary");
  require_file(paths.split(name), name + " split");
  Data d;
  d.vocab = Vocabulary::load(paths.vocab());
  d.docs = load_corpus(paths.split(name));
  if (limit && d.docs.size() > limit) d.docs.resize(limit);
  d.encoded = encode_documents(d.docs, d.vocab);
  return d;
}

nn::Model<float> load_model(const fs::path& p, nn::ModelKind kind, int vocab_size) {
  require_file(p, "checkpoint");
  nn::Model<float> m = nn::load_checkpoint(p);
  if (m.config.kind != kind) throw std::invalid_argument("checkpoint " + p.string() + " holds a " + to_string(m.config.kind));
  if (m.config.vocab_size != vocab_size)
    throw std::invalid_argument("checkpoint " + p.string() + " does not match the vocabulary size");
  return m;
}

Json stats_json(const CorpusStats& s) {
  return Json{{"documents", s.documents},     {"prompt_length", s.prompt_length}, {"target_length", s.target_length},
              {"sentences", s.sentences},     {"keyphrases", s.keyphrases},       {"kp_coverage", s.kp_coverage}};
}

Tokens surface(const Vocabulary& v, const TokenIds& ids) { return v.decode(ids); }

// ---- plans -------------------------------------------------------------

Json plan_row(std::size_t index, const Vocabulary& v, const EncodedDoc& d, const ContentPlan& plan) {
  Json kps = Json::array();
  for (const auto& k : d.keyphrases.phrases()) kps.push_back(surface(v, k));
  return Json{{"index", index},
              {"prompt", surface(v, d.prompt)},
              {"keyphrases", kps},
              {"assignment", surface(v, plan.assignment())},
              {"positions", plan.positions()}};
}

struct PlanRow {
  std::size_t index = 0;
  TokenIds prompt;
  KeyphraseSet keyphrases;
  ContentPlan plan;
};

PlanRow parse_plan_row(const Json& j, const Vocabulary& v) {
  PlanRow r;
  try {
    r.index = j.at("index").get<std::size_t>();
    r.prompt = v.encode(j.at("prompt").get<Tokens>());
    std::vector<TokenIds> kps;
    for (const auto& k : j.at("keyphrases")) kps.push_back(v.encode(k.get<Tokens>()));
    r.keyphrases = KeyphraseSet(std::move(kps));
    r.plan = plan_from_flat(v.encode(j.at("assignment").get<Tokens>()), j.at("positions").get<std::vector<int>>(),
                            r.keyphrases);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed plan row: ") + e.what());
  }
  return r;
}

std::vector<PlanRow> load_plans(const fs::path& p, const Vocabulary& v) {
  require_file(p, "plan file");
  std::vector<PlanRow> out;
  for (const auto& j : read_jsonl(p)) out.push_back(parse_plan_row(j, v));
  return out;
}

// ---- generation ---------------------------------------------------------

struct RunSpec {
  GenerationMode mode = GenerationMode::pair_full;
  fs::path plans;
  int R = 5;
  bool enforce = true;
};

std::string run_stem(const RunSpec& s) {
  return to_string(s.mode) + "_" + s.plans.stem().string() + "_R" + std::to_string(s.R) +
         (s.enforce ? "" : "_noenforce");
}

Json draft_row(std::size_t index, int run, const Vocabulary& v, const PlanRow& p, const Draft& d, double ppl) {
  std::vector<int> forced(d.forced.begin(), d.forced.end());
  return Json{{"index", index},
              {"run", run},
              {"prompt", surface(v, p.prompt)},
              {"plan", surface(v, p.plan.assignment())},
              {"draft_tokens", surface(v, d.tokens)},
              {"probs", d.probs},
              {"forced", forced},
              {"ppl", std::isfinite(ppl) ? Json(ppl) : Json(nullptr)}};
}

Json trace_row(std::size_t index, int run, const Vocabulary& v, const RefineStep& s) {
  std::vector<double> cands;
  for (double c : s.candidate_perplexities) cands.push_back(std::isfinite(c) ? c : -1.0);
  return Json{{"index", index},
              {"run", run},
              {"iteration", s.iteration},
              {"seed", s.seed},
              {"template", render_template(s.input, v)},
              {"draft_tokens", surface(v, s.draft.tokens)},
              {"probs", s.draft.probs},
              {"ppl", std::isfinite(s.perplexity) ? Json(s.perplexity) : Json(nullptr)},
              {"candidate_ppls", cands},
              {"chosen", s.chosen},
              {"mask_count", s.mask_count},
              {"masked", s.masked}};
}

RunSpec run_spec(const Config& cfg, const CommandOptions& o, const RunPaths& paths) {
  RunSpec s;
  s.mode = o.mode.value_or(GenerationMode::pair_full);
  s.plans = o.plans.value_or(paths.plans("gold"));
  s.R = effective_rounds(s.mode, o.R.value_or(cfg.R));
  if (s.R < 1) throw std::invalid_argument("--R must be >= 1");
  s.enforce = cfg.decode.enforce && !o.no_enforce;
  return s;
}

Json refine_outputs(const Config& cfg, const RunSpec& spec, const RunPaths& paths, const Progress& progress) {
  require_file(paths.vocab(), "vocabulary");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  const auto plans = load_plans(spec.plans, vocab);
  const auto gen = load_model(paths.model(generator_name(spec.mode)), nn::ModelKind::encoder_decoder, vocab.size());
  const auto lm = load_model(paths.model("lm"), nn::ModelKind::causal_lm, vocab.size());
  RefineConfig rc{spec.R, cfg.decode};
  rc.decode.enforce = spec.enforce;
  rc.decode.validate(vocab.size());
  const std::string stem = run_stem(spec);
  Json files = Json::array();
  for (int run = 0; run < cfg.decode_seeds; ++run) {
    std::vector<Json> rows, trace;
    for (const auto& p : plans) {
      const auto sample = prepare_sample(spec.mode, p.prompt, p.plan, p.keyphrases, cfg.generator_train.max_target_len,
                                         derive_seed(cfg.seed, "kp_order", p.index));
      const RefineResult res = run_refinement(gen, lm, sample.input, sample.initial, rc, sample_seed(cfg.seed, run, p.index));
      rows.push_back(draft_row(p.index, run, vocab, p, res.final_draft, res.trace.back().perplexity));
      for (const auto& s : res.trace) trace.push_back(trace_row(p.index, run, vocab, s));
    }
    const std::string name = stem + "_s" + std::to_string(run);
    write_rows(paths.output(name), rows);
    write_rows(paths.trace(name), trace);
    files.push_back(paths.output(name).string());
    if (progress) progress("wrote " + paths.output(name).string());
  }
  return Json{{"outputs", files}, {"stem", stem}, {"samples", plans.size()}};
}

// ---- evaluation ---------------------------------------------------------

// Interns surface tokens so that words outside the vocabulary stay distinct.
class Interner {
 public:
  TokenIds operator()(const Tokens& ts) {
    TokenIds out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(map_.try_emplace(t, static_cast<int>(map_.size())).first->second);
    return out;
  }

 private:
  std::unordered_map<std::string, int> map_;
};

double mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

Json evaluate_run(const Config& cfg, const RunSpec& spec, const RunPaths& paths) {
  require_file(paths.vocab(), "vocabulary");
  const Vocabulary vocab = Vocabulary::load(paths.vocab());
  require_file(paths.split("test"), "test split");
  const auto test = load_corpus(paths.split("test"));
  const auto plans = load_plans(spec.plans, vocab);
  std::map<std::size_t, const PlanRow*> plan_of;
  for (const auto& p : plans) plan_of[p.index] = &p;
  const std::string stem = run_stem(spec);

  Interner intern;
  std::vector<Json> per_run;
  std::map<std::string, std::vector<double>> finals;
  std::vector<std::vector<double>> bleu_r(static_cast<std::size_t>(spec.R)), rouge_r(bleu_r.size()), ppl_r(bleu_r.size());
  for (int run = 0; run < cfg.decode_seeds; ++run) {
    const std::string name = stem + "_s" + std::to_string(run);
    require_file(paths.output(name), "generation output");
    require_file(paths.trace(name), "refinement trace");
    std::vector<TokenIds> cands, refs, outs_vocab;
    std::vector<ContentPlan> used_plans;
    std::vector<double> ppls;
    for (const auto& row : read_jsonl(paths.output(name))) {
      const auto index = row.at("index").get<std::size_t>();
      if (index >= test.size() || !plan_of.count(index)) throw std::invalid_argument("output row without a test document");
      const Tokens draft = row.at("draft_tokens").get<Tokens>();
      cands.push_back(intern(draft));
      refs.push_back(intern(test[index].flat_target()));
      outs_vocab.push_back(vocab.encode(draft));
      used_plans.push_back(plan_of[index]->plan);
      if (!row.at("ppl").is_null()) ppls.push_back(row.at("ppl").get<double>());
    }
    std::vector<std::vector<TokenIds>> iter_cands(bleu_r.size());
    std::vector<std::vector<TokenIds>> iter_refs(bleu_r.size());
    std::vector<std::vector<double>> iter_ppl(bleu_r.size());
    for (const auto& row : read_jsonl(paths.trace(name))) {
      const auto r = row.at("iteration").get<std::size_t>();
      if (r < 1 || r > bleu_r.size()) throw std::invalid_argument("trace iteration out of range");
      iter_cands[r - 1].push_back(intern(row.at("draft_tokens").get<Tokens>()));
      iter_refs[r - 1].push_back(intern(test.at(row.at("index").get<std::size_t>()).flat_target()));
      if (!row.at("ppl").is_null()) iter_ppl[r - 1].push_back(row.at("ppl").get<double>());
    }
    Json series = Json::array();
    for (std::size_t r = 0; r < bleu_r.size(); ++r) {
      const double b = bleu4(iter_cands[r], iter_refs[r], cfg.bleu_smoothing);
      const double rl = rouge_l(iter_cands[r], iter_refs[r]);
      const double pp = mean(iter_ppl[r]);
      bleu_r[r].push_back(b);
      rouge_r[r].push_back(rl);
      ppl_r[r].push_back(pp);
      series.push_back(Json{{"iteration", r + 1}, {"bleu4", b}, {"rouge_l", rl}, {"perplexity", pp}});
    }
    Json m{{"run", run},
           {"bleu4", bleu4(cands, refs, cfg.bleu_smoothing)},
           {"rouge_l", rouge_l(cands, refs)},
           {"kp_coverage", kp_coverage(outs_vocab, used_plans)},
           {"perplexity", mean(ppls)},
           {"iterations", series}};
    for (const char* k : {"bleu4", "rouge_l", "kp_coverage", "perplexity"}) finals[k].push_back(m[k].get<double>());
    per_run.push_back(std::move(m));
  }
  Json series = Json::array();
  for (std::size_t r = 0; r < bleu_r.size(); ++r)
    series.push_back(Json{{"iteration", r + 1}, {"bleu4", mean(bleu_r[r])}, {"rouge_l", mean(rouge_r[r])},
                          {"perplexity", mean(ppl_r[r])}});
  Json report{{"mode", to_string(spec.mode)},
              {"plans", spec.plans.stem().string()},
              {"R", spec.R},
              {"enforce", spec.enforce},
              {"samples", plans.size()},
              {"runs", per_run},
              {"iterations", series}};
  for (const auto& [k, v] : finals) report[k] = mean(v);
  return report;
}

// ---- commands -----------------------------------------------------------

Json cmd_synth(const Config& cfg, const RunPaths& paths) {
  Rng rng = make_rng(cfg.seed, "corpus");
  const auto docs = synth_corpus(cfg.grammar, cfg.n_docs, rng);
  ensure_parent(paths.corpus());
  save_corpus(paths.corpus(), docs);
  return Json{{"corpus", paths.corpus().string()}, {"stats", stats_json(corpus_stats(docs))}};
}

Json cmd_extract(const Config& cfg, const RunPaths& paths) {
  require_file(paths.corpus(), "corpus");
  auto docs = load_corpus(paths.corpus());
  const SplitIndices split = split_corpus(docs, cfg.split, cfg.seed);
  std::vector<char> in_train(docs.size(), 0);
  WordCounts background;
  for (auto i : split.train) in_train[i] = 1;
  for (auto i : split.train)
    for (const auto& [w, c] : count_target_words(docs[i])) background[w] += c;

  for (std::size_t i = 0; i < docs.size(); ++i) {
    const WordCounts own = count_target_words(docs[i]);
    const WordCounts bg = in_train[i] ? subtract_counts(background, own) : background;
    const auto sigs = topic_signatures(own, bg, cfg.signature_threshold);
    docs[i].keyphrases = canonical_keyphrases(extract_keyphrases(docs[i], sigs, cfg.max_keyphrase_length));
  }
  Json summary{{"dropped_without_keyphrases", Json::object()}};
  std::vector<Document> train_docs;
  const std::vector<const std::vector<std::size_t>*> parts{&split.train, &split.valid, &split.test};
  for (std::size_t s = 0; s < parts.size(); ++s) {
    std::vector<Document> out;
    std::size_t dropped = 0;
    for (auto i : *parts[s]) {
      if (docs[i].keyphrases.empty()) {
        ++dropped;
        continue;
      }
      out.push_back(docs[i]);
    }
    ensure_parent(paths.split(kSplits[s]));
    save_corpus(paths.split(kSplits[s]), out);
    summary["dropped_without_keyphrases"][kSplits[s]] = dropped;
    summary["stats"][kSplits[s]] = stats_json(corpus_stats(out));
    if (s == 0) train_docs = std::move(out);
  }
  const Vocabulary vocab = Vocabulary::build(train_docs, cfg.min_count);
  vocab.save(paths.vocab());
  summary["vocab_size"] = vocab.size();
  return summary;
}

Json save_trained(const RunPaths& paths, const std::string& name, const TrainingOutcome& t) {
  ensure_parent(paths.model(name));
  nn::save_checkpoint(t.model, paths.model(name));
  write_rows(paths.train_log(name), t.log);
  Json s{{"checkpoint", paths.model(name).string()}, {"final_loss", t.log.empty() ? Json(nullptr) : t.log.back()}};
  return s;
}

Json cmd_train(const std::string& which, const Config& base, const CommandOptions& o, const RunPaths& paths) {
  Config cfg = base;
  if (o.strategy) cfg.generator_train.strategy = *o.strategy;
  const Data train = load_split(paths, "train");
  const Data valid = load_split(paths, "valid");
  const int V = train.vocab.size();
  const Progress progress = progress_for(o);
  if (which == "planner") return save_trained(paths, "planner", train_planner(cfg, train.encoded, valid.encoded, V, progress));
  if (which == "lm") return save_trained(paths, "lm", train_lm(cfg, train.encoded, valid.encoded, V, progress));
  const GenerationMode mode = o.mode.value_or(GenerationMode::pair_full);
  return save_trained(paths, generator_name(mode), train_generator(cfg, mode, train.encoded, valid.encoded, V, progress));
}

Json cmd_plan(const Config& cfg, const CommandOptions& o, const RunPaths& paths) {
  const Data test = load_split(paths, "test", static_cast<std::size_t>(cfg.test_limit));
  const auto planner = load_model(paths.model("planner"), nn::ModelKind::bidir_causal_hybrid, test.vocab.size());
  const Progress progress = progress_for(o);
  std::vector<Json> gold, predicted;
  std::vector<ContentPlan> gold_plans, predicted_plans;
  double f1 = 0, mae = 0;
  std::size_t mae_n = 0;
  for (std::size_t i = 0; i < test.encoded.size(); ++i) {
    const auto& d = test.encoded[i];
    const ContentPlan p = correct_plan(predict_plan(planner, d.prompt, d.keyphrases));
    gold.push_back(plan_row(i, test.vocab, d, d.oracle));
    predicted.push_back(plan_row(i, test.vocab, d, p));
    gold_plans.push_back(d.oracle);
    predicted_plans.push_back(p);
    const PlanMetrics m = plan_metrics(p, d.oracle);
    f1 += m.assignment_f1;
    if (m.position_mae) {
      mae += *m.position_mae;
      ++mae_n;
    }
  }
  write_rows(paths.plans("gold"), gold);
  write_rows(paths.plans("predicted"), predicted);
  if (progress) progress("wrote " + std::to_string(gold.size()) + " plans");
  const double n = static_cast<double>(std::max<std::size_t>(1, test.encoded.size()));
  return Json{{"samples", test.encoded.size()},
              {"assignment_f1", f1 / n},
              {"position_mae", mae_n ? Json(mae / static_cast<double>(mae_n)) : Json(nullptr)},
              {"gold_templates", to_json(template_stats(gold_plans))},
              {"predicted_templates", to_json(template_stats(predicted_plans))}};
}

Json cmd_generate(const Config& cfg, const CommandOptions& o, const RunPaths& paths) {
  // A single refinement round: y^(1) only.
  RunSpec spec = run_spec(cfg, o, paths);
  spec.R = 1;
  return refine_outputs(cfg, spec, paths, progress_for(o));
}

Json cmd_refine(const Config& cfg, const CommandOptions& o, const RunPaths& paths) {
  return refine_outputs(cfg, run_spec(cfg, o, paths), paths, progress_for(o));
}

Json cmd_evaluate(const Config& cfg, const CommandOptions& o, const RunPaths& paths) {
  const RunSpec spec = run_spec(cfg, o, paths);
  const Json report = evaluate_run(cfg, spec, paths);
  write_json(paths.report(run_stem(spec)), report);
  return Json{{"report", paths.report(run_stem(spec)).string()}, {"bleu4", report["bleu4"]}};
}

void add_artifacts(Json& manifest, const RunPaths& paths) {
  Json files = Json::array();
  std::vector<fs::path> all;
  for (const auto& e : fs::recursive_directory_iterator(paths.root))
    if (e.is_regular_file()) all.push_back(e.path());
  std::sort(all.begin(), all.end());
  for (const auto& p : all) {
    const std::string rel = fs::relative(p, paths.root).string();
    if (rel == "manifest.json") continue;
    files.push_back(Json{{"path", rel}, {"bytes", fs::file_size(p)}});
  }
  manifest["artifacts"] = files;
}

Json cmd_end2end(const Config& cfg, const CommandOptions& o, const RunPaths& paths) {
  const Progress progress = progress_for(o);
  auto step = [&](const std::string& what) {
    if (progress) progress("end2end: " + what);
  };
  fs::create_directories(paths.root);
  write_file_atomic(paths.root / "config.ini", render_config(cfg));
  Json report;
  step("synth");
  report["corpus"] = cmd_synth(cfg, paths)["stats"];
  step("extract-kp");
  const Json extracted = cmd_extract(cfg, paths);
  report["extracted"] = extracted;

  bool any_pair = false;
  for (auto m : cfg.modes) any_pair |= (m == GenerationMode::pair_full || m == GenerationMode::pair_light);
  const bool predicted = cfg.predicted_plans && any_pair;

  CommandOptions quiet = o;
  Json training;
  if (predicted) {
    step("train-planner");
    training["planner"] = cmd_train("planner", cfg, quiet, paths)["final_loss"];
  }
  step("train-lm");
  training["lm"] = cmd_train("lm", cfg, quiet, paths)["final_loss"];
  for (auto m : cfg.modes) {
    step("train-generator " + to_string(m));
    quiet.mode = m;
    training[generator_name(m)] = cmd_train("generator", cfg, quiet, paths)["final_loss"];
  }
  report["training"] = training;

  if (predicted) {
    step("plan");
    report["planning"] = cmd_plan(cfg, o, paths);
  } else {
    // Gold plans are still needed as generation inputs.
    const Data test = load_split(paths, "test", static_cast<std::size_t>(cfg.test_limit));
    std::vector<Json> gold;
    for (std::size_t i = 0; i < test.encoded.size(); ++i) gold.push_back(plan_row(i, test.vocab, test.encoded[i], test.encoded[i].oracle));
    write_rows(paths.plans("gold"), gold);
  }

  Json results = Json::object();
  for (auto m : cfg.modes) {
    std::vector<std::string> plan_sets{"gold"};
    const bool pair = m == GenerationMode::pair_full || m == GenerationMode::pair_light;
    if (pair && predicted) plan_sets.push_back("predicted");
    for (const auto& ps : plan_sets) {
      CommandOptions ro = o;
      ro.mode = m;
      ro.plans = paths.plans(ps);
      ro.R.reset();
      const RunSpec spec = run_spec(cfg, ro, paths);
      step("refine " + run_stem(spec));
      refine_outputs(cfg, spec, paths, progress);
      const Json r = evaluate_run(cfg, spec, paths);
      write_json(paths.report(run_stem(spec)), r);
      results[to_string(m) + "/" + ps] = r;
    }
  }
  report["results"] = results;
  write_json(paths.root / "report.json", report);

  Json manifest{{"config", "config.ini"}, {"report", "report.json"}, {"seed", cfg.seed}};
  add_artifacts(manifest, paths);
  write_json(paths.root / "manifest.json", manifest);
  return Json{{"report", (paths.root / "report.json").string()}, {"manifest", (paths.root / "manifest.json").string()}};
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth",  "extract-kp", "train-planner", "train-generator",
                                              "train-lm", "plan",     "generate",      "refine",
                                              "evaluate", "end2end",  "gradcheck"};
  return names;
}

Json run_command(const std::string& command, const Config& cfg, const CommandOptions& options) {
  const RunPaths paths(cfg.out_dir);
  if (command == "synth") return cmd_synth(cfg, paths);
  if (command == "extract-kp") return cmd_extract(cfg, paths);
  if (command == "train-planner") return cmd_train("planner", cfg, options, paths);
  if (command == "train-generator") return cmd_train("generator", cfg, options, paths);
  if (command == "train-lm") return cmd_train("lm", cfg, options, paths);
  if (command == "plan") return cmd_plan(cfg, options, paths);
  if (command == "generate") return cmd_generate(cfg, options, paths);
  if (command == "refine") return cmd_refine(cfg, options, paths);
  if (command == "evaluate") return cmd_evaluate(cfg, options, paths);
  if (command == "end2end") return cmd_end2end(cfg, options, paths);
  if (command == "gradcheck") return gradcheck_report(cfg.seed);
  throw std::invalid_argument("unknown command: " + command);
}

Json gradcheck_report(std::uint64_t seed) {
  constexpr int kV = 24;
  constexpr double kEps = 1e-5;
  auto small = [](nn::ModelKind kind) {
    nn::ModelConfig c;
    c.kind = kind;
    c.d_model = 16;
    c.n_heads = 2;
    c.n_layers = 2;
    c.ffn_dim = 32;
    c.max_len = 48;
    c.vocab_size = kV;
    c.dropout = 0.0;
    return c;
  };
  Rng rng = make_rng(seed, "gradcheck-data");
  auto word = [&] { return kNumSpecialTokens + static_cast<int>(uniform_below(rng, kV - kNumSpecialTokens)); };
  Json out = Json::object();
  double worst = 0;

  {
    nn::ModelConfig c = small(nn::ModelKind::bidir_causal_hybrid);
    c.uses_segment_embeddings = true;
    c.position_classes = kPositionClasses;
    auto m = nn::Model<double>::initialized(c, derive_seed(seed, "gradcheck-planner"), 0.1);
    KeyphraseSet kps({{9, 10}, {11}});
    ContentPlan gold = extract_oracle_plan({{12, 9, 10, 13}, {11, 14}}, kps);
    std::vector<PlanExample> batch{make_plan_example({15, 16, 17}, kps, gold)};
    const nn::ExampleLoss<double, PlanExample> loss = [](const nn::Model<double>& mm, const PlanExample& ex,
                                                         nn::ParameterSet<double>* g, Rng* d) {
      return planner_loss(mm, ex, g, d).total();
    };
    const auto r = nn::gradcheck<PlanExample>(m, batch, loss, kEps, 300, seed);
    out["planner"] = Json{{"max_relative_error", r.max_relative_error}, {"coordinates", r.coordinates},
                          {"worst_parameter", r.worst_parameter}};
    worst = std::max(worst, r.max_relative_error);
  }
  {
    nn::ModelConfig c = small(nn::ModelKind::encoder_decoder);
    c.uses_segment_embeddings = true;
    c.n_segments = kGeneratorSegments;
    c.slot_window = 2;
    auto m = nn::Model<double>::initialized(c, derive_seed(seed, "gradcheck-generator"), 0.1);
    TokenIds y;
    for (int i = 0; i < 6; ++i) y.push_back(word());
    Template t;
    t.tokens = y;
    t.doc_length = 6;
    t.tokens[1] = t.tokens[3] = kMask;
    GenerationInput in{GenerationMode::pair_full, {word(), word()}, {y[0], kSen}};
    std::vector<GeneratorExample> batch{{encoder_input(in, &t, true), y, t.tokens}};
    const nn::ExampleLoss<double, GeneratorExample> loss = [](const nn::Model<double>& mm, const GeneratorExample& ex,
                                                              nn::ParameterSet<double>* g, Rng* d) {
      return generator_loss(mm, ex.source, ex.target, g, d, &ex.template_tokens);
    };
    const auto r = nn::gradcheck<GeneratorExample>(m, batch, loss, kEps, 300, seed);
    out["generator"] = Json{{"max_relative_error", r.max_relative_error}, {"coordinates", r.coordinates},
                            {"worst_parameter", r.worst_parameter}};
    worst = std::max(worst, r.max_relative_error);
  }
  {
    auto m = nn::Model<double>::initialized(small(nn::ModelKind::causal_lm), derive_seed(seed, "gradcheck-lm"), 0.1);
    TokenIds y;
    for (int i = 0; i < 7; ++i) y.push_back(word());
    std::vector<TokenIds> batch{y};
    const nn::ExampleLoss<double, TokenIds> loss = [](const nn::Model<double>& mm, const TokenIds& ex,
                                                      nn::ParameterSet<double>* g, Rng* d) {
      return lm_loss(mm, ex, g, d);
    };
    const auto r = nn::gradcheck<TokenIds>(m, batch, loss, kEps, 300, seed);
    out["lm"] = Json{{"max_relative_error", r.max_relative_error}, {"coordinates", r.coordinates},
                     {"worst_parameter", r.worst_parameter}};
    worst = std::max(worst, r.max_relative_error);
  }
  out["max_relative_error"] = worst;
  return out;
}

}  // namespace pairgen
