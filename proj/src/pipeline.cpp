#include "pairgen/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pairgen/nn/optim.hpp"
#include "pairgen/planner.hpp"
#include "pairgen/templates.hpp"

namespace pairgen {

EncodedDoc encode_document(const Document& doc, const Vocabulary& vocab) {
  EncodedDoc e;
  e.prompt = vocab.encode(doc.prompt);
  for (const auto& s : doc.target) {
    e.sentences.push_back(vocab.encode(s));
    e.target.insert(e.target.end(), e.sentences.back().begin(), e.sentences.back().end());
  }
  // Unknown words can make two phrases collide after encoding.
  std::vector<TokenIds> phrases;
  std::set<TokenIds> seen;
  for (const auto& k : canonical_keyphrases(doc.keyphrases)) {
    TokenIds ids = vocab.encode(k);
    if (seen.insert(ids).second) phrases.push_back(std::move(ids));
  }
  e.keyphrases = KeyphraseSet(std::move(phrases));
  e.oracle = extract_oracle_plan(e.sentences, e.keyphrases);
  return e;
}

std::vector<EncodedDoc> encode_documents(const std::vector<Document>& docs, const Vocabulary& vocab) {
  std::vector<EncodedDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode_document(d, vocab));
  return out;
}

namespace {

nn::ModelConfig base_model(const Config& cfg, int vocab_size) {
  nn::ModelConfig m = cfg.model;
  m.vocab_size = vocab_size;
  return m;
}

}  // namespace

nn::ModelConfig planner_model_config(const Config& cfg, int vocab_size) {
  nn::ModelConfig m = base_model(cfg, vocab_size);
  m.kind = nn::ModelKind::bidir_causal_hybrid;
  m.uses_segment_embeddings = true;
  m.n_segments = 2;
  m.position_classes = kPositionClasses;
  return m;
}

nn::ModelConfig generator_model_config(const Config& cfg, GenerationMode mode, int vocab_size) {
  nn::ModelConfig m = base_model(cfg, vocab_size);
  m.kind = nn::ModelKind::encoder_decoder;
  m.uses_segment_embeddings = true;
  m.n_segments = kGeneratorSegments;
  if (mode == GenerationMode::pair_light || mode == GenerationMode::pair_full) m.slot_window = cfg.generator_train.slot_window;
  return m;
}

nn::ModelConfig lm_model_config(const Config& cfg, int vocab_size) {
  nn::ModelConfig m = base_model(cfg, vocab_size);
  m.kind = nn::ModelKind::causal_lm;
  m.uses_segment_embeddings = false;
  return m;
}

namespace {

constexpr long kLogEvery = 100;
constexpr std::size_t kValidDocs = 200;

template <class Ex>
struct TrainJob {
  std::string tag;
  nn::ModelConfig model;
  TrainBudget budget;
  std::size_t n_train = 0;
  std::function<Ex(std::size_t, Rng&)> make;
  nn::ExampleLoss<float, Ex> loss;
  std::vector<Ex> valid;
};

template <class Ex>
TrainingOutcome train_loop(const Config& cfg, const TrainJob<Ex>& job, const Progress& progress) {
  if (job.n_train == 0) throw std::invalid_argument("no training documents for " + job.tag);
  job.model.validate();
  TrainingOutcome out{nn::Model<float>::initialized(job.model, derive_seed(cfg.seed, "init:" + job.tag), cfg.init_std), {}};
  const nn::OptimizerConfig opt = job.budget.optimizer(cfg.optimizer);
  nn::AdamState adam(job.model);
  Rng data = make_rng(cfg.seed, "data:" + job.tag);
  Rng dropout = make_rng(cfg.seed, "dropout:" + job.tag);

  std::vector<std::size_t> order(job.n_train);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const auto started = std::chrono::steady_clock::now();
  double window = 0;
  long window_n = 0;
  std::vector<Ex> batch;
  for (long step = 1; step <= job.budget.steps; ++step) {
    batch.clear();
    for (int b = 0; b < job.budget.batch_size; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(data, i)]);
        cursor = 0;
      }
      batch.push_back(job.make(order[cursor++], data));
    }
    const double loss = nn::train_step<Ex>(out.model, batch, job.loss, adam, step, opt, &dropout);
    window += loss;
    ++window_n;
    if (step % kLogEvery == 0 || step == job.budget.steps) {
      out.log.push_back(Json{{"step", step}, {"loss", window / static_cast<double>(window_n)}});
      if (progress) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::ostringstream os;
        os << job.tag << " step " << step << "/" << job.budget.steps << " loss " << window / window_n << " ("
           << static_cast<long>(secs) << " s)";
        progress(os.str());
      }
      window = 0;
      window_n = 0;
    }
  }
  if (!job.valid.empty()) {
    double total = 0;
    for (const auto& ex : job.valid) total += job.loss(out.model, ex, nullptr, nullptr);
    const double mean = total / static_cast<double>(job.valid.size());
    out.log.push_back(Json{{"valid_loss", mean}, {"valid_examples", job.valid.size()}});
    if (progress) progress(job.tag + " valid loss " + std::to_string(mean));
  }
  return out;
}

std::size_t valid_count(const std::vector<EncodedDoc>& valid) { return std::min(valid.size(), kValidDocs); }

}  // namespace

TrainingOutcome train_planner(const Config& cfg, const std::vector<EncodedDoc>& train,
                              const std::vector<EncodedDoc>& valid, int vocab_size, const Progress& progress) {
  TrainJob<PlanExample> job;
  job.tag = "planner";
  job.model = planner_model_config(cfg, vocab_size);
  job.budget = cfg.planner;
  job.n_train = train.size();
  job.make = [&train](std::size_t i, Rng&) {
    return make_plan_example(train[i].prompt, train[i].keyphrases, train[i].oracle);
  };
  const double weight = cfg.position_loss_weight;
  job.loss = [weight](const nn::Model<float>& m, const PlanExample& ex, nn::ParameterSet<float>* g, Rng* d) {
    return planner_loss(m, ex, g, d, weight).total();
  };
  for (std::size_t i = 0; i < valid_count(valid); ++i)
    job.valid.push_back(make_plan_example(valid[i].prompt, valid[i].keyphrases, valid[i].oracle));
  return train_loop(cfg, job, progress);
}

TrainingOutcome train_generator(const Config& cfg, GenerationMode mode, const std::vector<EncodedDoc>& train,
                                const std::vector<EncodedDoc>& valid, int vocab_size, const Progress& progress) {
  TrainJob<GeneratorExample> job;
  job.tag = generator_name(mode);
  job.model = generator_model_config(cfg, mode, vocab_size);
  job.budget = cfg.generator;
  job.n_train = train.size();
  const GeneratorTrainConfig gcfg = cfg.generator_train;
  job.make = [&train, mode, gcfg](std::size_t i, Rng& rng) {
    const auto& d = train[i];
    return make_generator_example(mode, d.prompt, d.target, d.oracle, d.keyphrases, gcfg, true, rng);
  };
  job.loss = [](const nn::Model<float>& m, const GeneratorExample& ex, nn::ParameterSet<float>* g, Rng* d) {
    return generator_loss(m, ex.source, ex.target, g, d, &ex.template_tokens);
  };
  Rng vrng = make_rng(cfg.seed, "valid:" + job.tag);
  for (std::size_t i = 0; i < valid_count(valid); ++i) {
    const auto& d = valid[i];
    job.valid.push_back(make_generator_example(mode, d.prompt, d.target, d.oracle, d.keyphrases, gcfg, true, vrng));
  }
  return train_loop(cfg, job, progress);
}

TrainingOutcome train_lm(const Config& cfg, const std::vector<EncodedDoc>& train, const std::vector<EncodedDoc>& valid,
                         int vocab_size, const Progress& progress) {
  TrainJob<TokenIds> job;
  job.tag = "lm";
  job.model = lm_model_config(cfg, vocab_size);
  job.budget = cfg.lm;
  job.n_train = train.size();
  const std::size_t cap = static_cast<std::size_t>(cfg.generator_train.max_target_len);
  auto clipped = [cap](const TokenIds& y) { return TokenIds(y.begin(), y.begin() + static_cast<long>(std::min(y.size(), cap))); };
  job.make = [&train, clipped](std::size_t i, Rng&) { return clipped(train[i].target); };
  job.loss = [](const nn::Model<float>& m, const TokenIds& y, nn::ParameterSet<float>* g, Rng* d) {
    return lm_loss(m, y, g, d);
  };
  for (std::size_t i = 0; i < valid_count(valid); ++i) job.valid.push_back(clipped(valid[i].target));
  return train_loop(cfg, job, progress);
}

PreparedSample prepare_sample(GenerationMode mode, const TokenIds& prompt, const ContentPlan& plan,
                              const KeyphraseSet& keyphrases, int max_target_len, std::uint64_t kp_seed) {
  PreparedSample s;
  s.input.mode = mode;
  s.input.prompt = prompt;
  switch (mode) {
    case GenerationMode::seq2seq:
      break;
    case GenerationMode::kp_seq2seq: {
      Rng rng(kp_seed);
      s.input.plan = keyphrases_for_encoder(keyphrases, rng);
      break;
    }
    case GenerationMode::pair_light:
      s.input.plan = plan_for_encoder(correct_plan(plan));
      s.initial = light_template();
      break;
    case GenerationMode::pair_full: {
      const ContentPlan corrected = correct_plan(plan);
      s.input.plan = plan_for_encoder(corrected);
      s.initial = build_template(corrected, max_target_len);
      break;
    }
  }
  return s;
}

int effective_rounds(GenerationMode mode, int R) {
  return mode == GenerationMode::pair_full || mode == GenerationMode::pair_light ? R : 1;
}

std::uint64_t sample_seed(std::uint64_t seed, int run, std::size_t index) {
  return derive_seed(derive_seed(seed, "decode", static_cast<std::uint64_t>(run)), "sample", index);
}

std::string generator_name(GenerationMode mode) { return "generator_" + to_string(mode); }

}  // namespace pairgen
