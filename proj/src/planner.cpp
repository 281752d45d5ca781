#include "pairgen/planner.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pairgen/nn/incremental.hpp"
#include "pairgen/nn/transformer.hpp"
#include "pairgen/vocab.hpp"

namespace pairgen {

namespace {

std::string describe(const TokenIds& phrase) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < phrase.size(); ++i) os << (i ? " " : "") << phrase[i];
  os << ']';
  return os.str();
}

struct Occurrence {
  int phrase = -1;
  int sentence = 0;
  int offset = 0;
};

}  // namespace

ContentPlan extract_oracle_plan(const std::vector<TokenIds>& reference, const KeyphraseSet& keyphrases) {
  std::vector<int> order(keyphrases.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return keyphrases[static_cast<std::size_t>(a)].size() > keyphrases[static_cast<std::size_t>(b)].size();
  });

  std::vector<std::vector<char>> claimed(reference.size());
  for (std::size_t s = 0; s < reference.size(); ++s) claimed[s].assign(reference[s].size(), 0);

  std::vector<Occurrence> found;
  for (int k : order) {
    const auto& ph = keyphrases[static_cast<std::size_t>(k)];
    const int len = static_cast<int>(ph.size());
    bool seen = false, placed = false;
    for (std::size_t s = 0; s < reference.size() && !placed; ++s) {
      const auto& sent = reference[s];
      for (int o = 0; o + len <= static_cast<int>(sent.size()); ++o) {
        if (!std::equal(ph.begin(), ph.end(), sent.begin() + o)) continue;
        seen = true;
        if (std::any_of(claimed[s].begin() + o, claimed[s].begin() + o + len, [](char c) { return c != 0; })) continue;
        std::fill(claimed[s].begin() + o, claimed[s].begin() + o + len, 1);
        found.push_back({k, static_cast<int>(s), o});
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw std::invalid_argument(seen ? "keyphrase only occurs inside other keyphrases: " + describe(ph)
                                       : "keyphrase not found in reference: " + describe(ph));
    }
  }
  std::sort(found.begin(), found.end(), [](const Occurrence& a, const Occurrence& b) {
    return std::tie(a.sentence, a.offset) < std::tie(b.sentence, b.offset);
  });

  ContentPlan plan;
  plan.sentences.resize(reference.size());
  for (std::size_t s = 0; s < reference.size(); ++s)
    plan.sentences[s].length = std::min(static_cast<int>(reference[s].size()), kMaxPosition);
  for (const auto& occ : found) {
    PhrasePlacement pp;
    pp.phrase_index = occ.phrase;
    pp.tokens = keyphrases[static_cast<std::size_t>(occ.phrase)];
    for (std::size_t j = 0; j < pp.tokens.size(); ++j)
      pp.positions.push_back(std::min(occ.offset + static_cast<int>(j), kMaxPosition));
    plan.sentences[static_cast<std::size_t>(occ.sentence)].phrases.push_back(std::move(pp));
  }
  plan.terminated = true;
  plan.eos_position = 0;
  return plan;
}

PlanExample make_plan_example(const TokenIds& prompt, const KeyphraseSet& keyphrases, const ContentPlan& gold) {
  return {prompt, keyphrases, gold.assignment(), gold.positions()};
}

nn::Sequence planner_input(const TokenIds& prompt, const KeyphraseSet& keyphrases) {
  std::vector<int> ids = prompt;
  for (const auto& ph : keyphrases.phrases()) {
    ids.push_back(kSep);
    ids.insert(ids.end(), ph.begin(), ph.end());
  }
  return nn::Sequence::plain(std::move(ids), 0);
}

nn::Sequence planner_training_sequence(const PlanExample& ex, int* input_len) {
  if (ex.gold_assignment.empty() || ex.gold_assignment.size() != ex.gold_positions.size())
    throw std::invalid_argument("malformed plan example");
  nn::Sequence seq = planner_input(ex.prompt, ex.keyphrases);
  const int n = static_cast<int>(seq.size());
  if (input_len) *input_len = n;
  for (std::size_t j = 0; j < ex.gold_assignment.size(); ++j) {
    seq.ids.push_back(j == 0 ? static_cast<int>(kBok) : ex.gold_assignment[j - 1]);
    seq.positions.push_back(n + static_cast<int>(j));
    seq.segments.push_back(1);
  }
  return seq;
}

template <class S>
PlannerLossParts planner_loss(const nn::Model<S>& model, const PlanExample& ex, nn::ParameterSet<S>* grads,
                              Rng* dropout, double position_weight) {
  int input_len = 0;
  const nn::Sequence seq = planner_training_sequence(ex, &input_len);
  const int out_len = static_cast<int>(ex.gold_assignment.size());
  const nn::ForwardPass<S> pass(model, seq, nn::build_hybrid_mask(input_len, out_len), input_len, dropout);
  const double inv = 1.0 / out_len;
  nn::Matrix<S> dl, dp;
  PlannerLossParts parts;
  parts.position_weight = position_weight;
  parts.assignment = inv * nn::softmax_cross_entropy(pass.logits(), ex.gold_assignment, grads ? &dl : nullptr, inv);
  parts.position = inv * nn::softmax_cross_entropy(pass.position_logits(), ex.gold_positions, grads ? &dp : nullptr,
                                                   position_weight * inv);
  if (grads) pass.backward(dl, &dp, *grads);
  return parts;
}

namespace {

int argmax_over(const auto& row, const std::vector<int>& candidates) {
  int best = candidates.front();
  for (int c : candidates)
    if (row(c) > row(best) || (row(c) == row(best) && c < best)) best = c;
  return best;
}

bool has_prefix(const TokenIds& phrase, const TokenIds& prefix) {
  return phrase.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), phrase.begin());
}

}  // namespace

template <class S>
ContentPlan predict_plan(const nn::Model<S>& model, const TokenIds& prompt, const KeyphraseSet& keyphrases) {
  if (keyphrases.empty()) throw std::invalid_argument("empty keyphrase set");
  nn::IncrementalState<S> state(model);
  const nn::Sequence input = planner_input(prompt, keyphrases);
  state.append(input, true);

  const std::size_t n_phrases = keyphrases.size();
  std::vector<char> used(n_phrases, 0);
  TokenIds prefix;
  std::vector<int> prefix_positions;
  ContentPlan plan;
  plan.terminated = false;
  SentencePlan sentence;
  bool sentence_open = false;

  auto terminal_phrase = [&]() -> int {
    if (prefix.empty()) return -1;
    for (std::size_t k = 0; k < n_phrases; ++k)
      if (!used[k] && keyphrases[k] == prefix) return static_cast<int>(k);
    return -1;
  };
  auto finish_phrase = [&](int k) {
    PhrasePlacement pp;
    pp.phrase_index = k;
    pp.tokens = prefix;
    pp.positions = prefix_positions;
    sentence.phrases.push_back(std::move(pp));
    sentence_open = true;
    used[static_cast<std::size_t>(k)] = 1;
    prefix.clear();
    prefix_positions.clear();
  };

  int next = kBok;
  int pos_id = static_cast<int>(input.size());
  for (int emitted = 0; emitted < kMaxPosition; ++emitted) {
    const auto h = state.append(nn::Sequence{{next}, {pos_id++}, {1}, {}});
    const auto logits = state.token_logits(h);
    const auto pos_logits = state.position_logits(h);
    const int remaining = kMaxPosition - emitted;

    std::vector<int> continuations;
    for (std::size_t k = 0; k < n_phrases; ++k) {
      const auto& ph = keyphrases[k];
      if (used[k] || prefix.empty() || ph.size() <= prefix.size() || !has_prefix(ph, prefix)) continue;
      if (static_cast<int>(ph.size() - prefix.size()) <= remaining) continuations.push_back(ph[prefix.size()]);
    }
    const int terminal = terminal_phrase();
    std::vector<int> candidates = continuations;
    if (prefix.empty() || terminal >= 0) {
      for (std::size_t k = 0; k < n_phrases; ++k)
        if (!used[k] && static_cast<int>(k) != terminal && static_cast<int>(keyphrases[k].size()) <= remaining)
          candidates.push_back(keyphrases[k].front());
      candidates.push_back(kSen);
      candidates.push_back(kEos);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const int token = argmax_over(logits.row(0), candidates);
    int position = 0;
    pos_logits.row(0).maxCoeff(&position);

    const bool continues = std::find(continuations.begin(), continuations.end(), token) != continuations.end();
    if (continues) {
      prefix.push_back(token);
      prefix_positions.push_back(position);
    } else {
      if (terminal >= 0) finish_phrase(terminal);
      if (token == kEos) {
        plan.terminated = true;
        plan.eos_position = position;
        break;
      }
      if (token == kSen) {
        sentence.length = position;
        sentence.closed = true;
        plan.sentences.push_back(std::move(sentence));
        sentence = {};
        sentence_open = false;
      } else {
        prefix = {token};
        prefix_positions = {position};
      }
    }
    next = token;
  }
  if (const int terminal = terminal_phrase(); terminal >= 0) finish_phrase(terminal);
  if (sentence_open) {
    sentence.closed = false;
    plan.sentences.push_back(std::move(sentence));
  }
  return plan;
}

template PlannerLossParts planner_loss(const nn::Model<float>&, const PlanExample&, nn::ParameterSet<float>*, Rng*,
                                       double);
template PlannerLossParts planner_loss(const nn::Model<double>&, const PlanExample&, nn::ParameterSet<double>*, Rng*,
                                       double);
template ContentPlan predict_plan(const nn::Model<float>&, const TokenIds&, const KeyphraseSet&);
template ContentPlan predict_plan(const nn::Model<double>&, const TokenIds&, const KeyphraseSet&);

}  // namespace pairgen
