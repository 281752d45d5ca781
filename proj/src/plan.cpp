#include "pairgen/plan.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "pairgen/vocab.hpp"

namespace pairgen {

KeyphraseSet::KeyphraseSet(std::vector<TokenIds> phrases) : phrases_(std::move(phrases)) {
  std::set<TokenIds> seen;
  for (const auto& p : phrases_) {
    if (p.empty()) throw std::invalid_argument("empty keyphrase");
    if (static_cast<int>(p.size()) > kMaxKeyphraseLength) throw std::invalid_argument("keyphrase longer than 10 tokens");
    for (int t : p)
      if (is_special(t) && t != kUnk) throw std::invalid_argument("keyphrase contains a reserved token");
    if (!seen.insert(p).second) throw std::invalid_argument("duplicate keyphrase");
  }
}

std::vector<Tokens> canonical_keyphrases(std::vector<Tokens> phrases) {
  std::sort(phrases.begin(), phrases.end(),
            [](const Tokens& a, const Tokens& b) { return join(a) < join(b); });
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());
  return phrases;
}

TokenIds ContentPlan::assignment() const {
  TokenIds out;
  for (const auto& s : sentences) {
    for (const auto& p : s.phrases) out.insert(out.end(), p.tokens.begin(), p.tokens.end());
    if (s.closed) out.push_back(kSen);
  }
  if (terminated) out.push_back(kEos);
  return out;
}

std::vector<int> ContentPlan::positions() const {
  std::vector<int> out;
  for (const auto& s : sentences) {
    for (const auto& p : s.phrases) out.insert(out.end(), p.positions.begin(), p.positions.end());
    if (s.closed) out.push_back(s.length);
  }
  if (terminated) out.push_back(eos_position);
  return out;
}

std::size_t ContentPlan::phrase_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.phrases.size();
  return n;
}

ContentPlan plan_from_flat(const TokenIds& assignment, const std::vector<int>& positions,
                           const KeyphraseSet& keyphrases) {
  if (assignment.size() != positions.size())
    throw std::invalid_argument("assignment and positions differ in length");
  ContentPlan plan;
  plan.terminated = false;
  SentencePlan current;
  bool open = false;
  std::vector<char> used(keyphrases.size(), 0);
  std::size_t i = 0;
  while (i < assignment.size()) {
    const int tok = assignment[i];
    if (tok == kEos) {
      plan.terminated = true;
      plan.eos_position = positions[i];
      ++i;
      break;
    }
    if (tok == kSen) {
      current.length = positions[i];
      current.closed = true;
      plan.sentences.push_back(std::move(current));
      current = {};
      open = false;
      ++i;
      continue;
    }
    int best = -1;
    std::size_t best_len = 0;
    for (std::size_t k = 0; k < keyphrases.size(); ++k) {
      const auto& ph = keyphrases[k];
      if (used[k] || ph.size() <= best_len || i + ph.size() > assignment.size()) continue;
      if (std::equal(ph.begin(), ph.end(), assignment.begin() + static_cast<long>(i))) {
        best = static_cast<int>(k);
        best_len = ph.size();
      }
    }
    if (best < 0) throw std::invalid_argument("assignment token outside the keyphrase set");
    used[static_cast<std::size_t>(best)] = 1;
    PhrasePlacement pp;
    pp.phrase_index = best;
    pp.tokens.assign(assignment.begin() + static_cast<long>(i), assignment.begin() + static_cast<long>(i + best_len));
    pp.positions.assign(positions.begin() + static_cast<long>(i), positions.begin() + static_cast<long>(i + best_len));
    current.phrases.push_back(std::move(pp));
    open = true;
    i += best_len;
  }
  if (open) {
    current.closed = false;
    plan.sentences.push_back(std::move(current));
  }
  return plan;
}

bool contains_phrase(const TokenIds& seq, const TokenIds& phrase) {
  if (phrase.empty()) return true;
  return std::search(seq.begin(), seq.end(), phrase.begin(), phrase.end()) != seq.end();
}

}  // namespace pairgen
