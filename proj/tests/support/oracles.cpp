#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace pairgen::oracle {

std::vector<int> nucleus(const std::vector<double>& logits, int k, double p, double temperature) {
  const int v = static_cast<int>(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) mx = std::max(mx, x / temperature);
  std::vector<double> prob(static_cast<std::size_t>(v));
  double z = 0;
  for (int i = 0; i < v; ++i)
    z += prob[static_cast<std::size_t>(i)] = std::exp(logits[static_cast<std::size_t>(i)] / temperature - mx);
  for (double& q : prob) q /= z;
  std::vector<int> ids;
  for (int i = 0; i < v; ++i)
    if (prob[static_cast<std::size_t>(i)] > 0) ids.push_back(i);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](int a, int b) { return prob[static_cast<std::size_t>(a)] > prob[static_cast<std::size_t>(b)]; });
  std::vector<int> kept;
  double mass = 0;
  for (int id : ids) {
    kept.push_back(id);
    mass += prob[static_cast<std::size_t>(id)];
    if (mass >= p) break;
  }
  if (static_cast<int>(kept.size()) > k) kept.resize(static_cast<std::size_t>(k));
  return kept;
}

namespace {

long occurrences(const TokenIds& s, const TokenIds& g) {
  long c = 0;
  for (std::size_t i = 0; i + g.size() <= s.size(); ++i)
    c += std::equal(g.begin(), g.end(), s.begin() + static_cast<long>(i));
  return c;
}

}  // namespace

double bleu(const std::vector<TokenIds>& cands, const std::vector<TokenIds>& refs, bool smooth) {
  double logp = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    double matched = 0, total = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      std::set<TokenIds> seen;
      for (std::size_t s = 0; s + n <= cands[i].size(); ++s) {
        const TokenIds g(cands[i].begin() + static_cast<long>(s), cands[i].begin() + static_cast<long>(s + n));
        total += 1;
        if (!seen.insert(g).second) continue;
        matched += static_cast<double>(std::min(occurrences(cands[i], g), occurrences(refs[i], g)));
      }
    }
    if (smooth && n > 1) {
      matched += 1;
      total += 1;
    }
    if (matched == 0) return 0.0;
    logp += std::log(matched / total) / 4;
  }
  double c_len = 0, r_len = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    c_len += static_cast<double>(cands[i].size());
    r_len += static_cast<double>(refs[i].size());
  }
  const double bp = c_len >= r_len ? 1.0 : std::exp(1 - r_len / c_len);
  return bp * std::exp(logp);
}

std::size_t lcs(const TokenIds& a, const TokenIds& b) {
  const TokenIds& s = a.size() <= b.size() ? a : b;
  const TokenIds& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
    TokenIds sub;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (mask & (1u << i)) sub.push_back(s[i]);
    std::size_t j = 0;
    for (std::size_t i = 0; i < t.size() && j < sub.size(); ++i)
      if (t[i] == sub[j]) ++j;
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

double rouge_l(const TokenIds& cand, const TokenIds& ref) {
  const double l = static_cast<double>(lcs(cand, ref));
  if (l == 0) return 0.0;
  const double p = l / static_cast<double>(cand.size()), r = l / static_cast<double>(ref.size());
  return 2 * p * r / (p + r);
}

double cross_entropy(const Eigen::Matrix<double, 1, Eigen::Dynamic>& row, int target) {
  const double mx = row.maxCoeff();
  double z = 0;
  for (Eigen::Index j = 0; j < row.size(); ++j) z += std::exp(row(j) - mx);
  return -(row(target) - mx - std::log(z));
}

std::string plan_violation(const ContentPlan& raw, const ContentPlan& fixed) {
  if (fixed.sentences.size() != raw.sentences.size()) return "sentence count changed";
  for (std::size_t si = 0; si < fixed.sentences.size(); ++si) {
    const auto& r = raw.sentences[si];
    const auto& f = fixed.sentences[si];
    if (f.phrases.size() > r.phrases.size()) return "phrases added";
    std::size_t budget = 0, fit = 0;
    while (fit < r.phrases.size() && budget + r.phrases[fit].tokens.size() <= static_cast<std::size_t>(kMaxPosition))
      budget += r.phrases[fit++].tokens.size();
    if (f.phrases.size() != fit) return "wrong number of phrases kept";
    int prev_end = -1;
    for (std::size_t k = 0; k < f.phrases.size(); ++k) {
      const auto& p = f.phrases[k];
      if (p.tokens != r.phrases[k].tokens || p.phrase_index != r.phrases[k].phrase_index) return "phrase altered";
      if (p.positions.size() != p.tokens.size()) return "positions misaligned";
      for (std::size_t j = 0; j < p.positions.size(); ++j) {
        if (p.positions[j] < 0 || p.positions[j] > kMaxPosition) return "position out of range";
        if (j && p.positions[j] != p.positions[j - 1] + 1) return "phrase not consecutive";
      }
      if (p.positions.front() <= prev_end) return "phrases overlap or go backwards";
      prev_end = p.positions.back();
    }
    if (f.length < 0 || f.length > kMaxPosition) return "length out of range";
    if (prev_end >= 0 && f.length < prev_end + 1) return "length does not cover the last phrase";
    if (f.length < std::min(r.length, kMaxPosition)) return "length shrank";
  }
  return "";
}

std::vector<int> expected_starts(const SentencePlan& s) {
  std::vector<int> starts;
  int prev_end = -1;
  for (const auto& p : s.phrases) {
    const int start = std::max(p.positions.front(), prev_end + 1);
    starts.push_back(start);
    prev_end = start + static_cast<int>(p.tokens.size()) - 1;
  }
  return starts;
}

ContentPlan random_raw_plan(Rng& rng) {
  ContentPlan p;
  const int n_sent = 1 + static_cast<int>(uniform_below(rng, 5));
  int next_index = 0;
  for (int s = 0; s < n_sent; ++s) {
    SentencePlan sp;
    const bool crowded = uniform_below(rng, 10) == 0;
    const int n_phr = static_cast<int>(uniform_below(rng, crowded ? 20 : 5));
    for (int k = 0; k < n_phr; ++k) {
      const int len = 1 + static_cast<int>(uniform_below(rng, 10));
      PhrasePlacement pp;
      pp.phrase_index = next_index++;
      for (int j = 0; j < len; ++j) {
        pp.tokens.push_back(8 + static_cast<int>(uniform_below(rng, 50)));
        pp.positions.push_back(static_cast<int>(uniform_below(rng, kPositionClasses)));
      }
      sp.phrases.push_back(std::move(pp));
    }
    sp.length = static_cast<int>(uniform_below(rng, kPositionClasses));
    p.sentences.push_back(std::move(sp));
  }
  return p;
}

TokenIds random_sequence(Rng& rng, std::size_t max_len, int vocab) {
  TokenIds s(1 + uniform_below(rng, max_len));
  for (int& x : s) x = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(vocab)));
  return s;
}

}  // namespace pairgen::oracle
