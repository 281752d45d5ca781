#include "pairgen/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pairgen {

namespace {

std::map<TokenIds, int> ngram_counts(const TokenIds& s, std::size_t n) {
  std::map<TokenIds, int> c;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++c[TokenIds(s.begin() + static_cast<long>(i), s.begin() + static_cast<long>(i + n))];
  return c;
}

}  // namespace

double bleu4(const std::vector<TokenIds>& candidates, const std::vector<TokenIds>& references, bool smooth) {
  if (candidates.size() != references.size()) throw std::invalid_argument("candidate and reference counts differ");
  std::array<double, 4> matched{}, total{};
  double cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += static_cast<double>(candidates[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto c = ngram_counts(candidates[i], n);
      const auto r = ngram_counts(references[i], n);
      for (const auto& [g, k] : c) {
        total[n - 1] += k;
        const auto it = r.find(g);
        if (it != r.end()) matched[n - 1] += std::min(k, it->second);
      }
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    double m = matched[n], t = total[n];
    if (smooth && n > 0) {
      m += 1;
      t += 1;
    }
    if (m == 0 || t == 0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = std::exp(std::min(0.0, 1.0 - ref_len / cand_len));
  return bp * std::exp(log_sum / 4);
}

std::size_t lcs_length(const TokenIds& a, const TokenIds& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenIds& candidate, const TokenIds& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2 * p * r / (p + r);
}

double rouge_l(const std::vector<TokenIds>& candidates, const std::vector<TokenIds>& references) {
  if (candidates.size() != references.size()) throw std::invalid_argument("candidate and reference counts differ");
  if (candidates.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) sum += rouge_l(candidates[i], references[i]);
  return sum / static_cast<double>(candidates.size());
}

PlanMetrics plan_metrics(const ContentPlan& predicted, const ContentPlan& gold) {
  using Key = std::pair<TokenIds, std::size_t>;
  std::map<Key, std::vector<int>> gold_starts;
  std::size_t n_gold = 0, n_pred = 0;
  for (std::size_t s = 0; s < gold.sentences.size(); ++s)
    for (const auto& p : gold.sentences[s].phrases) {
      gold_starts[{p.tokens, s}].push_back(p.start());
      ++n_gold;
    }
  std::size_t hits = 0;
  double abs_err = 0;
  for (std::size_t s = 0; s < predicted.sentences.size(); ++s)
    for (const auto& p : predicted.sentences[s].phrases) {
      ++n_pred;
      auto it = gold_starts.find({p.tokens, s});
      if (it == gold_starts.end() || it->second.empty()) continue;
      ++hits;
      abs_err += std::abs(p.start() - it->second.front());
      it->second.erase(it->second.begin());
    }
  PlanMetrics m;
  if (n_pred > 0 && n_gold > 0 && hits > 0) {
    const double prec = static_cast<double>(hits) / static_cast<double>(n_pred);
    const double rec = static_cast<double>(hits) / static_cast<double>(n_gold);
    m.assignment_f1 = 2 * prec * rec / (prec + rec);
    m.position_mae = abs_err / static_cast<double>(hits);
  }
  return m;
}

TemplateStats template_stats(const std::vector<ContentPlan>& plans) {
  TemplateStats st;
  if (plans.empty()) return st;
  double n_sent = 0, n_phrases = 0, gap_sum = 0, gap_count = 0;
  for (const auto& plan : plans) {
    for (const auto& s : plan.sentences) {
      st.tokens += s.length;
      n_phrases += static_cast<double>(s.phrases.size());
      for (std::size_t i = 1; i < s.phrases.size(); ++i) {
        gap_sum += s.phrases[i].start() - s.phrases[i - 1].end() - 1;
        ++gap_count;
      }
    }
    n_sent += static_cast<double>(plan.sentences.size());
  }
  const auto n = static_cast<double>(plans.size());
  st.tokens /= n;
  st.sentences = n_sent / n;
  st.kp_per_sentence = n_sent > 0 ? n_phrases / n_sent : 0.0;
  if (gap_count > 0) st.kp_distance = gap_sum / gap_count;
  return st;
}

double kp_coverage(const std::vector<TokenIds>& outputs, const std::vector<ContentPlan>& plans) {
  if (outputs.size() != plans.size()) throw std::invalid_argument("outputs and plans differ in count");
  std::size_t found = 0, total = 0;
  for (std::size_t i = 0; i < plans.size(); ++i)
    for (const auto& s : plans[i].sentences)
      for (const auto& p : s.phrases) {
        ++total;
        found += contains_phrase(outputs[i], p.tokens) ? 1 : 0;
      }
  return total == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(total);
}

Json to_json(const PlanMetrics& m) {
  Json j{{"assignment_f1", m.assignment_f1}};
  j["position_mae"] = m.position_mae ? Json(*m.position_mae) : Json(nullptr);
  return j;
}

Json to_json(const TemplateStats& s) {
  Json j{{"tokens", s.tokens}, {"sentences", s.sentences}, {"kp_per_sentence", s.kp_per_sentence}};
  j["kp_distance"] = s.kp_distance ? Json(*s.kp_distance) : Json(nullptr);
  return j;
}

}  // namespace pairgen
