#include "pairgen/templates.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

namespace pairgen {

namespace {

void set_consecutive(PhrasePlacement& p, int start) {
  for (std::size_t j = 0; j < p.positions.size(); ++j) p.positions[j] = start + static_cast<int>(j);
}

}  // namespace

ContentPlan retokenize_plan(const ContentPlan& plan) { return plan; }

ContentPlan correct_plan(const ContentPlan& raw) {
  ContentPlan plan = raw;
  for (auto& s : plan.sentences) {
    int prev_end = -1;
    for (auto& p : s.phrases) {
      int start = p.start();
      if (start <= prev_end) start = prev_end + 1;
      set_consecutive(p, start);
      prev_end = p.end();
    }
  }
  plan = retokenize_plan(plan);

  constexpr int kLast = kMaxPosition - 1;
  for (auto& s : plan.sentences) {
    int total = 0;
    std::size_t fit = 0;
    while (fit < s.phrases.size() && total + static_cast<int>(s.phrases[fit].tokens.size()) <= kMaxPosition)
      total += static_cast<int>(s.phrases[fit++].tokens.size());
    s.phrases.resize(fit);

    int limit = kLast;
    for (auto it = s.phrases.rbegin(); it != s.phrases.rend(); ++it) {
      if (it->end() > limit) set_consecutive(*it, limit - static_cast<int>(it->tokens.size()) + 1);
      limit = it->start() - 1;
    }
    if (!s.phrases.empty()) s.length = std::max(s.length, s.phrases.back().end() + 1);
    s.length = std::clamp(s.length, 0, kMaxPosition);
  }
  plan.eos_position = std::clamp(plan.eos_position, 0, kMaxPosition);
  return plan;
}

Template build_template(const ContentPlan& plan, int max_target_len) {
  Template t;
  int offset = 0;
  for (const auto& s : plan.sentences) offset += s.length;
  t.doc_length = std::min(offset, max_target_len);
  t.tokens.assign(static_cast<std::size_t>(t.doc_length), kMask);
  offset = 0;
  for (const auto& s : plan.sentences) {
    for (const auto& p : s.phrases) {
      const int start = offset + p.start();
      const int end = offset + p.end();
      if (end >= t.doc_length) {
        t.dropped.push_back(p.phrase_index);
        continue;
      }
      std::copy(p.tokens.begin(), p.tokens.end(), t.tokens.begin() + start);
      t.spans.push_back({p.phrase_index, start, end});
    }
    offset += s.length;
  }
  return t;
}

Template light_template() {
  Template t;
  t.tokens = {kMask};
  t.doc_length = 1;
  return t;
}

MaskedTemplate mask_low_confidence(const Draft& draft, const Template& base, int n) {
  MaskedTemplate out;
  Template& t = out.tmpl;
  t.tokens = draft.tokens;
  t.doc_length = static_cast<int>(draft.size());
  t.dropped = base.dropped;
  std::vector<char> in_span(draft.size(), 0);
  for (const auto& sp : base.spans) {
    if (sp.end >= t.doc_length) continue;
    for (int i = sp.start; i <= sp.end; ++i) {
      t.tokens[static_cast<std::size_t>(i)] = base.tokens[static_cast<std::size_t>(i)];
      in_span[static_cast<std::size_t>(i)] = 1;
    }
    t.spans.push_back(sp);
  }

  std::vector<int> free;
  for (int i = 0; i < t.doc_length; ++i)
    if (!in_span[static_cast<std::size_t>(i)]) free.push_back(i);
  std::stable_sort(free.begin(), free.end(), [&](int a, int b) {
    return draft.probs[static_cast<std::size_t>(a)] < draft.probs[static_cast<std::size_t>(b)];
  });
  const int count = std::max(0, n);
  out.clamped = count > static_cast<int>(free.size());
  free.resize(std::min(free.size(), static_cast<std::size_t>(count)));
  std::sort(free.begin(), free.end());
  for (int i : free) t.tokens[static_cast<std::size_t>(i)] = kMask;
  out.masked = std::move(free);
  return out;
}

std::string render_template(const Template& t, const Vocabulary& vocab) {
  std::vector<const Span*> opening(t.tokens.size(), nullptr), closing(t.tokens.size(), nullptr);
  for (const auto& sp : t.spans) {
    opening[static_cast<std::size_t>(sp.start)] = &sp;
    closing[static_cast<std::size_t>(sp.end)] = &sp;
  }
  std::string out;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    if (i) out += ' ';
    if (opening[i]) out += '[';
    out += t.tokens[i] == kMask ? std::string("_") : vocab.token(t.tokens[i]);
    if (closing[i]) out += ']';
  }
  return out;
}

std::string template_sidecar(const Template& t) {
  nlohmann::json j;
  j["doc_length"] = t.doc_length;
  j["spans"] = nlohmann::json::array();
  for (const auto& sp : t.spans) j["spans"].push_back({{"phrase", sp.phrase_index}, {"start", sp.start}, {"end", sp.end}});
  j["dropped"] = t.dropped;
  return j.dump();
}

}  // namespace pairgen
