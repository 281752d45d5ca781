#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pairgen/document.hpp"

namespace pairgen {

inline constexpr int kMaxKeyphraseLength = 10;
inline constexpr int kMaxPosition = 127;
inline constexpr int kPositionClasses = kMaxPosition + 1;

// Unordered keyphrase collection m. Phrases keep the order they were given in;
// use canonical_keyphrases() to obtain the surface-form order.
class KeyphraseSet {
 public:
  KeyphraseSet() = default;
  // Throws std::invalid_argument on empty, over-long or duplicate phrases.
  explicit KeyphraseSet(std::vector<TokenIds> phrases);

  const std::vector<TokenIds>& phrases() const { return phrases_; }
  const TokenIds& operator[](std::size_t i) const { return phrases_[i]; }
  std::size_t size() const { return phrases_.size(); }
  bool empty() const { return phrases_.empty(); }

  friend bool operator==(const KeyphraseSet&, const KeyphraseSet&) = default;

 private:
  std::vector<TokenIds> phrases_;
};

// Sorts by surface form ("a b" < "a c") and removes duplicates.
std::vector<Tokens> canonical_keyphrases(std::vector<Tokens> phrases);

struct PhrasePlacement {
  int phrase_index = -1;         // into the KeyphraseSet
  TokenIds tokens;
  std::vector<int> positions;    // one sentence-relative position per token

  int start() const { return positions.empty() ? 0 : positions.front(); }
  int end() const { return positions.empty() ? -1 : positions.back(); }
  friend bool operator==(const PhrasePlacement&, const PhrasePlacement&) = default;
};

struct SentencePlan {
  std::vector<PhrasePlacement> phrases;
  int length = 0;  // the position tagged on the sentence's [SEN]
  bool closed = true;  // false when the plan ended before this sentence's [SEN]
  friend bool operator==(const SentencePlan&, const SentencePlan&) = default;
};

// Keyphrase assignment m' with positions s, stored sentence by sentence.
struct ContentPlan {
  std::vector<SentencePlan> sentences;
  bool terminated = true;  // [EOS] emitted
  int eos_position = 0;

  // Flat m': phrase tokens, [SEN] after each closed sentence, [EOS] if terminated.
  TokenIds assignment() const;
  // Positions aligned 1:1 with assignment().
  std::vector<int> positions() const;
  std::size_t phrase_count() const;

  friend bool operator==(const ContentPlan&, const ContentPlan&) = default;
};

// Rebuilds the sentence view from a flat (assignment, positions) pair by
// greedy longest-match against the not-yet-used phrases of the keyphrase set.
ContentPlan plan_from_flat(const TokenIds& assignment, const std::vector<int>& positions,
                           const KeyphraseSet& keyphrases);

// A planned keyphrase laid out in the target: tokens[start..end] (inclusive).
struct Span {
  int phrase_index = -1;
  int start = 0;
  int end = 0;
  int length() const { return end - start + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Template {
  TokenIds tokens;
  std::vector<Span> spans;        // sorted by start, non-overlapping
  int doc_length = 0;
  std::vector<int> dropped;       // phrase indices cut by truncation
  friend bool operator==(const Template&, const Template&) = default;
};

struct Draft {
  TokenIds tokens;
  std::vector<double> probs;      // model probability of each emitted token
  std::vector<bool> forced;
  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const Draft&, const Draft&) = default;
};

// Does `phrase` occur contiguously anywhere in `seq`?
bool contains_phrase(const TokenIds& seq, const TokenIds& phrase);

}  // namespace pairgen
