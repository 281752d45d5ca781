#pragma once

#include <string>
#include <vector>

namespace pairgen {

using Tokens = std::vector<std::string>;
using TokenIds = std::vector<int>;

// A prompt, a multi-sentence target and the keyphrases that occur in it.
struct Document {
  Tokens prompt;
  std::vector<Tokens> target;  // one entry per sentence
  std::vector<Tokens> keyphrases;

  Tokens flat_target() const;
  std::size_t target_length() const;

  friend bool operator==(const Document&, const Document&) = default;
};

std::string join(const Tokens& tokens, std::string_view sep = " ");

}  // namespace pairgen
