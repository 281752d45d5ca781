#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairgen/document.hpp"

namespace pairgen {

// Reserved ids shared by the planner, the generator and the fluency LM.
enum SpecialToken : int {
  kPad = 0,
  kUnk = 1,
  kBos = 2,
  kEos = 3,
  kMask = 4,
  kSen = 5,
  kBok = 6,
  kSep = 7,
};
inline constexpr int kNumSpecialTokens = 8;

inline bool is_special(int id) { return id >= 0 && id < kNumSpecialTokens; }

class Vocabulary {
 public:
  Vocabulary();

  // Words are ranked by descending frequency, ties broken lexicographically.
  static Vocabulary build(const std::vector<Document>& corpus, int min_count);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int id(std::string_view word) const;
  const std::string& token(int id) const;
  bool contains(std::string_view word) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  TokenIds encode(const Tokens& text) const;
  Tokens decode(const TokenIds& ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  void add(std::string word);

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

const std::string& special_token_name(int id);

}  // namespace pairgen
