#include "pairgen/vocab.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pairgen {

namespace {

const std::array<std::string, kNumSpecialTokens> kSpecialNames = {
    "[PAD]", "[UNK]", "[BOS]", "[EOS]", "[MASK]", "[SEN]", "[BOK]", "[SEP]"};

}  // namespace

Tokens Document::flat_target() const {
  Tokens out;
  for (const auto& s : target) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::size_t Document::target_length() const {
  std::size_t n = 0;
  for (const auto& s : target) n += s.size();
  return n;
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

const std::string& special_token_name(int id) { return kSpecialNames.at(static_cast<std::size_t>(id)); }

Vocabulary::Vocabulary() {
  for (const auto& name : kSpecialNames) add(name);
}

void Vocabulary::add(std::string word) {
  const int id = static_cast<int>(id_to_token_.size());
  token_to_id_.emplace(word, id);
  id_to_token_.push_back(std::move(word));
}

Vocabulary Vocabulary::build(const std::vector<Document>& corpus, int min_count) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  std::map<std::string, long> counts;
  auto count = [&](const Tokens& ts) {
    for (const auto& t : ts) ++counts[t];
  };
  for (const auto& doc : corpus) {
    count(doc.prompt);
    for (const auto& s : doc.target) count(s);
    for (const auto& k : doc.keyphrases) count(k);
  }

  std::vector<std::pair<std::string, long>> ranked;
  for (auto& [word, c] : counts) {
    if (c < min_count) continue;
    if (std::find(kSpecialNames.begin(), kSpecialNames.end(), word) != kSpecialNames.end()) continue;
    ranked.emplace_back(word, c);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (auto& [word, c] : ranked) v.add(word);
  return v;
}

int Vocabulary::id(std::string_view word) const {
  auto it = token_to_id_.find(std::string(word));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view word) const {
  return token_to_id_.count(std::string(word)) > 0;
}

TokenIds Vocabulary::encode(const Tokens& text) const {
  TokenIds ids;
  ids.reserve(text.size());
  for (const auto& w : text) ids.push_back(id(w));
  return ids;
}

Tokens Vocabulary::decode(const TokenIds& ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path.string());
  for (int i = 0; i < size(); ++i) out << id_to_token_[static_cast<std::size_t>(i)] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary: " + path.string());
  Vocabulary v;
  v.token_to_id_.clear();
  v.id_to_token_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw std::runtime_error("malformed vocabulary line: " + line);
    const int id = std::stoi(line.substr(tab + 1));
    if (id != v.size()) throw std::runtime_error("vocabulary ids must be dense and sorted");
    v.add(line.substr(0, tab));
  }
  for (int i = 0; i < kNumSpecialTokens; ++i) {
    if (v.size() <= i || v.id_to_token_[static_cast<std::size_t>(i)] != kSpecialNames[static_cast<std::size_t>(i)])
      throw std::runtime_error("vocabulary is missing reserved tokens");
  }
  return v;
}

}  // namespace pairgen
