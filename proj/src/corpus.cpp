#include "pairgen/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "pairgen/plan.hpp"

namespace pairgen {

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a",     "about", "all",   "also",  "an",    "and",     "are",   "as",    "at",    "be",    "because",
      "been",  "but",   "by",    "can",   "could", "did",     "do",    "does",  "for",   "from",  "had",
      "has",   "have",  "how",   "if",    "in",    "into",    "is",    "it",    "its",   "like",  "many",
      "me",    "more",  "most",  "no",    "not",   "of",      "on",    "one",   "or",    "our",   "should",
      "since", "so",    "some",  "tell",  "than",  "that",    "the",   "their", "them",  "then",  "there",
      "these", "they",  "this",  "those", "to",    "very",    "was",   "we",    "were",  "what",  "when",
      "which", "who",   "why",   "will",  "with",  "without", "would", "you",   "your",  ".",     ",",
      "?",     "!",     ";",     ":"};
  return words;
}

bool is_stopword(std::string_view word) { return stopwords().count(word) != 0; }

void GrammarConfig::validate() const {
  if (n_topics < 1) throw std::invalid_argument("corpus.n_topics must be >= 1");
  if (topic_words < 3) throw std::invalid_argument("corpus.topic_words must be >= 3");
  if (n_topics * topic_words >= vocab_size) throw std::invalid_argument("corpus.vocab_size too small for the topics");
  if (entities_per_topic < 1) throw std::invalid_argument("corpus.entities_per_topic must be >= 1");
  if (focus_entities_min < 1 || focus_entities_max < focus_entities_min || focus_entities_max > entities_per_topic)
    throw std::invalid_argument("corpus.focus_entities range invalid");
  if (sentences_min < 1 || sentences_max < sentences_min) throw std::invalid_argument("corpus.sentences range invalid");
  if (sentence_length_min < 1 || sentence_length_max < sentence_length_min)
    throw std::invalid_argument("corpus.sentence_length range invalid");
  if (target_length_min < 1 || target_length_max < target_length_min)
    throw std::invalid_argument("corpus.target_length range invalid");
  if (!(kp_coverage > 0 && kp_coverage < 1)) throw std::invalid_argument("corpus.kp_coverage must be in (0, 1)");
}

namespace {

// "X" marks a content slot.
const std::vector<std::vector<std::string>>& frames() {
  static const std::vector<std::vector<std::string>> f{
      {"the", "X", "is", "X", "."},
      {"the", "X", "of", "the", "X", "was", "X", "."},
      {"we", "should", "not", "X", "the", "X", "."},
      {"it", "is", "X", "that", "the", "X", "has", "X", "the", "X", "."},
      {"there", "is", "no", "X", "for", "X", "in", "the", "X", "."},
      {"the", "X", "and", "the", "X", "are", "X", "."},
      {"many", "X", "have", "X", "the", "X", "since", "the", "X", "."},
      {"you", "can", "not", "X", "the", "X", "without", "X", "."},
      {"this", "X", "will", "X", "our", "X", "."},
      {"if", "the", "X", "is", "X", ",", "then", "the", "X", "will", "be", "X", "."},
      {"but", "the", "X", "was", "not", "as", "X", "as", "the", "X", "."},
      {"they", "would", "X", "the", "X", "."},
      {"the", "X", ",", "which", "is", "X", ",", "has", "been", "X", "by", "the", "X", "."},
      {"so", "we", "should", "X", "the", "X", "and", "the", "X", "."},
      {"in", "the", "X", ",", "X", "is", "X", "."},
      {"one", "X", "of", "the", "X", "is", "very", "X", "."},
      {"most", "X", "do", "not", "X", "about", "the", "X", "."},
      {"it", "was", "X", "to", "X", "the", "X", "with", "the", "X", "."},
      {"why", "would", "the", "X", "be", "X", "?"},
      {"there", "are", "X", "in", "the", "X", "that", "X", "."},
  };
  return f;
}

const std::vector<std::vector<std::string>>& prompt_frames() {
  static const std::vector<std::vector<std::string>> f{
      {"tell", "me", "about", "the", "N", "N"},
      {"what", "do", "you", "think", "about", "the", "N", "N", "?"},
      {"why", "is", "the", "N", "N", "like", "this", "?"},
      {"should", "we", "have", "more", "N", "N", "?"},
      {"what", "is", "the", "N", "N", "?"},
  };
  return f;
}

const std::vector<std::string>& connectives() {
  static const std::vector<std::string> c{"and", "but", "because", "so"};
  return c;
}

std::vector<std::string> make_words(int n, Rng& rng) {
  static const std::string consonants = "bdfgklmnprstvz";
  static const std::string vowels = "aeiou";
  std::unordered_set<std::string> seen;
  std::vector<std::string> words;
  while (static_cast<int>(words.size()) < n) {
    const int syllables = uniform01(rng) < 0.6 ? 2 : 3;
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += consonants[uniform_below(rng, consonants.size())];
      w += vowels[uniform_below(rng, vowels.size())];
    }
    if (is_stopword(w) || !seen.insert(w).second) continue;
    words.push_back(std::move(w));
  }
  return words;
}

// Cumulative Zipf(1) weights over n ranks.
std::vector<double> zipf_cdf(std::size_t n) {
  std::vector<double> cdf(n);
  double acc = 0;
  for (std::size_t r = 0; r < n; ++r) cdf[r] = acc += 1.0 / static_cast<double>(r + 1);
  for (double& c : cdf) c /= acc;
  return cdf;
}

std::size_t sample_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

struct Topic {
  std::vector<std::string> name;
  std::vector<Tokens> entities;
  std::vector<std::size_t> preferred;  // indices into the generic words
};

constexpr std::array<double, 4> kEntityLengthWeights{0.35, 0.35, 0.2, 0.1};

double mean_entity_length() {
  double m = 0;
  for (std::size_t i = 0; i < kEntityLengthWeights.size(); ++i) m += static_cast<double>(i + 1) * kEntityLengthWeights[i];
  return m;
}

}  // namespace

std::vector<Document> synth_corpus(const GrammarConfig& cfg, int n_docs, Rng& rng) {
  cfg.validate();
  if (n_docs < 0) throw std::invalid_argument("negative document count");
  const auto words = make_words(cfg.vocab_size, rng);
  const std::size_t topic_total = static_cast<std::size_t>(cfg.n_topics * cfg.topic_words);
  const std::vector<std::string> generic(words.begin() + static_cast<long>(topic_total), words.end());
  const auto generic_cdf = zipf_cdf(generic.size());
  const std::size_t n_preferred = std::min<std::size_t>(40, generic.size());
  const auto preferred_cdf = zipf_cdf(n_preferred);

  std::vector<Topic> topics(static_cast<std::size_t>(cfg.n_topics));
  for (int t = 0; t < cfg.n_topics; ++t) {
    auto& topic = topics[static_cast<std::size_t>(t)];
    const auto first = words.begin() + static_cast<long>(t) * cfg.topic_words;
    const std::vector<std::string> pool(first + 2, first + cfg.topic_words);
    topic.name = {first[0], first[1]};
    std::set<Tokens> seen;
    int attempts = 0;
    while (static_cast<int>(topic.entities.size()) < cfg.entities_per_topic && attempts++ < 10000) {
      double u = uniform01(rng);
      std::size_t len = 1;
      for (double w : kEntityLengthWeights) {
        if (u < w) break;
        u -= w;
        ++len;
      }
      len = std::min(len, kEntityLengthWeights.size());
      Tokens e;
      for (std::size_t i = 0; i < len; ++i) e.push_back(pool[uniform_below(rng, pool.size())]);
      if (seen.insert(e).second) topic.entities.push_back(std::move(e));
    }
    std::vector<std::size_t> perm(generic.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < n_preferred; ++i) std::swap(perm[i], perm[i + uniform_below(rng, perm.size() - i)]);
    topic.preferred.assign(perm.begin(), perm.begin() + static_cast<long>(n_preferred));
  }

  // share of content slots that hold an entity so that entity tokens make up
  // kp_coverage of all content tokens
  const double L = mean_entity_length();
  const double p_entity = cfg.kp_coverage / (L * (1 - cfg.kp_coverage) + cfg.kp_coverage);

  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(n_docs));
  for (int d = 0; d < n_docs; ++d) {
    const auto& topic = topics[uniform_below(rng, topics.size())];
    const int n_focus = cfg.focus_entities_min +
                        static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.focus_entities_max - cfg.focus_entities_min + 1)));
    std::vector<std::size_t> order(topic.entities.size());
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < n_focus; ++i)
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i) + uniform_below(rng, order.size() - static_cast<std::size_t>(i))]);
    const std::vector<std::size_t> focus(order.begin(), order.begin() + n_focus);

    Document doc;
    std::size_t name_i = 0;
    for (const auto& w : prompt_frames()[uniform_below(rng, prompt_frames().size())])
      doc.prompt.push_back(w == "N" ? topic.name[name_i++ % 2] : w);

    auto fill_frame = [&](const std::vector<std::string>& frame, Tokens& out, std::vector<Tokens>& used) {
      for (const auto& w : frame) {
        if (w != "X") {
          out.push_back(w);
          continue;
        }
        if (uniform01(rng) < p_entity) {
          const Tokens& e = uniform01(rng) < 0.8 ? topic.entities[focus[uniform_below(rng, focus.size())]]
                                                 : topic.entities[uniform_below(rng, topic.entities.size())];
          out.insert(out.end(), e.begin(), e.end());
          used.push_back(e);
        } else if (uniform01(rng) < 0.5) {
          out.push_back(generic[topic.preferred[sample_cdf(preferred_cdf, rng)]]);
        } else {
          out.push_back(generic[sample_cdf(generic_cdf, rng)]);
        }
      }
    };

    for (int attempt = 0; attempt < 200; ++attempt) {
      doc.target.clear();
      std::vector<Tokens> used;
      const int n_sent = cfg.sentences_min +
                         static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(cfg.sentences_max - cfg.sentences_min + 1)));
      std::size_t total = 0;
      for (int s = 0; s < n_sent; ++s) {
        Tokens sent;
        for (int tries = 0; tries < 50; ++tries) {
          sent.clear();
          std::vector<Tokens> sent_used;
          fill_frame(frames()[uniform_below(rng, frames().size())], sent, sent_used);
          if (uniform01(rng) < 0.25) {
            sent.back() = ",";
            sent.push_back(connectives()[uniform_below(rng, connectives().size())]);
            fill_frame(frames()[uniform_below(rng, frames().size())], sent, sent_used);
          }
          const int len = static_cast<int>(sent.size());
          if (len >= cfg.sentence_length_min && len <= cfg.sentence_length_max) {
            used.insert(used.end(), sent_used.begin(), sent_used.end());
            break;
          }
        }
        total += sent.size();
        doc.target.push_back(std::move(sent));
      }
      if (static_cast<int>(total) >= cfg.target_length_min && static_cast<int>(total) <= cfg.target_length_max) {
        doc.keyphrases = canonical_keyphrases(used);
        break;
      }
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

WordCounts count_target_words(const Document& doc) {
  WordCounts c;
  for (const auto& s : doc.target)
    for (const auto& w : s) ++c[w];
  return c;
}

WordCounts count_target_words(const std::vector<Document>& docs) {
  WordCounts c;
  for (const auto& d : docs)
    for (const auto& s : d.target)
      for (const auto& w : s) ++c[w];
  return c;
}

namespace {

double log_likelihood(double p, long k, long n) {
  double out = 0;
  if (k > 0) out += static_cast<double>(k) * std::log(p);
  if (n - k > 0) out += static_cast<double>(n - k) * std::log1p(-p);
  return out;
}

long total(const WordCounts& c) {
  long n = 0;
  for (const auto& [w, k] : c) n += k;
  return n;
}

}  // namespace

double llr_statistic(long k_fg, long n_fg, long k_bg, long n_bg) {
  if (n_fg <= 0 || n_bg <= 0) throw std::invalid_argument("total counts must be positive");
  const double p1 = static_cast<double>(k_fg) / static_cast<double>(n_fg);
  const double p2 = static_cast<double>(k_bg) / static_cast<double>(n_bg);
  if (p1 <= p2) return 0.0;
  const double p = static_cast<double>(k_fg + k_bg) / static_cast<double>(n_fg + n_bg);
  const double stat = 2 * (log_likelihood(p1, k_fg, n_fg) + log_likelihood(p2, k_bg, n_bg) -
                           log_likelihood(p, k_fg, n_fg) - log_likelihood(p, k_bg, n_bg));
  return std::max(0.0, stat);
}

std::set<std::string> topic_signatures(const WordCounts& foreground, const WordCounts& background, double threshold) {
  const long n_fg = total(foreground), n_bg = total(background);
  std::set<std::string> out;
  for (const auto& [w, k] : foreground) {
    const auto it = background.find(w);
    const long k_bg = it == background.end() ? 0 : it->second;
    if (llr_statistic(k, n_fg, k_bg, n_bg) > threshold) out.insert(w);
  }
  return out;
}

WordCounts subtract_counts(const WordCounts& background, const WordCounts& own) {
  WordCounts out = background;
  for (const auto& [w, k] : own) {
    auto it = out.find(w);
    if (it == out.end()) continue;
    it->second -= k;
    if (it->second <= 0) out.erase(it);
  }
  return out;
}

std::vector<Tokens> extract_keyphrases(const Document& doc, const std::set<std::string>& signatures, int max_len) {
  std::vector<Tokens> out;
  for (const auto& sent : doc.target) {
    std::size_t i = 0;
    while (i < sent.size()) {
      if (is_stopword(sent[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      bool salient = false;
      while (j < sent.size() && !is_stopword(sent[j])) salient |= signatures.count(sent[j++]) != 0;
      if (salient && static_cast<int>(j - i) <= max_len)
        out.emplace_back(sent.begin() + static_cast<long>(i), sent.begin() + static_cast<long>(j));
      i = j;
    }
  }
  return canonical_keyphrases(std::move(out));
}

SplitIndices split_corpus(const std::vector<Document>& docs, const std::array<double, 3>& fractions,
                          std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  std::map<Tokens, std::vector<std::size_t>> by_target;
  for (std::size_t i = 0; i < docs.size(); ++i) by_target[docs[i].flat_target()].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(by_target.size());
  // order groups by first document index so the shuffle input does not depend on map ordering
  for (auto& [t, idx] : by_target) groups.push_back(std::move(idx));
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = groups.size(); i > 1; --i) std::swap(groups[i - 1], groups[uniform_below(rng, i)]);

  const auto g = static_cast<double>(groups.size());
  const auto n_train = static_cast<std::size_t>(std::lround(fractions[0] * g));
  const auto n_valid = std::min(groups.size() - n_train, static_cast<std::size_t>(std::lround(fractions[1] * g)));
  SplitIndices out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& dst = i < n_train ? out.train : i < n_train + n_valid ? out.valid : out.test;
    dst.insert(dst.end(), groups[i].begin(), groups[i].end());
  }
  return out;
}

double keyphrase_coverage(const std::vector<Document>& docs) {
  long content = 0, covered = 0;
  for (const auto& doc : docs) {
    for (const auto& sent : doc.target) {
      std::vector<char> in_kp(sent.size(), 0);
      for (const auto& kp : doc.keyphrases) {
        if (kp.empty() || kp.size() > sent.size()) continue;
        for (std::size_t o = 0; o + kp.size() <= sent.size(); ++o)
          if (std::equal(kp.begin(), kp.end(), sent.begin() + static_cast<long>(o)))
            std::fill(in_kp.begin() + static_cast<long>(o), in_kp.begin() + static_cast<long>(o + kp.size()), 1);
      }
      for (std::size_t i = 0; i < sent.size(); ++i) {
        if (is_stopword(sent[i])) continue;
        ++content;
        covered += in_kp[i];
      }
    }
  }
  return content == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(content);
}

CorpusStats corpus_stats(const std::vector<Document>& docs) {
  CorpusStats s;
  s.documents = docs.size();
  if (docs.empty()) return s;
  for (const auto& d : docs) {
    s.prompt_length += static_cast<double>(d.prompt.size());
    s.target_length += static_cast<double>(d.target_length());
    s.sentences += static_cast<double>(d.target.size());
    s.keyphrases += static_cast<double>(d.keyphrases.size());
  }
  const auto n = static_cast<double>(docs.size());
  s.prompt_length /= n;
  s.target_length /= n;
  s.sentences /= n;
  s.keyphrases /= n;
  s.kp_coverage = keyphrase_coverage(docs);
  return s;
}

Json document_to_json(const Document& doc) {
  return Json{{"prompt", doc.prompt}, {"target", doc.target}, {"keyphrases", doc.keyphrases}};
}

Document document_from_json(const Json& j) {
  Document d;
  try {
    d.prompt = j.at("prompt").get<Tokens>();
    d.target = j.at("target").get<std::vector<Tokens>>();
    if (j.contains("keyphrases")) d.keyphrases = j.at("keyphrases").get<std::vector<Tokens>>();
  } catch (const Json::exception& e) {
    throw std::runtime_error(std::string("malformed document: ") + e.what());
  }
  return d;
}

void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::vector<Json> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) rows.push_back(document_to_json(d));
  write_jsonl(path, rows);
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  for (const auto& row : read_jsonl(path)) docs.push_back(document_from_json(row));
  return docs;
}

}  // namespace pairgen
