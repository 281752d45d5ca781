#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pairgen/document.hpp"
#include "pairgen/jsonl.hpp"
#include "pairgen/rng.hpp"

namespace pairgen {

// Built-in function words and punctuation; everything else is a content word.
const std::set<std::string, std::less<>>& stopwords();
bool is_stopword(std::string_view word);

struct GrammarConfig {
  int vocab_size = 2000;       // content words (topic + generic)
  int n_topics = 40;
  int topic_words = 30;        // per topic
  int entities_per_topic = 25;
  int focus_entities_min = 3;  // entities a document keeps returning to
  int focus_entities_max = 6;
  int sentences_min = 3;
  int sentences_max = 8;
  int sentence_length_min = 5;
  int sentence_length_max = 24;
  int target_length_min = 40;
  int target_length_max = 120;
  double kp_coverage = 0.30;   // expected share of content words inside entity phrases
  void validate() const;
};

// Topic-driven documents: the prompt names the topic, sentences are frames of
// function words around content slots filled with the topic's entity phrases
// or Zipf-distributed generic words. keyphrases = the entity phrases used.
std::vector<Document> synth_corpus(const GrammarConfig& cfg, int n_docs, Rng& rng);

using WordCounts = std::map<std::string, long, std::less<>>;

WordCounts count_target_words(const Document& doc);
WordCounts count_target_words(const std::vector<Document>& docs);

// -2 ln(lambda) of the binomial test "foreground rate equals background rate"
// against "foreground rate exceeds it"; 0 when the foreground rate is not higher.
double llr_statistic(long k_fg, long n_fg, long k_bg, long n_bg);

std::set<std::string> topic_signatures(const WordCounts& foreground, const WordCounts& background, double threshold);

// Background for one document: the background counts minus the document's own
// when it belongs to the background corpus.
WordCounts subtract_counts(const WordCounts& background, const WordCounts& own);

// Maximal runs of content words inside one sentence that contain a signature
// word, at most max_len tokens, deduplicated, in surface order.
std::vector<Tokens> extract_keyphrases(const Document& doc, const std::set<std::string>& signatures, int max_len = 10);

struct SplitIndices {
  std::vector<std::size_t> train, valid, test;
};

// Documents sharing a target stay together; groups are shuffled with the seed
// and cut at round(f0 * G) and round(f1 * G).
SplitIndices split_corpus(const std::vector<Document>& docs, const std::array<double, 3>& fractions,
                          std::uint64_t seed);

// Fraction of target content-word tokens lying inside an occurrence of one of
// the document's keyphrases.
double keyphrase_coverage(const std::vector<Document>& docs);

struct CorpusStats {
  std::size_t documents = 0;
  double prompt_length = 0;
  double target_length = 0;
  double sentences = 0;
  double keyphrases = 0;
  double kp_coverage = 0;
};
CorpusStats corpus_stats(const std::vector<Document>& docs);

Json document_to_json(const Document& doc);
Document document_from_json(const Json& j);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);
std::vector<Document> load_corpus(const std::filesystem::path& path);

}  // namespace pairgen
