#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <set>

#include "pairgen/corpus.hpp"
#include "pairgen/eval.hpp"
#include "pairgen/planner.hpp"
#include "pairgen/vocab.hpp"
#include "oracles.hpp"

using namespace pairgen;

namespace {

double binomial_log_pmf(long k, long n, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
         (n - k) * std::log1p(-p);
}

}  // namespace

TEST(Bleu, HandDerivedFixture) {
  // a b c d e vs a b c d f: precisions 4/5, 3/4, 2/3, 1/2.
  const double got = bleu4({{1, 2, 3, 4, 5}}, {{1, 2, 3, 4, 6}});
  EXPECT_NEAR(got, std::pow(0.2, 0.25), 1e-12);
  EXPECT_NEAR(got, 0.6687, 1e-4);
}

TEST(Bleu, IdentityAndZero) {
  EXPECT_DOUBLE_EQ(bleu4({{1, 2, 3, 4, 5}}, {{1, 2, 3, 4, 5}}), 1.0);
  EXPECT_DOUBLE_EQ(bleu4({{1, 2, 3, 4}}, {{4, 3, 2, 1}}), 0.0);
  EXPECT_THROW(bleu4({{1}}, {}), std::invalid_argument);
}

TEST(Bleu, BrevityPenalty) {
  // Candidate is a perfect prefix of a reference twice as long.
  EXPECT_NEAR(bleu4({{1, 2, 3, 4}}, {{1, 2, 3, 4, 5, 6, 7, 8}}), std::exp(1 - 2.0), 1e-12);
}

TEST(Bleu, MatchesBruteForceOracle) {
  Rng rng(17);
  std::vector<TokenIds> cands, refs;
  for (int i = 0; i < 500; ++i) {
    cands.push_back(oracle::random_sequence(rng, 14, 4));
    refs.push_back(oracle::random_sequence(rng, 14, 4));
    for (bool smooth : {false, true})
      ASSERT_NEAR(bleu4({cands.back()}, {refs.back()}, smooth), oracle::bleu({cands.back()}, {refs.back()}, smooth), 1e-9)
          << "pair " << i;
  }
  EXPECT_NEAR(bleu4(cands, refs), oracle::bleu(cands, refs, false), 1e-9);
  EXPECT_NEAR(bleu4(cands, refs, true), oracle::bleu(cands, refs, true), 1e-9);
}

TEST(Rouge, HandDerivedFixture) {
  EXPECT_NEAR(rouge_l(TokenIds{1, 2, 3}, TokenIds{1, 9, 3}), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(rouge_l(TokenIds{1, 2}, TokenIds{1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l(TokenIds{1, 2}, TokenIds{3, 4}), 0.0);
}

TEST(Rouge, LcsMatchesExhaustiveSearch) {
  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    const TokenIds a = oracle::random_sequence(rng, 10, 4), b = oracle::random_sequence(rng, 10, 4);
    ASSERT_EQ(lcs_length(a, b), oracle::lcs(a, b));
    ASSERT_NEAR(rouge_l(a, b), oracle::rouge_l(a, b), 1e-12);
  }
}

TEST(PlanMetrics, IdentityEmptyAndOffset) {
  const KeyphraseSet kps({{9, 10}, {11}});
  const ContentPlan gold = extract_oracle_plan({{8, 9, 10, 12}, {11, 13}}, kps);
  const PlanMetrics same = plan_metrics(gold, gold);
  EXPECT_DOUBLE_EQ(same.assignment_f1, 1.0);
  EXPECT_DOUBLE_EQ(*same.position_mae, 0.0);

  const PlanMetrics empty = plan_metrics(ContentPlan{}, gold);
  EXPECT_DOUBLE_EQ(empty.assignment_f1, 0.0);
  EXPECT_FALSE(empty.position_mae.has_value());

  ContentPlan shifted = gold;
  for (int& p : shifted.sentences[0].phrases[0].positions) p += 3;
  const PlanMetrics off = plan_metrics(shifted, gold);
  EXPECT_DOUBLE_EQ(off.assignment_f1, 1.0);
  EXPECT_DOUBLE_EQ(*off.position_mae, 1.5);  // 3 on one of two matched phrases
}

TEST(TemplateStats, HandTally) {
  ContentPlan a;
  a.sentences.push_back(SentencePlan{{PhrasePlacement{0, {9, 10}, {1, 2}}, PhrasePlacement{1, {11}, {5}}}, 8, true});
  a.sentences.push_back(SentencePlan{{}, 4, true});
  ContentPlan b;
  b.sentences.push_back(SentencePlan{{PhrasePlacement{0, {9}, {0}}}, 6, true});
  const TemplateStats s = template_stats({a, b});
  EXPECT_DOUBLE_EQ(s.tokens, 9.0);              // (12 + 6) / 2
  EXPECT_DOUBLE_EQ(s.sentences, 1.5);           // (2 + 1) / 2
  EXPECT_DOUBLE_EQ(s.kp_per_sentence, 1.0);     // 3 phrases over 3 sentences
  ASSERT_TRUE(s.kp_distance.has_value());
  EXPECT_DOUBLE_EQ(*s.kp_distance, 2.0);        // gap positions 3 and 4
  EXPECT_FALSE(template_stats({b}).kp_distance.has_value());
}

TEST(KpCoverage, RatioOfPresentPhrases) {
  ContentPlan p;
  p.sentences.push_back(SentencePlan{{PhrasePlacement{0, {9, 10}, {0, 1}}, PhrasePlacement{1, {11}, {3}}}, 5, true});
  p.sentences.push_back(SentencePlan{{PhrasePlacement{2, {12}, {0}}, PhrasePlacement{3, {13, 14}, {2, 3}}}, 5, true});
  EXPECT_DOUBLE_EQ(kp_coverage({{9, 10, 8, 11, 8, 12, 8, 13}}, {p}), 0.75);
  EXPECT_DOUBLE_EQ(kp_coverage({{}}, {p}), 0.0);
}

TEST(Llr, FixtureMatchesBinomialLikelihoods) {
  const double direct = 2 * (binomial_log_pmf(20, 100, 0.2) + binomial_log_pmf(30, 1000, 0.03) -
                             binomial_log_pmf(20, 100, 50.0 / 1100) - binomial_log_pmf(30, 1000, 50.0 / 1100));
  EXPECT_NEAR(llr_statistic(20, 100, 30, 1000), direct, 1e-9);
  EXPECT_NEAR(llr_statistic(20, 100, 30, 1000), 37.231457101935376, 1e-9);
}

TEST(Llr, EqualRatesGiveZero) {
  EXPECT_DOUBLE_EQ(llr_statistic(10, 100, 100, 1000), 0.0);
  EXPECT_DOUBLE_EQ(llr_statistic(1, 100, 100, 1000), 0.0);
  const WordCounts same{{"x", 3}, {"y", 5}};
  EXPECT_TRUE(topic_signatures(same, same, 0.5).empty());
}

TEST(Llr, RaisingThresholdNeverAddsWords) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    WordCounts fg, bg;
    for (int w = 0; w < 40; ++w) {
      fg["w" + std::to_string(w)] = static_cast<long>(uniform_below(rng, 20));
      bg["w" + std::to_string(w)] = 1 + static_cast<long>(uniform_below(rng, 200));
    }
    std::set<std::string> prev = topic_signatures(fg, bg, 0.0);
    for (double th : {1.0, 3.84, 6.63, 10.83, 20.0, 50.0}) {
      const auto cur = topic_signatures(fg, bg, th);
      for (const auto& w : cur) ASSERT_TRUE(prev.count(w));
      prev = cur;
    }
  }
}

TEST(Extraction, MaximalSignatureRuns) {
  Document d;
  d.target = {{"the", "solar", "tariff", "plan", "is", "bad", "."},
              {"we", "like", "solar", "tariff", "plan", "and", "wind", "."},
              {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "tariff", "."}};
  const std::set<std::string> sigs{"tariff", "wind"};
  // Runs: [solar tariff plan] [bad] | [solar tariff plan] [wind] | 11-token run (too long).
  EXPECT_EQ(extract_keyphrases(d, sigs, 10), (std::vector<Tokens>{{"solar", "tariff", "plan"}, {"wind"}}));
  EXPECT_TRUE(extract_keyphrases(d, {}, 10).empty());
}

TEST(Extraction, ElevenTokenRunDiscarded) {
  Document d;
  d.target = {{"a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9", "a10", "a11", "."}};
  EXPECT_TRUE(extract_keyphrases(d, {"a1"}, 10).empty());
  EXPECT_EQ(extract_keyphrases(d, {"a1"}, 11).size(), 1u);
}

TEST(Synth, StructureCoverageAndDeterminism) {
  GrammarConfig cfg;
  Rng a(99), b(99);
  const auto docs = synth_corpus(cfg, 600, a);
  EXPECT_EQ(docs, synth_corpus(cfg, 600, b));
  for (const auto& d : docs) {
    ASSERT_GE(d.target.size(), 3u);
    ASSERT_FALSE(d.prompt.empty());
    for (const auto& k : d.keyphrases) {
      bool found = false;
      for (const auto& s : d.target)
        for (std::size_t i = 0; i + k.size() <= s.size() && !found; ++i)
          found = std::equal(k.begin(), k.end(), s.begin() + static_cast<long>(i));
      ASSERT_TRUE(found);
    }
  }
  const double cov = keyphrase_coverage(docs);
  EXPECT_GT(cov, 0.20);
  EXPECT_LT(cov, 0.40);
}

TEST(Synth, ExtractedPhrasesAlwaysYieldOraclePlans) {
  GrammarConfig cfg;
  Rng rng(4);
  const auto docs = synth_corpus(cfg, 300, rng);
  const WordCounts bg = count_target_words(docs);
  Vocabulary vocab = Vocabulary::build(docs, 1);
  int with_phrases = 0;
  for (const auto& d : docs) {
    const WordCounts own = count_target_words(d);
    const auto kps = extract_keyphrases(d, topic_signatures(own, subtract_counts(bg, own), 10.83));
    if (kps.empty()) continue;
    ++with_phrases;
    std::vector<TokenIds> sentences;
    for (const auto& s : d.target) sentences.push_back(vocab.encode(s));
    std::vector<TokenIds> ids;
    for (const auto& k : kps) ids.push_back(vocab.encode(k));
    ASSERT_NO_THROW(extract_oracle_plan(sentences, KeyphraseSet(ids)));
  }
  EXPECT_GT(with_phrases, 250);
}

TEST(Split, SizesPartitionAndDeterminism) {
  GrammarConfig cfg;
  Rng rng(12);
  const auto docs = synth_corpus(cfg, 1000, rng);
  const auto s = split_corpus(docs, {0.75, 0.125, 0.125}, 7);
  EXPECT_EQ(s.train.size(), 750u);
  EXPECT_EQ(s.valid.size(), 125u);
  EXPECT_EQ(s.test.size(), 125u);
  std::vector<int> seen(docs.size(), 0);
  for (const auto* part : {&s.train, &s.valid, &s.test})
    for (auto i : *part) ++seen[i];
  for (int c : seen) ASSERT_EQ(c, 1);
  const auto again = split_corpus(docs, {0.75, 0.125, 0.125}, 7);
  EXPECT_EQ(again.test, s.test);
  EXPECT_THROW(split_corpus(docs, {0.5, 0.2, 0.2}, 7), std::invalid_argument);
}

TEST(Split, SharedTargetsStayTogether) {
  std::vector<Document> docs;
  for (int i = 0; i < 40; ++i) docs.push_back(Document{{"p" + std::to_string(i)}, {{"t" + std::to_string(i % 10)}}, {}});
  const auto s = split_corpus(docs, {0.6, 0.2, 0.2}, 3);
  std::map<std::string, int> part;
  auto mark = [&](const std::vector<std::size_t>& idx, int p) {
    for (auto i : idx) {
      const auto& t = docs[i].target[0][0];
      if (part.count(t)) ASSERT_EQ(part[t], p);
      part[t] = p;
    }
  };
  mark(s.train, 0);
  mark(s.valid, 1);
  mark(s.test, 2);
}

TEST(CorpusIo, JsonRoundTrip) {
  const Document d{{"x", "y"}, {{"a", "b", "."}, {"c", "."}}, {{"a", "b"}}};
  EXPECT_EQ(document_from_json(document_to_json(d)), d);
  const std::string path = testing::TempDir() + "/corpus_roundtrip.jsonl";
  save_corpus(path, {d, d});
  EXPECT_EQ(load_corpus(path), (std::vector<Document>{d, d}));
}
