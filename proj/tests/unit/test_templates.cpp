#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "pairgen/rng.hpp"
#include "pairgen/templates.hpp"
#include "pairgen/vocab.hpp"
#include "oracles.hpp"

using namespace pairgen;

namespace {

PhrasePlacement placed(int index, TokenIds tokens, std::vector<int> positions) {
  return PhrasePlacement{index, std::move(tokens), std::move(positions)};
}

ContentPlan one_sentence(std::vector<PhrasePlacement> phrases, int length) {
  ContentPlan p;
  p.sentences.push_back(SentencePlan{std::move(phrases), length, true});
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CorrectPlan, SpreadPhraseBecomesConsecutive) {
  const auto fixed = correct_plan(one_sentence({placed(0, {10, 11}, {4, 7})}, 9));
  EXPECT_EQ(fixed.sentences[0].phrases[0].positions, (std::vector<int>{4, 5}));
}

TEST(CorrectPlan, OverlappingPhraseMovesRightAfterPrevious) {
  // KP1 occupies 3..4, so KP2 predicted at 2 starts at 5.
  const auto fixed = correct_plan(one_sentence({placed(0, {10, 11}, {3, 4}), placed(1, {12}, {2})}, 9));
  EXPECT_EQ(fixed.sentences[0].phrases[1].positions, (std::vector<int>{5}));
}

TEST(CorrectPlan, ValidPlanUnchanged) {
  const auto plan = one_sentence({placed(0, {10, 11}, {1, 2}), placed(1, {12}, {6})}, 9);
  EXPECT_EQ(correct_plan(plan), plan);
}

TEST(CorrectPlan, LengthGrowsToCoverLastPhrase) {
  const auto fixed = correct_plan(one_sentence({placed(0, {10, 11, 12}, {6, 0, 0})}, 2));
  EXPECT_EQ(fixed.sentences[0].length, 9);
}

TEST(CorrectPlan, PhrasesPulledBackFromTheCap) {
  const auto fixed = correct_plan(one_sentence({placed(0, {10}, {120}), placed(1, {11, 12}, {126, 127})}, 127));
  const auto& s = fixed.sentences[0];
  EXPECT_EQ(s.phrases[1].positions, (std::vector<int>{125, 126}));
  EXPECT_EQ(s.phrases[0].positions, (std::vector<int>{120}));
  EXPECT_EQ(s.length, 127);
}

TEST(CorrectPlan, FuzzedPlansAreValidAndFixedPoints) {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const ContentPlan raw = oracle::random_raw_plan(rng);
    const ContentPlan fixed = correct_plan(raw);
    const std::string why = oracle::plan_violation(raw, fixed);
    ASSERT_EQ(why, "") << "trial " << trial;
    ASSERT_EQ(correct_plan(fixed), fixed) << "trial " << trial;
    for (std::size_t si = 0; si < raw.sentences.size(); ++si) {
      const auto& r = raw.sentences[si];
      const auto starts = oracle::expected_starts(r);
      const bool untouched_by_cap = !starts.empty() && fixed.sentences[si].phrases.size() == r.phrases.size() &&
                                    starts.back() + static_cast<int>(r.phrases.back().tokens.size()) - 1 < kMaxPosition;
      if (!untouched_by_cap) continue;
      for (std::size_t k = 0; k < starts.size(); ++k)
        ASSERT_EQ(fixed.sentences[si].phrases[k].start(), starts[k]) << "trial " << trial;
    }
  }
}

TEST(BuildTemplate, PlacesPhraseInsideSentence) {
  const auto t = build_template(one_sentence({placed(0, {10, 11}, {1, 2})}, 5));
  EXPECT_EQ(t.tokens, (TokenIds{kMask, 10, 11, kMask, kMask}));
  ASSERT_EQ(t.spans.size(), 1u);
  EXPECT_EQ(t.spans[0], (Span{0, 1, 2}));
  EXPECT_EQ(t.doc_length, 5);
}

TEST(BuildTemplate, SentenceOffsetsAccumulate) {
  ContentPlan p;
  p.sentences.push_back(SentencePlan{{}, 3, true});
  p.sentences.push_back(SentencePlan{{placed(0, {12}, {0})}, 2, true});
  const auto t = build_template(p);
  EXPECT_EQ(t.tokens, (TokenIds{kMask, kMask, kMask, 12, kMask}));
  EXPECT_EQ(t.spans[0].start, 3);
}

TEST(BuildTemplate, NoPhrasesGivesAllMasks) {
  ContentPlan p;
  p.sentences.push_back(SentencePlan{{}, 4, true});
  EXPECT_EQ(build_template(p).tokens, TokenIds(4, kMask));
}

TEST(BuildTemplate, TruncationDropsCrossingSpans) {
  ContentPlan p;
  p.sentences.push_back(SentencePlan{{placed(0, {10}, {0}), placed(1, {11, 12}, {3, 4})}, 6, true});
  const auto t = build_template(p, 4);
  EXPECT_EQ(t.doc_length, 4);
  EXPECT_EQ(t.tokens, (TokenIds{10, kMask, kMask, kMask}));
  EXPECT_EQ(t.dropped, (std::vector<int>{1}));
  EXPECT_EQ(t.spans.size(), 1u);
}

TEST(BuildTemplate, SpansRoundTripToPlanOffsets) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const ContentPlan plan = correct_plan(oracle::random_raw_plan(rng));
    const Template t = build_template(plan, 100000);
    std::vector<Span> expected;
    int offset = 0;
    for (const auto& s : plan.sentences) {
      for (const auto& ph : s.phrases) expected.push_back(Span{ph.phrase_index, offset + ph.start(), offset + ph.end()});
      offset += s.length;
    }
    ASSERT_EQ(t.spans, expected);
    for (const auto& sp : t.spans)
      for (int i = sp.start; i <= sp.end; ++i) ASSERT_NE(t.tokens[static_cast<std::size_t>(i)], kMask);
  }
}

TEST(MaskLowConfidence, ZeroMasksNothing) {
  const Draft d{{10, 11, 12}, {0.5, 0.2, 0.9}, {false, false, false}};
  const auto m = mask_low_confidence(d, Template{}, 0);
  EXPECT_EQ(m.tmpl.tokens, d.tokens);
  EXPECT_TRUE(m.masked.empty());
}

TEST(MaskLowConfidence, LowestProbabilitiesMasked) {
  const Draft d{{10, 11, 12, 13}, {0.9, 0.1, 0.8, 0.2}, {false, false, false, false}};
  const auto m = mask_low_confidence(d, Template{}, 2);
  EXPECT_EQ(m.masked, (std::vector<int>{1, 3}));
  EXPECT_EQ(m.tmpl.tokens, (TokenIds{10, kMask, 12, kMask}));
}

TEST(MaskLowConfidence, TiesGoToLowerIndex) {
  const Draft d{{10, 11, 12, 13}, {0.5, 0.5, 0.5, 0.5}, {false, false, false, false}};
  EXPECT_EQ(mask_low_confidence(d, Template{}, 2).masked, (std::vector<int>{0, 1}));
}

TEST(MaskLowConfidence, SpansNeverMaskedAndTooLargeClamps) {
  Template base;
  base.tokens = {kMask, 20, 21, kMask};
  base.doc_length = 4;
  base.spans = {Span{0, 1, 2}};
  const Draft d{{10, 20, 21, 13}, {0.9, 0.01, 0.02, 0.2}, {false, true, true, false}};
  const auto m = mask_low_confidence(d, base, 10);
  EXPECT_TRUE(m.clamped);
  EXPECT_EQ(m.masked, (std::vector<int>{0, 3}));
  EXPECT_EQ(m.tmpl.tokens, (TokenIds{kMask, 20, 21, kMask}));
  EXPECT_EQ(m.tmpl.spans, base.spans);
}

TEST(Golden, TemplateRenderingAndSidecar) {
  Vocabulary v = Vocabulary::build({Document{{"tax"}, {{"the", "tax", "cut", "failed", "."}, {"now", "voters", "."}}, {}}}, 1);
  ContentPlan p;
  p.sentences.push_back(SentencePlan{{placed(0, v.encode({"tax", "cut"}), {1, 2})}, 5, true});
  p.sentences.push_back(SentencePlan{{placed(1, v.encode({"now"}), {0})}, 3, true});
  const Template t = build_template(p);
  const std::string dir = std::string(PAIRGEN_TEST_DATA) + "/golden/";
  EXPECT_EQ(render_template(t, v) + "\n", slurp(dir + "template_two_sentences.txt"));
  EXPECT_EQ(template_sidecar(t) + "\n", slurp(dir + "template_two_sentences.json"));
}
