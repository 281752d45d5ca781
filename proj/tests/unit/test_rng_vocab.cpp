#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "pairgen/rng.hpp"
#include "pairgen/vocab.hpp"

using namespace pairgen;

TEST(Rng, DerivedSeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(7, "planner"), derive_seed(7, "planner"));
  std::set<std::uint64_t> seen;
  for (const char* tag : {"planner", "generator", "lm", "split"})
    for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(7, tag, i));
  EXPECT_EQ(seen.size(), 16u);
  EXPECT_NE(derive_seed(7, "planner"), derive_seed(8, "planner"));
}

TEST(Rng, UniformBelowStaysInRange) {
  Rng rng(3);
  std::vector<int> hist(5, 0);
  for (int i = 0; i < 5000; ++i) ++hist[uniform_below(rng, 5)];
  for (int h : hist) EXPECT_GT(h, 850);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, NormalHasUnitMoments) {
  Rng rng(11);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = normal01(rng);
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.04);
}

namespace {
std::vector<Document> tiny_corpus() {
  Document a{{"tell", "me"}, {{"b", "a", "c"}, {"a", "b"}}, {{"a", "b"}}};
  Document b{{"again"}, {{"a", "d"}}, {}};
  return {a, b};
}
}  // namespace

TEST(Vocabulary, SpecialIdsAreFixed) {
  Vocabulary v;
  EXPECT_EQ(v.size(), kNumSpecialTokens);
  EXPECT_EQ(v.id("[PAD]"), kPad);
  EXPECT_EQ(v.id("[UNK]"), kUnk);
  EXPECT_EQ(v.id("[BOS]"), kBos);
  EXPECT_EQ(v.id("[EOS]"), kEos);
  EXPECT_EQ(v.id("[MASK]"), kMask);
  EXPECT_EQ(v.id("[SEN]"), kSen);
  EXPECT_EQ(v.id("[BOK]"), kBok);
  EXPECT_EQ(v.id("[SEP]"), kSep);
}

TEST(Vocabulary, OrdersByFrequencyThenLexicographically) {
  const auto v = Vocabulary::build(tiny_corpus(), 1);
  // a:4 b:3, then the singletons alphabetically
  EXPECT_EQ(v.id("a"), 8);
  EXPECT_EQ(v.id("b"), 9);
  EXPECT_EQ(v.id("again"), 10);
  EXPECT_EQ(v.id("c"), 11);
  EXPECT_EQ(v.id("tell"), 14);
  EXPECT_EQ(v.id("never-seen"), kUnk);
  EXPECT_EQ(v.token(v.id("d")), "d");
}

TEST(Vocabulary, MinCountDropsRareWords) {
  const auto v = Vocabulary::build(tiny_corpus(), 2);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("d"));
  EXPECT_EQ(v.encode({"d", "a"}).front(), kUnk);
}

TEST(Vocabulary, EmptyCorpusThrows) {
  EXPECT_THROW(Vocabulary::build({}, 1), std::invalid_argument);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto v = Vocabulary::build(tiny_corpus(), 1);
  const auto path = std::filesystem::temp_directory_path() / "pairgen_vocab_roundtrip.tsv";
  v.save(path);
  const auto w = Vocabulary::load(path);
  EXPECT_EQ(v, w);
  std::filesystem::remove(path);
}

TEST(Vocabulary, EncodeDecodeRoundTrip) {
  const auto v = Vocabulary::build(tiny_corpus(), 1);
  const Tokens words{"c", "a", "[SEN]", "b"};
  EXPECT_EQ(v.decode(v.encode(words)), words);
}
