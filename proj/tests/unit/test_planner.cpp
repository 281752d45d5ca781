#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pairgen/eval.hpp"
#include "pairgen/nn/optim.hpp"
#include "pairgen/nn/transformer.hpp"
#include "pairgen/planner.hpp"
#include "pairgen/templates.hpp"
#include "pairgen/vocab.hpp"
#include "oracles.hpp"

using namespace pairgen;

namespace {

nn::ModelConfig planner_config(int vocab, int d = 16) {
  nn::ModelConfig c;
  c.kind = nn::ModelKind::bidir_causal_hybrid;
  c.d_model = d;
  c.n_heads = 2;
  c.n_layers = 2;
  c.ffn_dim = 2 * d;
  c.max_len = 256;
  c.vocab_size = vocab;
  c.dropout = 0.0;
  c.uses_segment_embeddings = true;
  c.position_classes = kPositionClasses;
  return c;
}

}  // namespace

TEST(OracleExtraction, ReadsOffsetsAndSentenceLengths) {
  // "the tax cut failed ." / "voters agreed ."
  const int the = 8, tax = 9, cut = 10, failed = 11, dot = 12, voters = 13, agreed = 14;
  const KeyphraseSet kps({{tax, cut}, {voters}});
  const ContentPlan p = extract_oracle_plan({{the, tax, cut, failed, dot}, {voters, agreed, dot}}, kps);
  EXPECT_EQ(p.assignment(), (TokenIds{tax, cut, kSen, voters, kSen, kEos}));
  // The second sentence has three tokens including its period.
  EXPECT_EQ(p.positions(), (std::vector<int>{1, 2, 5, 0, 3, 0}));
}

TEST(OracleExtraction, PhraseAtSentenceStartHasPositionZero) {
  const ContentPlan p = extract_oracle_plan({{9, 10, 11}}, KeyphraseSet(std::vector<TokenIds>{{9}}));
  EXPECT_EQ(p.positions().front(), 0);
}

TEST(OracleExtraction, LongSentenceClampsToCap) {
  TokenIds sentence(300, 8);
  sentence[200] = 9;
  const ContentPlan p = extract_oracle_plan({sentence}, KeyphraseSet(std::vector<TokenIds>{{9}}));
  EXPECT_EQ(p.positions(), (std::vector<int>{127, 127, 0}));
}

TEST(OracleExtraction, MissingPhraseIsNamed) {
  try {
    extract_oracle_plan({{8, 9}}, KeyphraseSet({{10, 11}}));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("[10 11]"), std::string::npos) << e.what();
  }
}

TEST(OracleExtraction, OrderedByFirstOccurrence) {
  const KeyphraseSet kps({{12}, {9, 10}});
  const ContentPlan p = extract_oracle_plan({{8, 9, 10}, {11, 12}}, kps);
  EXPECT_EQ(p.assignment(), (TokenIds{9, 10, kSen, 12, kSen, kEos}));
  EXPECT_EQ(p.sentences[0].phrases[0].phrase_index, 1);
}

TEST(PlannerLoss, WeightedSumOfHeads) {
  PlannerLossParts parts{2.0, 1.0, 0.1};
  EXPECT_DOUBLE_EQ(parts.total(), 2.1);
}

TEST(PlannerLoss, MatchesHandRolledCrossEntropy) {
  const auto model = nn::Model<double>::initialized(planner_config(20), 31, 0.2);
  const KeyphraseSet kps({{9, 10}, {11}});
  const ContentPlan gold = extract_oracle_plan({{8, 9, 10, 12}, {11, 13, 14}}, kps);
  const PlanExample ex = make_plan_example({15, 16}, kps, gold);

  // Independent rebuild of the sequence: prompt, [SEP] phrase..., [BOK], gold minus last.
  TokenIds ids{15, 16, kSep, 9, 10, kSep, 11};
  const int input_len = static_cast<int>(ids.size());
  ids.push_back(kBok);
  for (std::size_t j = 0; j + 1 < ex.gold_assignment.size(); ++j) ids.push_back(ex.gold_assignment[j]);
  nn::Sequence seq = nn::Sequence::plain(ids, 0);
  for (std::size_t i = static_cast<std::size_t>(input_len); i < ids.size(); ++i) seq.segments[i] = 1;
  const int n = static_cast<int>(ex.gold_assignment.size());
  const auto trace = nn::forward(model, seq, nn::build_hybrid_mask(input_len, n));

  double ce_assign = 0, ce_pos = 0;
  for (int t = 0; t < n; ++t) {
    ce_assign += oracle::cross_entropy(trace.logits.row(input_len + t), ex.gold_assignment[static_cast<std::size_t>(t)]);
    ce_pos += oracle::cross_entropy(trace.position_logits.row(input_len + t), ex.gold_positions[static_cast<std::size_t>(t)]);
  }
  ce_assign /= n;
  ce_pos /= n;

  const PlannerLossParts parts = planner_loss<double>(model, ex, nullptr, nullptr);
  EXPECT_NEAR(parts.assignment, ce_assign, 1e-9);
  EXPECT_NEAR(parts.position, ce_pos, 1e-9);
  EXPECT_NEAR(parts.total(), ce_assign + 0.1 * ce_pos, 1e-6);
}

TEST(PredictPlan, EmptyKeyphraseSetThrows) {
  const auto model = nn::Model<double>::initialized(planner_config(20), 1, 0.2);
  EXPECT_THROW(predict_plan(model, {8}, KeyphraseSet{}), std::invalid_argument);
}

// Legality oracle: every emitted non-special token belongs to a complete,
// once-used input phrase; [EOS] only last; positions in range.
TEST(PredictPlan, RandomModelsOnlyEmitLegalPlans) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto model = nn::Model<double>::initialized(planner_config(30), 100 + static_cast<std::uint64_t>(trial), 1.0);
    std::vector<TokenIds> phrases;
    std::set<TokenIds> seen;
    const int n = 1 + static_cast<int>(uniform_below(rng, 5));
    while (static_cast<int>(phrases.size()) < n) {
      TokenIds ph;
      const int len = 1 + static_cast<int>(uniform_below(rng, 3));
      for (int j = 0; j < len; ++j) ph.push_back(8 + static_cast<int>(uniform_below(rng, 6)));
      if (seen.insert(ph).second) phrases.push_back(ph);
    }
    const KeyphraseSet kps(phrases);
    const ContentPlan plan = predict_plan(model, {20, 21}, kps);

    const TokenIds a = plan.assignment();
    const auto pos = plan.positions();
    ASSERT_EQ(a.size(), pos.size());
    ASSERT_LE(a.size(), static_cast<std::size_t>(kMaxPosition) + 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_TRUE(pos[i] >= 0 && pos[i] <= kMaxPosition);
      if (a[i] == kEos) ASSERT_EQ(i + 1, a.size());
      if (is_special(a[i])) ASSERT_TRUE(a[i] == kSen || a[i] == kEos);
    }
    std::set<int> used;
    std::size_t phrase_tokens = 0;
    for (const auto& s : plan.sentences)
      for (const auto& p : s.phrases) {
        ASSERT_TRUE(used.insert(p.phrase_index).second) << "phrase emitted twice";
        ASSERT_EQ(p.tokens, kps[static_cast<std::size_t>(p.phrase_index)]);
        phrase_tokens += p.tokens.size();
      }
    std::size_t content = 0;
    for (int t : a) content += !is_special(t);
    ASSERT_EQ(content, phrase_tokens) << "token outside a complete phrase";
    ASSERT_EQ(plan_from_flat(a, pos, kps), plan);
  }
}

TEST(PredictPlan, SinglePhraseEmittedExactlyOnce) {
  const auto model = nn::Model<double>::initialized(planner_config(20), 5, 1.0);
  const KeyphraseSet kps({{9, 10}});
  const ContentPlan plan = predict_plan(model, {12}, kps);
  TokenIds content;
  for (int t : plan.assignment())
    if (!is_special(t)) content.push_back(t);
  EXPECT_TRUE(content.empty() || content == (TokenIds{9, 10}));
}

TEST(PredictPlan, MemorizesSmallFixtureCorpus) {
  constexpr int kVocab = 40;
  Rng rng(3);
  std::vector<PlanExample> corpus;
  std::vector<std::pair<TokenIds, KeyphraseSet>> inputs;
  for (int i = 0; i < 50; ++i) {
    TokenIds prompt{8 + static_cast<int>(uniform_below(rng, 8)), 8 + static_cast<int>(uniform_below(rng, 8)),
                    16 + i % 24};
    std::vector<TokenIds> sentences;
    std::vector<TokenIds> phrases;
    const int n_sent = 2 + static_cast<int>(uniform_below(rng, 2));
    int next = 16 + static_cast<int>(uniform_below(rng, 24));
    for (int s = 0; s < n_sent; ++s) {
      TokenIds sent(3 + uniform_below(rng, 5), 8);
      const TokenIds ph{next, 16 + (next + 7) % 24};
      next = 16 + (next + 11) % 24;
      const std::size_t at = uniform_below(rng, sent.size() - 1);
      sent.insert(sent.begin() + static_cast<long>(at), ph.begin(), ph.end());
      sentences.push_back(sent);
      phrases.push_back(ph);
    }
    std::set<TokenIds> uniq(phrases.begin(), phrases.end());
    if (uniq.size() != phrases.size()) continue;
    const KeyphraseSet kps(std::vector<TokenIds>(uniq.begin(), uniq.end()));
    try {
      corpus.push_back(make_plan_example(prompt, kps, extract_oracle_plan(sentences, kps)));
      inputs.emplace_back(prompt, kps);
    } catch (const std::invalid_argument&) {
    }
  }
  ASSERT_GE(corpus.size(), 40u);

  auto model = nn::Model<float>::initialized(planner_config(kVocab, 32), 9, 0.05);
  nn::AdamState adam(model.config);
  nn::OptimizerConfig opt;
  opt.lr_max = 3e-3;
  opt.warmup = 50;
  const nn::ExampleLoss<float, PlanExample> loss = [](const nn::Model<float>& m, const PlanExample& ex,
                                                      nn::ParameterSet<float>* g, Rng* d) {
    return planner_loss(m, ex, g, d).total();
  };
  Rng order(1);
  for (long step = 1; step <= 1500; ++step) {
    std::vector<PlanExample> batch;
    for (int b = 0; b < 10; ++b) batch.push_back(corpus[uniform_below(order, corpus.size())]);
    nn::train_step<PlanExample>(model, batch, loss, adam, step, opt, nullptr);
  }

  double matched = 0, total = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const ContentPlan p = predict_plan(model, inputs[i].first, inputs[i].second);
    matched += static_cast<double>(lcs_length(p.assignment(), corpus[i].gold_assignment));
    total += static_cast<double>(corpus[i].gold_assignment.size());
  }
  EXPECT_GE(matched / total, 0.9);
}
