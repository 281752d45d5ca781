#include <gtest/gtest.h>

#include "pairgen/config.hpp"

using namespace pairgen;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsCarryPublishedSettings) {
  const Config c = parse_config("");
  EXPECT_EQ(c.decode.k, 50);
  EXPECT_DOUBLE_EQ(c.decode.p, 0.9);
  EXPECT_DOUBLE_EQ(c.decode.temperature, 1.0);
  EXPECT_EQ(c.decode.samples, 3);
  EXPECT_EQ(c.decode.window, 5);
  EXPECT_EQ(c.R, 5);
  EXPECT_DOUBLE_EQ(c.position_loss_weight, 0.1);
  EXPECT_DOUBLE_EQ(c.optimizer.grad_clip, 1.0);
  EXPECT_DOUBLE_EQ(c.optimizer.lr_max, 5e-5);
  EXPECT_EQ(c.planner.batch_size, 20);
  EXPECT_EQ(c.generator.batch_size, 10);
  EXPECT_DOUBLE_EQ(c.signature_threshold, 10.83);
}

TEST(Config, ParsesSectionsAndOverrides) {
  const Config c = parse_config(
      "[experiment]\nseed = 42\nmodes = pair_full, kp_seq2seq\n"
      "[decode]\nk = 7\nenforce = false\n"
      "[generator]\nstrategy = any\nlr_max = 0.002\n");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.modes, (std::vector<GenerationMode>{GenerationMode::pair_full, GenerationMode::kp_seq2seq}));
  EXPECT_EQ(c.decode.k, 7);
  EXPECT_FALSE(c.decode.enforce);
  EXPECT_EQ(c.generator_train.strategy, CorruptionStrategy::any_token);
  EXPECT_DOUBLE_EQ(c.generator.optimizer(c.optimizer).lr_max, 0.002);
  EXPECT_DOUBLE_EQ(c.planner.optimizer(c.optimizer).lr_max, 5e-5);
}

TEST(Config, UnknownKeysAreNamed) {
  EXPECT_EQ(error_of("[model]\nwidth = 3\n"), "unknown config key: model.width");
  EXPECT_EQ(error_of("[modle]\nd_model = 3\n"), "unknown config key: modle.d_model");
}

TEST(Config, InvalidValuesAreNamed) {
  EXPECT_EQ(error_of("[model]\nd_model = wide\n"), "invalid value for model.d_model: 'wide'");
  EXPECT_EQ(error_of("[decode]\nenforce = maybe\n"), "invalid value for decode.enforce: 'maybe'");
  EXPECT_EQ(error_of("[refine]\nR = 0\n"), "refine.R must be >= 1");
  EXPECT_EQ(error_of("[generator]\nslot_window = -1\n"), "generator.slot_window must be >= 0");
  EXPECT_EQ(error_of("[decode]\np = 1.5\n"), "decode.p must be in (0, 1]");
  EXPECT_NE(error_of("[experiment]\nmodes = pair_heavy\n").find("experiment.modes"), std::string::npos);
}

TEST(Config, RenderRoundTrips) {
  Config c = parse_config("[experiment]\nseed = 9\n[model]\nd_model = 64\n[eval]\ntest_limit = 5\n");
  const Config again = parse_config(render_config(c));
  EXPECT_EQ(render_config(again), render_config(c));
  EXPECT_EQ(again.model, c.model);
  EXPECT_EQ(again.test_limit, 5);
}

TEST(Config, MissingFileIsReported) {
  EXPECT_THROW(load_config("/nonexistent/pairgen.ini"), std::invalid_argument);
}
