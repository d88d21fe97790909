#include <gtest/gtest.h>

#include "pointacl/config.hpp"

using namespace pointacl;

TEST(Config, ParsesCommentsAndBlankLines) {
  const auto e = parse_config_text("# header\nalpha = 2.5\n\n  beta=0   # trailing\nattack.representation = z\n");
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0], (std::pair<std::string, std::string>{"alpha", "2.5"}));
  EXPECT_EQ(e[1], (std::pair<std::string, std::string>{"beta", "0"}));
  const auto cfg = apply_config(TrainConfig{}, e);
  EXPECT_EQ(cfg.alpha, 2.5);
  EXPECT_EQ(cfg.beta, 0.0);
  EXPECT_EQ(cfg.attack.representation, Representation::projected);
}

TEST(Config, MalformedLineCitesLine) {
  try {
    parse_config_text("alpha = 1\nbeta 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Config, ErrorsNameTheKey) {
  const auto key_of = [](const std::string& text) {
    try {
      apply_config(TrainConfig{}, parse_config_text(text));
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("alpah = 1"), "alpah");
  EXPECT_EQ(key_of("temperature = warm"), "temperature");
  EXPECT_EQ(key_of("epochs = -3"), "epochs");
  EXPECT_EQ(key_of("hd_view = maybe"), "hd_view");
  EXPECT_EQ(key_of("temperature = 0"), "temperature");
  EXPECT_EQ(key_of("r1 = 0.3"), "r1");
  EXPECT_EQ(key_of("batch_size = 1"), "batch_size");
  EXPECT_EQ(key_of("attack.representation = w"), "attack.representation");
  EXPECT_EQ(key_of("alpha = nan"), "alpha");
  EXPECT_EQ(key_of("alpha = 0"), "<none>");
}

TEST(Config, TextRoundTripIsExact) {
  TrainConfig c;
  c.alpha = 0.1;
  c.temperature = 1.0 / 3.0;
  c.attack.epsilon = 0.015;
  c.attack.steps = 9;
  c.augment.crop = false;
  c.dims.features = 64;
  c.seed = 123456789012345ull;
  const std::string text = config_to_text(c);
  const auto back = apply_config(TrainConfig{}, parse_config_text(text));
  EXPECT_EQ(config_to_text(back), text);
  EXPECT_EQ(back.temperature, c.temperature);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_FALSE(back.augment.crop);
}

TEST(Config, EveryKeyIsListed) {
  for (const char* k : {"alpha", "beta", "temperature", "keep_fraction", "r1", "r2", "epochs", "batch_size",
                        "learning_rate", "attack.epsilon", "attack.steps", "eval.epsilon", "augment.rotation_deg",
                        "augment.dropout_max", "points", "features", "proj", "classes", "seed"})
    EXPECT_TRUE(is_config_key(k)) << k;
  EXPECT_FALSE(is_config_key("data"));
}
