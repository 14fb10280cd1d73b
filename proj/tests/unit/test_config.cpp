#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "tumorsynth/pipeline/config.hpp"

using namespace tumorsynth;
using namespace tumorsynth::pipeline;
using nlohmann::json;

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(SynthConfig{}.validate()); }

TEST(Config, RoundTripThroughJson) {
  SynthConfig c;
  c.master_seed = 99;
  c.tumor_count_probabilities = {0.1, 0.2, 0.3, 0.2, 0.2};
  c.size_class_weights = {1, 0, 2, 0};
  c.effects.satellite_rate = 1.5;
  c.placement.margin_mm = 3;
  c.location_retries = 7;
  c.texture.clip_hi_hu = 180;
  c.image_encoding = nifti::ImageEncoding::Int16;
  const SynthConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, MissingKeysKeepDefaults) {
  const SynthConfig c = config_from_json(json{{"master_seed", 5}, {"effects", {{"satellite_rate", 0.0}}}});
  EXPECT_EQ(c.master_seed, 5u);
  EXPECT_EQ(c.effects.satellite_rate, 0.0);
  EXPECT_EQ(c.effects.mass_effect_strength, SynthConfig{}.effects.mass_effect_strength);
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(config_from_json(json{{"master_sed", 1}}), Error);
  EXPECT_THROW(config_from_json(json{{"effects", {{"satelite_rate", 1.0}}}}), Error);
  EXPECT_THROW(config_from_json(json{{"shape", {{"elastic", {{"sigma", 1.0}}}}}}), Error);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(config_from_json(json{{"tumor_count_probabilities", {0.5, 0.5, 0.5, 0, 0}}}), Error);
  EXPECT_THROW(config_from_json(json{{"tumor_count_probabilities", {1, 0}}}), Error);
  EXPECT_THROW(config_from_json(json{{"size_class_weights", {{"tiny", -1}}}}), Error);
  EXPECT_THROW(config_from_json(json{{"size_class_weights", {{"tiny", 0}, {"small", 0}, {"medium", 0}, {"large", 0}}}}),
               Error);
  EXPECT_THROW(config_from_json(json{{"image_encoding", "float64"}}), Error);
  EXPECT_THROW(config_from_json(json{{"master_seed", "x"}}), Error);
  EXPECT_THROW(config_from_json(json{{"texture", {{"clip_hu", {10, 0}}}}}), Error);
  EXPECT_THROW(config_from_json(json::array()), Error);
}

TEST(Config, HashTracksContent) {
  SynthConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.effects.cirrhosis_amplitude_hu = 11;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, LoadFileWithComments) {
  tstest::TempDir dir;
  {
    std::ofstream f(dir / "c.json");
    f << "{\n  // fixed seed\n  \"master_seed\": 12\n}\n";
  }
  EXPECT_EQ(load_config(dir / "c.json").master_seed, 12u);
  try {
    load_config(dir / "missing.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
  {
    std::ofstream f(dir / "bad.json");
    f << "{ nope";
  }
  EXPECT_THROW(load_config(dir / "bad.json"), Error);
}
