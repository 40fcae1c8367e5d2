/* Copyright 2026 The ChangeForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include "support.hpp"

namespace changeforge {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

GenerationConfig preset(int exp, const testing::Pools& pools, std::size_t count) {
  auto cfg = load_generation_config(CHANGEFORGE_CONFIG_DIR "/exp" + std::to_string(exp) + ".json");
  cfg.source_pool_dir = pools.sources.string();
  cfg.instance_pool_dir = pools.instances.string();
  cfg.count = count;
  return cfg;
}

// True when every pixel outside the union of boxes is identical.
bool differs_only_inside(const RgbImage& a, const RgbImage& b, const std::vector<ChangeBox>& boxes) {
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const ChangeBox& box) {
        return x + 0.5 > box.x0() && x + 0.5 < box.x1() && y + 0.5 > box.y0() && y + 0.5 < box.y1();
      });
      if (inside) continue;
      for (int c = 0; c < 3; ++c) {
        if (a.at(x, y, c) != b.at(x, y, c)) return false;
      }
    }
  }
  return true;
}

class SynthgenTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir("cf_pools");
    pools_ = testing::make_pools(root_->path());
  }
  static void TearDownTestSuite() {
    delete root_;
    root_ = nullptr;
  }
  static TempDir* root_;
  static testing::Pools pools_;
};

TempDir* SynthgenTest::root_ = nullptr;
testing::Pools SynthgenTest::pools_;

TEST(ChangeKindNames, RoundTrip) {
  for (auto k : kAllChangeKinds) EXPECT_EQ(change_kind_from_string(to_string(k)), k);
  EXPECT_THROW(change_kind_from_string("Sticker"), ParameterError);
}

TEST(GenerationConfigJson, PresetsLoadAndRoundTrip) {
  for (int exp = 1; exp <= 8; ++exp) {
    const auto cfg = load_generation_config(CHANGEFORGE_CONFIG_DIR "/exp" + std::to_string(exp) + ".json");
    const auto back = generation_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    EXPECT_EQ(parameter_hash(back), parameter_hash(cfg));
    EXPECT_EQ(cfg.restrictions.rotation, exp != 1) << exp;
    EXPECT_TRUE(cfg.restrictions.margin_blur);
  }
  const auto exp7 = load_generation_config(CHANGEFORGE_CONFIG_DIR "/exp7.json");
  EXPECT_EQ(exp7.weight(ChangeKind::RegularCrop), 0.5);
  EXPECT_EQ(exp7.weight(ChangeKind::IrregularCrop), 0.5);
  EXPECT_EQ(exp7.weight(ChangeKind::InstanceCutout), 0.0);
}

TEST(GenerationConfigJson, RejectsInvalidInput) {
  using nlohmann::json;
  EXPECT_THROW(generation_config_from_json(json{{"colour", 1}}), ParameterError);
  EXPECT_THROW(generation_config_from_json(json{{"change_kinds", {{"RegularCrop", 0.5}}}}), ParameterError);
  EXPECT_THROW(generation_config_from_json(json{{"count", 0}}), ParameterError);
  EXPECT_THROW(generation_config_from_json(json{{"restrictions", {{"noise_sigma", {1, 2, 3}}}}}), ParameterError);
  EXPECT_THROW(generation_config_from_json(json{{"restrictions", {{"blur", true}}}}), ParameterError);
  EXPECT_THROW(generation_config_from_json(json{{"count", "many"}}), ParameterError);
  EXPECT_THROW(load_generation_config("/nonexistent/exp.json"), IoError);
}

TEST(GenerationConfigJson, HashTracksParameters) {
  GenerationConfig a;
  GenerationConfig b = a;
  b.restrictions.noise_sigma_max = 9.0;
  EXPECT_NE(parameter_hash(a), parameter_hash(b));
  EXPECT_EQ(parameter_hash(a), parameter_hash(GenerationConfig{}));
}

TEST_F(SynthgenTest, OpaqueRegularCropChangesOnlyInsideBox) {
  GenerationConfig cfg;
  cfg.source_pool_dir = pools_.sources.string();
  cfg.restrictions = {};
  cfg.restrictions.rotation = false;
  cfg.restrictions.margin_blur = false;
  cfg.restrictions.noise = false;
  cfg.restrictions.jitter = false;
  cfg.max_changes = 1;
  const auto pools = SourcePools::from_config(cfg);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto s = generate_pair(cfg, pools, rng);
    ASSERT_EQ(s.boxes.size(), 1u);
    EXPECT_TRUE(differs_only_inside(s.reference, s.test, s.boxes));
    const auto& b = s.boxes[0];
    const double frac = b.area() / (512.0 * 512.0);
    EXPECT_GE(frac, 0.005);
    EXPECT_LT(frac, 0.5);
    EXPECT_EQ(b.w, std::round(b.w));  // unrotated crops keep integer sides
  }
}

TEST_F(SynthgenTest, PairInvariantsAcrossKinds) {
  const auto cfg = preset(8, pools_, 1);
  const auto pools = SourcePools::from_config(cfg);
  std::array<int, 3> seen{};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto s = generate_pair(cfg, pools, rng);
    ++seen[static_cast<int>(s.kind)];
    EXPECT_EQ(s.reference.width(), 512);
    EXPECT_EQ(s.test.height(), 512);
    EXPECT_GE(s.boxes.size(), 1u);
    EXPECT_LE(s.boxes.size(), 5u);
    for (const auto& b : s.boxes) {
      EXPECT_TRUE(b.valid());
      EXPECT_TRUE(b.within(512, 512));
      if (s.kind != ChangeKind::InstanceCutout) {
        EXPECT_GE(b.area() / (512.0 * 512.0), 0.005);
        EXPECT_LT(b.area() / (512.0 * 512.0), 0.5);
      }
    }
  }
  for (int k = 0; k < 3; ++k) EXPECT_GT(seen[k], 0) << k;
}

TEST_F(SynthgenTest, LocalityWithoutNoiseAndJitter) {
  for (int exp : {1, 2, 4, 7, 8}) {
    auto cfg = preset(exp, pools_, 1);
    cfg.restrictions.noise = false;
    cfg.restrictions.jitter = false;
    const auto pools = SourcePools::from_config(cfg);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      Rng rng(seed * 7 + exp);
      const auto s = generate_pair(cfg, pools, rng);
      EXPECT_TRUE(differs_only_inside(s.reference, s.test, s.boxes)) << "exp" << exp << " seed " << seed;
    }
  }
}

TEST_F(SynthgenTest, SameSeedSamePair) {
  const auto cfg = preset(7, pools_, 1);
  const auto pools = SourcePools::from_config(cfg);
  Rng a(99), b(99);
  const auto x = generate_pair(cfg, pools, a);
  const auto y = generate_pair(cfg, pools, b);
  EXPECT_EQ(x.boxes, y.boxes);
  EXPECT_TRUE(std::equal(x.test.data().begin(), x.test.data().end(), y.test.data().begin()));
  EXPECT_TRUE(std::equal(x.reference.data().begin(), x.reference.data().end(), y.reference.data().begin()));
}

TEST_F(SynthgenTest, EmptyPoolsAreRejected) {
  TempDir empty;
  GenerationConfig cfg;
  cfg.source_pool_dir = empty.path().string();
  const auto pools = SourcePools::from_config(cfg);
  EXPECT_THROW(PairGenerator(cfg, pools), GenerationError);
  auto inst = preset(2, pools_, 1);
  inst.instance_pool_dir = empty.path().string();
  const auto no_instances = SourcePools::from_config(inst);
  EXPECT_THROW(PairGenerator(inst, no_instances), GenerationError);
  cfg.source_pool_dir = (empty / "missing").string();
  EXPECT_THROW(SourcePools::from_config(cfg), IoError);
}

TEST_F(SynthgenTest, InstanceRecipeUsesOnlyCutouts) {
  TempDir out;
  const auto m = generate_dataset(preset(2, pools_, 6), out.path());
  ASSERT_EQ(m.records.size(), 6u);
  for (const auto& r : m.records) EXPECT_EQ(r.strategy_tag, "exp2:InstanceCutout");
}

TEST_F(SynthgenTest, RegularRecipeTenRecords) {
  TempDir out;
  const auto cfg = preset(3, pools_, 10);
  const auto m = generate_dataset(cfg, out.path());
  ASSERT_EQ(m.records.size(), 10u);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_EQ(m.records[i].pair_id, pair_id_for(i));
    EXPECT_EQ(m.records[i].strategy_tag, "exp3:RegularCrop");
  }
  EXPECT_TRUE(cfg.restrictions.rotation && cfg.restrictions.margin_blur);
}

TEST_F(SynthgenTest, CountOneAndLoadRoundTrip) {
  TempDir out;
  const auto m = generate_dataset(preset(7, pools_, 1), out.path());
  ASSERT_EQ(m.records.size(), 1u);
  const auto ds = load_dataset(out / "manifest.json");
  ASSERT_EQ(ds.records().size(), 1u);
  EXPECT_EQ(ds.records(), m.records);
  EXPECT_EQ(ds.manifest.seed, m.seed);
  EXPECT_EQ(ds.manifest.parameter_hash, m.parameter_hash);
  ASSERT_TRUE(ds.manifest.config.has_value());
  EXPECT_EQ(to_json(*ds.manifest.config), to_json(*m.config));
  EXPECT_NE(ds.find("000000"), nullptr);
  EXPECT_EQ(ds.find("nope"), nullptr);
}

TEST_F(SynthgenTest, LoadRoundTripReproducesBoxesExactly) {
  TempDir out;
  const auto m = generate_dataset(preset(8, pools_, 8), out.path());
  const auto ds = load_dataset(out / "manifest.json");
  ASSERT_EQ(ds.records().size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    ASSERT_EQ(ds.records()[i].boxes.size(), m.records[i].boxes.size());
    for (std::size_t b = 0; b < m.records[i].boxes.size(); ++b) {
      EXPECT_EQ(ds.records()[i].boxes[b], m.records[i].boxes[b]);
    }
  }
}

TEST_F(SynthgenTest, WorkerCountDoesNotChangeOutput) {
  TempDir a, b;
  const auto cfg = preset(7, pools_, 6);
  generate_dataset(cfg, a.path(), {1, {}});
  generate_dataset(cfg, b.path(), {3, {}});
  for (const auto& entry : fs::directory_iterator(a.path())) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(testing::read_file(entry.path()), testing::read_file(b / name)) << name;
  }
}

TEST_F(SynthgenTest, MissingImageErrorNamesPair) {
  TempDir out;
  generate_dataset(preset(3, pools_, 3), out.path());
  fs::remove(out / "000001_test.png");
  try {
    load_dataset(out / "manifest.json");
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("000001"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, HandWrittenRealPairs) {
  TempDir dir;
  fs::create_directories(dir / "imgs");
  nlohmann::json records = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    const std::string id = "office_" + std::to_string(i);
    write_png(dir / ("imgs/" + id + "_a.png"), testing::gradient_image(320, 240, i));
    write_png(dir / ("imgs/" + id + "_b.png"), testing::gradient_image(320, 240, i + 5));
    records.push_back({{"pair_id", id},
                       {"reference_path", "imgs/" + id + "_a.png"},
                       {"test_path", (dir / ("imgs/" + id + "_b.png")).string()},
                       {"boxes", {{{"cx", 100}, {"cy", 80}, {"w", 40}, {"h", 30}}}}});
  }
  std::ofstream(dir / "manifest.json") << nlohmann::json{{"version", 1}, {"records", records}}.dump();
  const auto ds = load_dataset(dir / "manifest.json");
  ASSERT_EQ(ds.records().size(), 3u);
  EXPECT_FALSE(ds.manifest.config.has_value());
  EXPECT_EQ(ds.records()[2].boxes[0], (ChangeBox{100, 80, 40, 30}));
  EXPECT_TRUE(fs::exists(ds.reference_file(ds.records()[0])));
}

TEST(LoadDataset, RejectsInvalidManifests) {
  TempDir dir;
  write_png(dir / "a.png", testing::gradient_image(64, 64));
  write_png(dir / "b.png", testing::gradient_image(64, 48));
  auto write = [&](const nlohmann::json& j) { std::ofstream(dir / "m.json") << j.dump(); };
  auto rec = [](const std::string& id, const std::string& test, double w) {
    return nlohmann::json{{"pair_id", id},
                          {"reference_path", "a.png"},
                          {"test_path", test},
                          {"boxes", {{{"cx", 20}, {"cy", 20}, {"w", w}, {"h", 10}}}}};
  };
  auto expect_error_naming = [&](const std::string& needle) {
    try {
      load_dataset(dir / "m.json");
      ADD_FAILURE() << "expected LoadError mentioning " << needle;
    } catch (const LoadError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  write({{"version", 1}, {"records", {rec("dims", "b.png", 10)}}});
  expect_error_naming("dims");
  write({{"version", 1}, {"records", {rec("big", "a.png", 100)}}});
  expect_error_naming("big");
  write({{"version", 1}, {"records", {rec("twice", "a.png", 10), rec("twice", "a.png", 10)}}});
  expect_error_naming("duplicate");
  write({{"version", 1}, {"records", {{{"pair_id", "schema"}, {"test_path", "a.png"}}}}});
  expect_error_naming("schema");
  write({{"version", 2}, {"records", nlohmann::json::array()}});
  expect_error_naming("version");
  std::ofstream(dir / "m.json") << "{broken";
  expect_error_naming("JSON");
  EXPECT_THROW(load_dataset(dir / "absent.json"), LoadError);
}

TEST(KindSampling, BlendFrequenciesFollowWeights) {
  GenerationConfig cfg;
  cfg.kind_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::size_t n = 4780;
  std::array<double, 3> counts{};
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(pair_seed(cfg.seed, i, 0));
    ++counts[static_cast<int>(sample_pair_kind(cfg, rng))];
  }
  for (double c : counts) EXPECT_NEAR(c / n, 1.0 / 3, 0.05);

  cfg.kind_weights = {0.5, 0.0, 0.5};
  for (std::size_t i = 0; i < 1000; ++i) {
    Rng rng(pair_seed(7, i, 0));
    EXPECT_NE(sample_pair_kind(cfg, rng), ChangeKind::InstanceCutout);
  }
}

TEST(PairIds, ZeroPaddedAndSeedsDistinct) {
  EXPECT_EQ(pair_id_for(0), "000000");
  EXPECT_EQ(pair_id_for(4779), "004779");
  EXPECT_NE(pair_seed(1, 0, 0), pair_seed(1, 1, 0));
  EXPECT_NE(pair_seed(1, 0, 0), pair_seed(1, 0, 1));
  EXPECT_NE(pair_seed(1, 0, 0), pair_seed(2, 0, 0));
}

}  // namespace
}  // namespace changeforge
