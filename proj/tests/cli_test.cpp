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

#include <sstream>

#include "cli_app.hpp"
#include "support.hpp"

namespace changeforge {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "changeforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir("cf_cli");
    const auto pools = testing::make_pools(root_->path(), 3, 2);
    const auto r = run_cli({"generate", "--config", CHANGEFORGE_CONFIG_DIR "/exp7.json", "--out",
                            (root_->path() / "ds").string(), "--count", "4", "--source-pool",
                            pools.sources.string(), "--instance-pool", pools.instances.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    pools_ = pools;
  }
  static void TearDownTestSuite() {
    delete root_;
    root_ = nullptr;
  }
  static fs::path manifest() { return root_->path() / "ds" / "manifest.json"; }

  static TempDir* root_;
  static testing::Pools pools_;
};

TempDir* CliTest::root_ = nullptr;
testing::Pools CliTest::pools_;

TEST(Cli, HelpExitsZeroForEverySubcommand) {
  const auto top = run_cli({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* sub : {"generate", "encode", "decode", "eval", "distance", "inspect"}) {
    const auto r = run_cli({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("--out"), std::string::npos) << sub << " help lacks --out";
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({"distance"}).code, 1);
  EXPECT_EQ(run_cli({"distance", "--matrix", "x.csv", "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({"decode", "--maps", "d", "--threshold", "2"}).code, 1);
}

TEST(Cli, DataErrorsExitTwo) {
  const auto r = run_cli({"distance", "--matrix", "/nonexistent/table.csv"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(run_cli({"eval", "--detections", "/nonexistent.json", "--manifest", "/nonexistent.json"}).code, 2);
  EXPECT_EQ(run_cli({"generate", "--config", "/nonexistent.json", "--out", "/tmp/x"}).code, 2);
}

TEST(Cli, DistanceReportsPublishedValue) {
  const auto r = run_cli({"distance", "--matrix", CHANGEFORGE_DATA_DIR "/table3.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("method,distance\n", 0), 0u);
  EXPECT_NE(r.out.find("Exp.7 CUNet-EF,0.125583\n"), std::string::npos) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 19);
}

TEST_F(CliTest, GenerateWritesManifestWithCountRecords) {
  const auto ds = load_dataset(manifest());
  EXPECT_EQ(ds.records().size(), 4u);
  EXPECT_EQ(ds.manifest.seed, 2027u);
}

TEST_F(CliTest, GenerateSeedPrecedenceAndIdempotence) {
  TempDir a, b, c;
  const std::vector<std::string> base{"generate", "--config", CHANGEFORGE_CONFIG_DIR "/exp7.json", "--count", "2",
                                      "--source-pool", pools_.sources.string(), "--instance-pool",
                                      pools_.instances.string()};
  auto with = [&](const fs::path& out, std::vector<std::string> extra) {
    auto args = base;
    args.push_back("--out");
    args.push_back(out.string());
    args.insert(args.end(), extra.begin(), extra.end());
    return run_cli(args);
  };
  ::setenv("CHANGEFORGE_SEED", "77", 1);
  ASSERT_EQ(with(a.path(), {}).code, 0);
  ASSERT_EQ(with(b.path(), {"--seed", "5"}).code, 0);
  ASSERT_EQ(with(c.path(), {"--workers", "2"}).code, 0);
  ::unsetenv("CHANGEFORGE_SEED");
  EXPECT_EQ(load_dataset(a / "manifest.json").manifest.seed, 77u);
  EXPECT_EQ(load_dataset(b / "manifest.json").manifest.seed, 5u);
  for (const auto& entry : fs::directory_iterator(a.path())) {
    const auto name = entry.path().filename().string();
    EXPECT_EQ(testing::read_file(entry.path()), testing::read_file(c / name)) << name;
  }
  ::setenv("CHANGEFORGE_SEED", "seven", 1);
  EXPECT_EQ(with(a.path(), {}).code, 2);
  ::unsetenv("CHANGEFORGE_SEED");
}

TEST_F(CliTest, EncodeDecodeEvalPipeline) {
  TempDir work;
  ASSERT_EQ(run_cli({"encode", "--manifest", manifest().string(), "--out", (work / "maps").string()}).code, 0);
  const auto ds = load_dataset(manifest());
  for (const auto& r : ds.records()) {
    for (const char* s : {"_hm.f32", "_wh.f32", "_offset.f32"}) {
      EXPECT_TRUE(fs::exists(work / ("maps/" + r.pair_id + s)));
    }
  }
  const auto dets_path = (work / "dets.json").string();
  ASSERT_EQ(run_cli({"decode", "--maps", (work / "maps").string(), "--out", dets_path}).code, 0);
  const auto dets = detections_from_json(nlohmann::json::parse(testing::read_file(dets_path)));
  EXPECT_FALSE(dets.empty());

  const auto r = run_cli({"eval", "--detections", dets_path, "--manifest", manifest().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto result = nlohmann::json::parse(r.out);
  ASSERT_TRUE(result.contains("ap50"));
  EXPECT_GT(result["ap50"].get<double>(), 0.5);

  // Same inputs, same bytes.
  const auto again = (work / "dets2.json").string();
  ASSERT_EQ(run_cli({"decode", "--maps", (work / "maps").string(), "--out", again}).code, 0);
  EXPECT_EQ(testing::read_file(dets_path), testing::read_file(again));
}

TEST_F(CliTest, EvalRejectsUnknownPair) {
  TempDir work;
  std::ofstream(work / "d.json") << R"([{"pair_id":"ghost","cx":1,"cy":1,"w":1,"h":1,"score":0.5}])";
  const auto r = run_cli({"eval", "--detections", (work / "d.json").string(), "--manifest", manifest().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ghost"), std::string::npos);
}

TEST_F(CliTest, EncodeRejectsNonStandardImageSize) {
  TempDir dir;
  write_png(dir / "a.png", testing::gradient_image(64, 64));
  std::ofstream(dir / "m.json") << R"({"version":1,"records":[{"pair_id":"small","reference_path":"a.png",)"
                                   R"("test_path":"a.png","boxes":[{"cx":10,"cy":10,"w":4,"h":4}]}]})";
  const auto r = run_cli({"encode", "--manifest", (dir / "m.json").string(), "--out", (dir / "maps").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("small"), std::string::npos);
}

TEST_F(CliTest, InspectRendersPanels) {
  TempDir work;
  const auto png = work / "pair.png";
  ASSERT_EQ(run_cli({"inspect", "--manifest", manifest().string(), "--pair-id", "000001", "--out", png.string()}).code,
            0);
  const auto size = png_size(png);
  EXPECT_EQ(size.height, 512);
  EXPECT_GE(size.width, 1024);
  EXPECT_EQ(run_cli({"inspect", "--manifest", manifest().string(), "--pair-id", "zzz", "--out", png.string()}).code,
            2);
}

}  // namespace
}  // namespace changeforge
