// Copyright 2026 The StereoScore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "stereoscore/dataset.h"
#include "stereoscore/ppm.h"
#include "test_util.h"

namespace stereoscore {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

Outcome RunCli(const std::string& args) {
  const std::string command = std::string(STEREOSCORE_CLI_PATH) + " " + args + " 2>&1";
  Outcome out;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return out;
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) out.output += buf;
  const int status = pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void Spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::ScratchDir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }

  // Small synthetic database: 6 scenes x 13 pairs of 32x32 images.
  fs::path Synth(const std::string& name, int seed = 1) {
    const fs::path out = dir_ / name;
    const Outcome r = RunCli("synth --scenes 6 --levels 2 --size 32x32 --seed " +
                          std::to_string(seed) + " --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    return out / "manifest.csv";
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(RunCli("--help").code, 0);
  EXPECT_EQ(RunCli("").code, 1);
  EXPECT_EQ(RunCli("frobnicate").code, 1);
  EXPECT_EQ(RunCli("train --manifest x.csv --out y").code, 1);  // --epochs missing
}

TEST_F(CliTest, SynthIsDeterministicAndValidatesSize) {
  const fs::path a = Synth("a", 7), b = Synth("b", 7), c = Synth("c", 8);
  EXPECT_EQ(Slurp(a), Slurp(b));
  EXPECT_EQ(Slurp(a.parent_path() / "images" / "s00_pristine_L.ppm"),
            Slurp(b.parent_path() / "images" / "s00_pristine_L.ppm"));
  EXPECT_NE(Slurp(a.parent_path() / "images" / "s00_pristine_L.ppm"),
            Slurp(c.parent_path() / "images" / "s00_pristine_L.ppm"));
  const Outcome small = RunCli("synth --size 16x16 --out " + (dir_ / "d").string());
  EXPECT_EQ(small.code, 1) << small.output;
  EXPECT_NE(small.output.find("16x16"), std::string::npos) << small.output;
  EXPECT_EQ(RunCli("synth --size 96 --out " + (dir_ / "e").string()).code, 1);
}

TEST_F(CliTest, TrainRecordsReferenceDefaultsAndSplit) {
  const fs::path manifest = Synth("db");
  const fs::path out = dir_ / "run";
  const Outcome r = RunCli("train --manifest " + manifest.string() +
                        " --repeats 1 --fraction 0.5 --epochs 1 --seed 3 --quiet --out " +
                        out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string config = Slurp(out / "repeat_00" / "config.txt");
  for (const char* line : {"lr=0.001\n", "momentum=0.9\n", "weight_decay=0.0001\n",
                           "batch_size=128\n", "epochs=1\n", "seed=3\n",
                           "train_fraction=0.5\n"}) {
    EXPECT_NE(config.find(line), std::string::npos) << line << config;
  }
  const SplitPlan plan = ParseSplitCsv(Slurp(out / "repeat_00" / "split.csv"));
  EXPECT_EQ(plan.train_ids.size(), 39u);
  EXPECT_EQ(plan.test_ids.size(), 39u);
  EXPECT_TRUE(fs::exists(out / "report.csv"));
  EXPECT_EQ(RunCli("train --manifest " + manifest.string() +
                " --fraction 0.6 --epochs 1 --out " + (dir_ / "bad").string())
                .code,
            1);
  EXPECT_EQ(RunCli("train --manifest " + manifest.string() +
                " --ablation none --epochs 1 --out " + (dir_ / "bad").string())
                .code,
            1);
  EXPECT_EQ(RunCli("train --manifest " + (dir_ / "missing.csv").string() +
                " --epochs 1 --out " + (dir_ / "bad").string())
                .code,
            2);

  // The checkpoint evaluates on the recorded split.
  const fs::path eval_out = dir_ / "eval";
  const Outcome e = RunCli("eval --checkpoint " + (out / "repeat_00" / "model.msqa").string() +
                        " --manifest " + manifest.string() + " --split " +
                        (out / "repeat_00" / "split.csv").string() + " --out " +
                        eval_out.string());
  ASSERT_EQ(e.code, 0) << e.output;
  EXPECT_NE(Slurp(eval_out / "report.csv").find("\neval,0,39,"), std::string::npos);
}

TEST_F(CliTest, EvalPredictionsFile) {
  const fs::path manifest = Synth("db");
  const DatasetManifest m = DatasetManifest::Load(manifest);
  std::string perfect = "id,score\n";
  for (const SampleRecord& r : m.samples()) {
    perfect += r.id + "," + std::to_string(r.mos_stereo) + "\n";
  }
  Spit(dir_ / "perfect.csv", perfect);
  const Outcome r = RunCli("eval --predictions " + (dir_ / "perfect.csv").string() +
                        " --manifest " + manifest.string() + " --out " +
                        (dir_ / "eval").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string report = Slurp(dir_ / "eval" / "report.csv");
  EXPECT_NE(report.find("\neval,0,78,1,1,0\n"), std::string::npos) << report;
  EXPECT_EQ(Slurp(dir_ / "eval" / "predictions.csv").substr(0, 3), "id,");

  Spit(dir_ / "partial.csv", "id,score\n" + m.samples()[0].id + ",50\n");
  const Outcome partial = RunCli("eval --predictions " + (dir_ / "partial.csv").string() +
                              " --manifest " + manifest.string() + " --out " +
                              (dir_ / "eval2").string());
  EXPECT_EQ(partial.code, 2);
  EXPECT_NE(partial.output.find(m.samples()[1].id), std::string::npos) << partial.output;
  EXPECT_EQ(RunCli("eval --manifest " + manifest.string() + " --out " + (dir_ / "e3").string())
                .code,
            1);
}

TEST_F(CliTest, CrossDatabaseNeedsTwoManifests) {
  const fs::path a = Synth("a", 1);
  const Outcome same = RunCli("crossdb --train-manifest " + a.string() + " --test-manifest " +
                           a.string() + " --epochs 1 --out " + (dir_ / "x").string());
  EXPECT_EQ(same.code, 1) << same.output;
  EXPECT_NE(same.output.find("same"), std::string::npos) << same.output;
}

TEST_F(CliTest, ScoreReportsPatchCountAndJson) {
  std::mt19937_64 rng(3);
  WritePpm(testing::RandomImage(1920, 1080, rng), dir_ / "l.ppm");
  WritePpm(testing::RandomImage(1920, 1080, rng), dir_ / "r.ppm");
  WritePpm(testing::RandomImage(64, 32, rng), dir_ / "small.ppm");
  SaveCheckpoint(MultiScoreNet::Build(1), dir_ / "m.msqa");
  const std::string base = "score --checkpoint " + (dir_ / "m.msqa").string();
  const Outcome r = RunCli(base + " --left " + (dir_ / "l.ppm").string() + " --right " +
                        (dir_ / "r.ppm").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("patches: 1980\n"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("q_global: "), std::string::npos) << r.output;

  const Outcome bad = RunCli(base + " --left " + (dir_ / "l.ppm").string() + " --right " +
                          (dir_ / "small.ppm").string());
  EXPECT_EQ(bad.code, 2) << bad.output;
  EXPECT_NE(bad.output.find("1920x1080"), std::string::npos) << bad.output;
  EXPECT_NE(bad.output.find("64x32"), std::string::npos) << bad.output;

  const Outcome json = RunCli(base + " --json --left " + (dir_ / "small.ppm").string() +
                           " --right " + (dir_ / "small.ppm").string());
  ASSERT_EQ(json.code, 0) << json.output;
  std::size_t last = 0;
  for (const char* key : {"\"patches\":2", "\"q_global\":", "\"q_left\":", "\"q_right\":",
                          "\"q_stereo\":"}) {
    const std::size_t at = json.output.find(key);
    ASSERT_NE(at, std::string::npos) << key << json.output;
    EXPECT_GT(at, last) << key;
    last = at;
  }

  Spit(dir_ / "corrupt.msqa", "not a checkpoint");
  const Outcome corrupt = RunCli("score --checkpoint " + (dir_ / "corrupt.msqa").string() +
                              " --left " + (dir_ / "small.ppm").string() + " --right " +
                              (dir_ / "small.ppm").string());
  EXPECT_EQ(corrupt.code, 2) << corrupt.output;
  EXPECT_NE(corrupt.output.find("corrupt.msqa"), std::string::npos) << corrupt.output;
}

TEST_F(CliTest, AnalyzeWritesSortedMismatch) {
  std::mt19937_64 rng(4);
  fs::create_directories(dir_ / "images");
  std::vector<SampleRecord> records = {testing::MakeRecord("sym", "s1", 60, 60, 60),
                                       testing::MakeRecord("asym", "s2", 80, 30, 30),
                                       testing::MakeRecord("mid", "s2", 70, 40, 48)};
  for (const SampleRecord& r : records) {
    WritePpm(testing::RandomImage(32, 32, rng), dir_ / r.left_path);
    WritePpm(testing::RandomImage(32, 32, rng), dir_ / r.right_path);
  }
  DatasetManifest("m", dir_, records).Save(dir_ / "manifest.csv");
  const Outcome r = RunCli("analyze --manifest " + (dir_ / "manifest.csv").string() +
                        " --out " + (dir_ / "mismatch.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(Slurp(dir_ / "mismatch.csv"),
            "id,mos_left,mos_right,mos_mean,mos_stereo,D\n"
            "asym,80,30,55,30,25\n"
            "mid,70,40,55,48,7\n"
            "sym,60,60,60,60,0\n");
  EXPECT_NE(r.output.find("3 rows"), std::string::npos) << r.output;
}

}  // namespace
}  // namespace stereoscore
