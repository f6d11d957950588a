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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stereoscore/dataset.h"
#include "stereoscore/errors.h"
#include "stereoscore/harness.h"
#include "stereoscore/metrics.h"
#include "stereoscore/model.h"

namespace fs = std::filesystem;
using namespace stereoscore;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Raised for flag combinations CLI11 cannot validate on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

struct TrainFlags {
  int epochs = 0;
  std::uint64_t seed = 0;
  std::string ablation = "full";
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int lr_step_epochs = 0;
  double lr_step_gamma = 0.1;
  int threads = 1;
  bool quiet = false;

  void Register(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs")->required()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed for init, shuffling and splits")
        ->envname("STEREOSCORE_SEED")->capture_default_str();
    cmd->add_option("--ablation", ablation, "Loss/score configuration")
        ->check(CLI::IsMember({"full", "no_global_score", "no_lr_mos"}))
        ->capture_default_str();
    cmd->add_option("--lr", lr, "Initial learning rate")->capture_default_str();
    cmd->add_option("--momentum", momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--weight-decay", weight_decay, "L2 weight decay")
        ->capture_default_str();
    cmd->add_option("--batch-size", batch_size, "Patches per mini-batch")
        ->capture_default_str();
    cmd->add_option("--lr-step-epochs", lr_step_epochs,
                    "Multiply lr by --lr-step-gamma every N epochs (0 = constant)")
        ->capture_default_str();
    cmd->add_option("--lr-step-gamma", lr_step_gamma, "Step decay factor")
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Evaluation worker threads")
        ->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--quiet", quiet, "Suppress per-epoch progress");
  }

  TrainConfig Config() const {
    TrainConfig c;
    c.sgd.learning_rate = lr;
    c.sgd.momentum = momentum;
    c.sgd.weight_decay = weight_decay;
    c.sgd.batch_size = batch_size;
    c.epochs = epochs;
    c.seed = seed;
    c.ablation = ParseAblationMode(ablation);
    c.lr_step_epochs = lr_step_epochs;
    c.lr_step_gamma = lr_step_gamma;
    c.Validate();
    return c;
  }

  EpochCallback Progress(std::string prefix) const {
    if (quiet) return nullptr;
    return [prefix = std::move(prefix)](int epoch, double loss) {
      std::cerr << prefix << "epoch " << epoch << " loss " << Num(loss) << '\n';
    };
  }
};

int CmdSynth(std::size_t scenes, std::size_t levels, const std::string& size,
             std::uint64_t seed, const fs::path& out) {
  SynthConfig config;
  unsigned w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(size.c_str(), "%ux%u%c", &w, &h, &tail) != 2) {
    throw UsageError("--size must look like WxH, got '" + size + "'");
  }
  if (w < kPatchSize || h < kPatchSize) {
    throw UsageError("--size " + size + " is below the 32x32 patch size");
  }
  config.scenes = static_cast<int>(scenes);
  config.levels = static_cast<int>(levels);
  config.width = w;
  config.height = h;
  config.seed = seed;
  const DatasetManifest m = GenerateSynthetic(config, out);
  std::cout << "wrote " << m.size() << " samples from " << m.ReferenceIds().size()
            << " scenes to " << (out / "manifest.csv").string() << '\n';
  return 0;
}

int CmdTrain(const fs::path& manifest_path, double fraction, int repeats,
             const TrainFlags& flags, const fs::path& out) {
  const DatasetManifest manifest = DatasetManifest::Load(manifest_path);
  const TrainConfig config = flags.Config();
  std::cerr << "training " << AblationName(config.ablation) << " on "
            << manifest.size() << " samples, " << repeats << " repeat(s)\n";
  int repeat = 0;
  EpochCallback progress;
  if (!flags.quiet) {
    progress = [&repeat, epochs = config.epochs](int epoch, double loss) {
      std::cerr << "repeat " << repeat << " epoch " << epoch << "/" << epochs
                << " loss " << Num(loss) << '\n';
      if (epoch == epochs) ++repeat;
    };
  }
  const ProtocolResult result = RunProtocol(manifest, fraction, repeats, config,
                                            out, flags.threads, progress);
  std::cout << result.report.ToTable();
  return 0;
}

std::vector<std::string> EvalIds(const DatasetManifest& manifest,
                                 const std::string& split_path) {
  if (split_path.empty()) {
    std::vector<std::string> ids;
    for (const SampleRecord& r : manifest.samples()) ids.push_back(r.id);
    return ids;
  }
  SplitPlan plan = ParseSplitCsv(ReadFile(split_path));
  for (const std::string& id : plan.test_ids) manifest.sample(id);
  return plan.test_ids;
}

// Per-image scores from an `id,score` CSV, bypassing the network.
Evaluation EvaluatePredictionFile(const DatasetManifest& manifest,
                                  const std::vector<std::string>& ids,
                                  const fs::path& path) {
  std::istringstream in(ReadFile(path));
  std::string line;
  std::map<std::string, double> scores;
  std::getline(in, line);
  if (line.rfind("id,score", 0) != 0) {
    throw FormatError(path.string() + ": expected header 'id,score'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      scores[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed row '" + line + "'");
    }
  }
  Evaluation eval;
  std::vector<double> predicted, subjective;
  for (const std::string& id : ids) {
    const auto it = scores.find(id);
    if (it == scores.end()) {
      throw DataError(path.string() + ": no prediction for sample '" + id + "'");
    }
    const SampleRecord& record = manifest.sample(id);
    ImagePrediction p;
    p.id = id;
    p.scores = {it->second, it->second, it->second, it->second};
    p.reported = it->second;
    p.mos_stereo = record.mos_stereo;
    eval.predictions.push_back(p);
    predicted.push_back(p.reported);
    subjective.push_back(p.mos_stereo);
  }
  eval.row = ComputeReportRow("eval", "0", predicted, subjective);
  return eval;
}

int CmdEval(const std::string& checkpoint, const std::string& predictions,
            const fs::path& manifest_path, const std::string& split_path,
            int threads, const fs::path& out) {
  if (checkpoint.empty() == predictions.empty()) {
    throw UsageError("eval needs exactly one of --checkpoint or --predictions");
  }
  const DatasetManifest manifest = DatasetManifest::Load(manifest_path);
  const std::vector<std::string> ids = EvalIds(manifest, split_path);
  Evaluation eval;
  if (!predictions.empty()) {
    eval = EvaluatePredictionFile(manifest, ids, predictions);
  } else {
    const MultiScoreNet net = LoadCheckpoint(checkpoint);
    const AblationMode mode =
        net.has_global_head() ? AblationMode::kFull : AblationMode::kNoGlobalScore;
    eval = Evaluate(NetworkPredictor(net), manifest, ids, mode, "eval", "0",
                    threads);
  }
  const EvalReport report{{eval.row}};
  WriteFile(out / "report.csv", report.ToCsv());
  WriteFile(out / "predictions.csv", PredictionsCsv(eval.predictions));
  std::cout << report.ToTable();
  return 0;
}

int CmdCrossdb(const fs::path& train_path, const fs::path& test_path,
               const TrainFlags& flags, const fs::path& out) {
  std::error_code ec;
  if (fs::equivalent(train_path, test_path, ec)) {
    throw UsageError("--train-manifest and --test-manifest name the same file: " +
                     train_path.string());
  }
  const DatasetManifest train = DatasetManifest::Load(train_path);
  const DatasetManifest test = DatasetManifest::Load(test_path);
  const TrainConfig config = flags.Config();
  const RunRecord record = CrossDatabase(train, test, config, out, flags.threads,
                                         flags.Progress(""));
  const EvalReport report{{record.evaluation.row}};
  WriteFile(out / "report.csv", report.ToCsv());
  std::cout << report.ToTable();
  return 0;
}

int CmdScore(const fs::path& checkpoint, const fs::path& left,
             const fs::path& right, bool json) {
  const MultiScoreNet net = LoadCheckpoint(checkpoint);
  const ImageScore s = ScoreImage(net, left, right);
  if (json) {
    const nlohmann::json j = {{"q_left", s.scores.q_left},
                              {"q_right", s.scores.q_right},
                              {"q_stereo", s.scores.q_stereo},
                              {"q_global", s.scores.q_global},
                              {"patches", s.patches}};
    std::cout << j.dump() << '\n';
  } else {
    std::cout << "q_left: " << Num(s.scores.q_left) << '\n'
              << "q_right: " << Num(s.scores.q_right) << '\n'
              << "q_stereo: " << Num(s.scores.q_stereo) << '\n'
              << "q_global: " << Num(s.scores.q_global) << '\n'
              << "patches: " << s.patches << '\n';
  }
  return 0;
}

int CmdAnalyze(const fs::path& manifest_path, const fs::path& out) {
  const DatasetManifest manifest = DatasetManifest::Load(manifest_path);
  const std::vector<MismatchRow> rows = AnalyzeMismatch(manifest.samples());
  WriteFile(out, MismatchCsv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"No-reference stereoscopic image quality: train, evaluate, score"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::size_t scenes = 6, levels = 3;
  std::string size = "96x96";
  std::uint64_t synth_seed = 0;
  fs::path synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic stereo database");
  synth->add_option("--scenes", scenes, "Reference scenes")
      ->check(CLI::Range(2, 99))->capture_default_str();
  synth->add_option("--levels", levels, "Distortion levels per type")
      ->check(CLI::Range(1, 9))->capture_default_str();
  synth->add_option("--size", size, "Image size WxH (each side >= 32)")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")
      ->envname("STEREOSCORE_SEED")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  fs::path train_manifest, train_out;
  double fraction = 0.8;
  int repeats = 10;
  TrainFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "Repeated scene-disjoint train/test runs");
  train->add_option("--manifest", train_manifest, "Manifest CSV")->required();
  train->add_option("--fraction", fraction, "Training fraction of samples")
      ->check(CLI::IsMember({0.8, 0.7, 0.5}))->capture_default_str();
  train->add_option("--repeats", repeats, "Independent splits")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train_flags.Register(train);
  train->add_option("--out", train_out, "Run directory")->required();

  std::string eval_checkpoint, eval_predictions, eval_split;
  fs::path eval_manifest, eval_out;
  int eval_threads = 1;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval->add_option("--checkpoint", eval_checkpoint, "MSQA checkpoint");
  eval->add_option("--predictions", eval_predictions,
                   "Per-image `id,score` CSV used instead of a checkpoint");
  eval->add_option("--manifest", eval_manifest, "Manifest CSV")->required();
  eval->add_option("--split", eval_split,
                   "Split CSV; its test rows are evaluated (default: all samples)");
  eval->add_option("--threads", eval_threads, "Evaluation worker threads")
      ->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--out", eval_out, "Output directory")->required();

  fs::path cross_train, cross_test, cross_out;
  TrainFlags cross_flags;
  CLI::App* crossdb = app.add_subcommand(
      "crossdb", "Train on one database, evaluate on another");
  crossdb->add_option("--train-manifest", cross_train, "Training manifest")->required();
  crossdb->add_option("--test-manifest", cross_test, "Test manifest")->required();
  cross_flags.Register(crossdb);
  crossdb->add_option("--out", cross_out, "Run directory")->required();

  fs::path score_checkpoint, score_left, score_right;
  bool score_json = false;
  CLI::App* score = app.add_subcommand("score", "Score one stereo pair");
  score->add_option("--checkpoint", score_checkpoint, "MSQA checkpoint")->required();
  score->add_option("--left", score_left, "Left view (binary PPM)")->required();
  score->add_option("--right", score_right, "Right view (binary PPM)")->required();
  score->add_flag("--json", score_json, "Single-line JSON with sorted keys");

  fs::path analyze_manifest, analyze_out;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Stereo vs mean-of-views MOS mismatch per sample");
  analyze->add_option("--manifest", analyze_manifest, "Manifest CSV")->required();
  analyze->add_option("--out", analyze_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) return CmdSynth(scenes, levels, size, synth_seed, synth_out);
    if (train->parsed()) {
      return CmdTrain(train_manifest, fraction, repeats, train_flags, train_out);
    }
    if (eval->parsed()) {
      return CmdEval(eval_checkpoint, eval_predictions, eval_manifest, eval_split,
                     eval_threads, eval_out);
    }
    if (crossdb->parsed()) return CmdCrossdb(cross_train, cross_test, cross_flags, cross_out);
    if (score->parsed()) return CmdScore(score_checkpoint, score_left, score_right, score_json);
    if (analyze->parsed()) return CmdAnalyze(analyze_manifest, analyze_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
