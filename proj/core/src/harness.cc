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

#include "stereoscore/harness.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include "stereoscore/errors.h"
#include "text_util.h"

namespace stereoscore {
namespace {

using internal::FormatDouble;

Tensor LabelColumn(std::span<const PatchLabels> labels,
                   float PatchLabels::*field) {
  std::vector<float> values(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) values[i] = labels[i].*field;
  return Tensor::FromVector({labels.size(), 1}, std::move(values));
}

std::string RepeatTag(int repeat) {
  std::string s = std::to_string(repeat);
  return "repeat_" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

}  // namespace

std::string_view AblationName(AblationMode mode) {
  switch (mode) {
    case AblationMode::kFull: return "full";
    case AblationMode::kNoGlobalScore: return "no_global_score";
    case AblationMode::kNoLrMos: return "no_lr_mos";
  }
  return "unknown";
}

AblationMode ParseAblationMode(std::string_view name) {
  for (AblationMode m : {AblationMode::kFull, AblationMode::kNoGlobalScore,
                         AblationMode::kNoLrMos}) {
    if (AblationName(m) == name) return m;
  }
  throw ConfigError("unknown ablation mode '" + std::string(name) +
                    "' (expected full, no_global_score or no_lr_mos)");
}

LossWeights WeightsFor(AblationMode mode) {
  LossWeights w;
  switch (mode) {
    case AblationMode::kFull:
      break;
    case AblationMode::kNoGlobalScore:
      w.global = 0.0;
      break;
    case AblationMode::kNoLrMos:
      w.left = 0.0;
      w.right = 0.0;
      break;
  }
  return w;
}

Tensor MultiscoreLoss(const ScoreBatch& scores,
                      std::span<const PatchLabels> labels, AblationMode mode) {
  const std::size_t n = scores.stereo.dim(0);
  if (labels.size() != n) {
    throw DimensionError("loss: " + std::to_string(n) + " predictions but " +
                         std::to_string(labels.size()) + " label rows");
  }
  const LossWeights weights = WeightsFor(mode);
  if (weights.global != 0.0 && !scores.global.defined()) {
    throw StateError("loss mode '" + std::string(AblationName(mode)) +
                     "' needs the global head, which this network lacks");
  }
  return WeightedL1(scores.global, scores.stereo, scores.left, scores.right,
                    LabelColumn(labels, &PatchLabels::mos_stereo),
                    LabelColumn(labels, &PatchLabels::mos_left),
                    LabelColumn(labels, &PatchLabels::mos_right), weights);
}

void TrainConfig::Validate() const {
  sgd.Validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (lr_step_epochs < 0) throw ConfigError("lr_step_epochs must be >= 0");
  if (!(lr_step_gamma > 0.0 && lr_step_gamma <= 1.0)) {
    throw ConfigError("lr_step_gamma must be in (0,1]");
  }
}

double TrainConfig::LearningRateAt(int epoch) const {
  if (lr_step_epochs == 0) return sgd.learning_rate;
  return sgd.learning_rate * std::pow(lr_step_gamma, epoch / lr_step_epochs);
}

TrainResult Train(const DatasetManifest& manifest, const SplitPlan& split,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (split.train_ids.empty()) throw DataError("training set is empty");

  TrainResult result{
      MultiScoreNet::Build(config.seed,
                           config.ablation != AblationMode::kNoGlobalScore),
      {}, 0, 0};
  PatchPool pool;
  for (const std::string& id : split.train_ids) {
    pool.Append(manifest.LoadSample(manifest.sample(id)));
  }
  result.train_images = split.train_ids.size();
  result.train_patches = pool.size();

  std::seed_seq seq = {static_cast<std::uint32_t>(config.seed),
                       static_cast<std::uint32_t>(config.seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(pool.size());
  const std::size_t batch_size = static_cast<std::size_t>(config.sgd.batch_size);
  MultiScoreNet& net = result.net;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    SgdConfig sgd = config.sgd;
    sgd.learning_rate = config.LearningRateAt(epoch);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> indices(order.data() + start, end - start);
      const std::string where = "epoch " + std::to_string(epoch + 1) + ", batch " +
                                std::to_string(batch_index + 1);
      try {
        const PatchBatch batch = pool.Gather(indices);
        net.ZeroGrad();
        const ScoreBatch scores = net.Forward(batch.left, batch.right);
        const Tensor loss = MultiscoreLoss(scores, batch.labels, config.ablation);
        const double value = loss.item();
        if (!std::isfinite(value)) throw NumericError("loss is not finite");
        Backward(loss);
        SgdStep(net.parameters(), sgd);
        loss_sum += value * static_cast<double>(indices.size());
      } catch (const NumericError& e) {
        throw NumericError("training diverged at " + where + ": " + e.what());
      }
    }
    const double mean = loss_sum / static_cast<double>(order.size());
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return result;
}

std::vector<ScoreQuad> NetworkPredictor::ScorePatches(const PatchBatch& batch) const {
  NoGradGuard no_grad;
  std::vector<ScoreQuad> out;
  out.reserve(batch.size());
  const std::size_t n = batch.size();
  const std::size_t per_patch = 3 * kPatchSize * kPatchSize;
  for (std::size_t start = 0; start < n; start += chunk_) {
    const std::size_t count = std::min(chunk_, n - start);
    Tensor left = batch.left, right = batch.right;
    if (count != n) {
      const Shape shape = {count, 3, kPatchSize, kPatchSize};
      const auto l = batch.left.data().subspan(start * per_patch, count * per_patch);
      const auto r = batch.right.data().subspan(start * per_patch, count * per_patch);
      left = Tensor::FromVector(shape, {l.begin(), l.end()});
      right = Tensor::FromVector(shape, {r.begin(), r.end()});
    }
    const ScoreBatch scores = net_.Forward(left, right);
    for (std::size_t i = 0; i < count; ++i) out.push_back(scores.Quad(i));
  }
  return out;
}

double ReportedQuality(const ScoreQuad& scores, AblationMode mode) {
  return mode == AblationMode::kNoGlobalScore ? scores.q_stereo : scores.q_global;
}

Evaluation Evaluate(const QualityPredictor& predictor,
                    const DatasetManifest& manifest,
                    std::span<const std::string> test_ids, AblationMode mode,
                    std::string partition, std::string repeat, int threads) {
  if (test_ids.empty()) throw DataError("test set is empty");
  Evaluation eval;
  eval.predictions.resize(test_ids.size());
  auto score_one = [&](std::size_t i) {
    const SampleRecord& record = manifest.sample(test_ids[i]);
    const PatchBatch batch = TilePatches(manifest.LoadSample(record));
    const std::vector<ScoreQuad> quads = predictor.ScorePatches(batch);
    ImagePrediction& p = eval.predictions[i];
    p.id = record.id;
    p.scores = AggregateScore(quads);
    p.reported = ReportedQuality(p.scores, mode);
    p.mos_stereo = record.mos_stereo;
    p.patches = batch.size();
  };

  const std::size_t workers =
      std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, test_ids.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < test_ids.size(); ++i) score_one(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < test_ids.size(); i += workers) score_one(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<double> predicted, subjective;
  for (const ImagePrediction& p : eval.predictions) {
    predicted.push_back(p.reported);
    subjective.push_back(p.mos_stereo);
  }
  eval.row = ComputeReportRow(std::move(partition), std::move(repeat), predicted,
                              subjective);
  return eval;
}

std::string ConfigSnapshot(const TrainConfig& config, const SplitPlan& split) {
  std::ostringstream out;
  out << "lr=" << FormatDouble(config.sgd.learning_rate) << '\n'
      << "momentum=" << FormatDouble(config.sgd.momentum) << '\n'
      << "weight_decay=" << FormatDouble(config.sgd.weight_decay) << '\n'
      << "batch_size=" << config.sgd.batch_size << '\n'
      << "epochs=" << config.epochs << '\n'
      << "seed=" << config.seed << '\n'
      << "ablation=" << AblationName(config.ablation) << '\n'
      << "global_head="
      << (config.ablation == AblationMode::kNoGlobalScore ? "absent" : "built")
      << '\n'
      << "reported_score="
      << (config.ablation == AblationMode::kNoGlobalScore ? "q_stereo" : "q_global")
      << '\n'
      << "lr_step_epochs=" << config.lr_step_epochs << '\n'
      << "lr_step_gamma=" << FormatDouble(config.lr_step_gamma) << '\n'
      << "train_fraction=" << FormatDouble(split.train_fraction) << '\n'
      << "repeat=" << split.repeat_index << '\n'
      << "split_seed=" << split.seed << '\n'
      << "train_images=" << split.train_ids.size() << '\n'
      << "test_images=" << split.test_ids.size() << '\n';
  return out.str();
}

std::string LossCsv(std::span<const double> epoch_losses) {
  std::ostringstream out;
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
    out << (i + 1) << ',' << FormatDouble(epoch_losses[i]) << '\n';
  }
  return out.str();
}

std::string PredictionsCsv(std::span<const ImagePrediction> predictions) {
  std::ostringstream out;
  out << "id,q_left,q_right,q_stereo,q_global,reported,mos_stereo,patches\n";
  for (const ImagePrediction& p : predictions) {
    out << p.id << ',' << FormatDouble(p.scores.q_left) << ','
        << FormatDouble(p.scores.q_right) << ',' << FormatDouble(p.scores.q_stereo)
        << ',' << FormatDouble(p.scores.q_global) << ',' << FormatDouble(p.reported)
        << ',' << FormatDouble(p.mos_stereo) << ',' << p.patches << '\n';
  }
  return out.str();
}

std::string PartitionLabel(double train_fraction) {
  const long train = std::lround(train_fraction * 100.0);
  return std::to_string(train) + "-" + std::to_string(100 - train);
}

void WriteRunRecord(RunRecord* record, const MultiScoreNet& net,
                    std::string_view split_csv, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  internal::WriteTextFile(dir / "config.txt",
                          ConfigSnapshot(record->config, record->split));
  internal::WriteTextFile(dir / "split.csv", split_csv);
  internal::WriteTextFile(dir / "loss.csv", LossCsv(record->epoch_losses));
  EvalReport report{{record->evaluation.row}};
  internal::WriteTextFile(dir / "report.csv", report.ToCsv());
  internal::WriteTextFile(dir / "predictions.csv",
                          PredictionsCsv(record->evaluation.predictions));
  record->checkpoint = dir / "model.msqa";
  SaveCheckpoint(net, record->checkpoint);
}

ProtocolResult RunProtocol(const DatasetManifest& manifest,
                           double train_fraction, int repeats,
                           const TrainConfig& config,
                           const std::filesystem::path& out_dir, int threads,
                           const EpochCallback& on_epoch) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  ProtocolResult result;
  const std::string partition = PartitionLabel(train_fraction);
  for (int repeat = 0; repeat < repeats; ++repeat) {
    RunRecord record;
    record.config = config;
    record.split = MakeSplit(manifest, train_fraction, repeat, config.seed);
    TrainResult trained = Train(manifest, record.split, config, on_epoch);
    record.epoch_losses = trained.epoch_losses;
    record.evaluation =
        Evaluate(NetworkPredictor(trained.net), manifest, record.split.test_ids,
                 config.ablation, partition, std::to_string(repeat), threads);
    if (!out_dir.empty()) {
      WriteRunRecord(&record, trained.net, SplitCsv(manifest, record.split),
                     out_dir / RepeatTag(repeat));
    }
    result.report.rows.push_back(record.evaluation.row);
    result.runs.push_back(std::move(record));
  }
  if (!out_dir.empty()) {
    internal::WriteTextFile(out_dir / "report.csv", result.report.ToCsv());
  }
  return result;
}

RunRecord CrossDatabase(const DatasetManifest& train_manifest,
                        const DatasetManifest& test_manifest,
                        const TrainConfig& config,
                        const std::filesystem::path& out_dir, int threads,
                        const EpochCallback& on_epoch) {
  if (train_manifest.name() == test_manifest.name()) {
    throw ConfigError("cross-database run needs two different manifests, got '" +
                      train_manifest.name() + "' twice");
  }
  RunRecord record;
  record.config = config;
  record.split = TrainOnAll(train_manifest);
  TrainResult trained = Train(train_manifest, record.split, config, on_epoch);
  record.epoch_losses = trained.epoch_losses;
  std::vector<std::string> test_ids;
  for (const SampleRecord& r : test_manifest.samples()) test_ids.push_back(r.id);
  record.evaluation = Evaluate(NetworkPredictor(trained.net), test_manifest,
                               test_ids, config.ablation, "cross", "0", threads);
  if (!out_dir.empty()) {
    std::string split_csv = SplitCsv(train_manifest, record.split);
    SplitPlan test_plan;
    test_plan.test_ids = test_ids;
    const std::string test_csv = SplitCsv(test_manifest, test_plan);
    split_csv += test_csv.substr(test_csv.find('\n') + 1);
    WriteRunRecord(&record, trained.net, split_csv, out_dir);
  }
  return record;
}

ImageScore ScoreImage(const MultiScoreNet& net,
                      const std::filesystem::path& left_path,
                      const std::filesystem::path& right_path) {
  StereoSample sample;
  sample.record.id = "input";
  sample.left = ReadPpm(left_path);
  sample.right = ReadPpm(right_path);
  if (sample.left.width != sample.right.width ||
      sample.left.height != sample.right.height) {
    throw DataError("left image " + left_path.string() + " is " +
                    std::to_string(sample.left.width) + "x" +
                    std::to_string(sample.left.height) + " but right image " +
                    right_path.string() + " is " +
                    std::to_string(sample.right.width) + "x" +
                    std::to_string(sample.right.height));
  }
  const PatchBatch batch = TilePatches(sample);
  const auto quads = NetworkPredictor(net).ScorePatches(batch);
  return {AggregateScore(quads), batch.size()};
}

}  // namespace stereoscore
