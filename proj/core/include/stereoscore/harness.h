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

#ifndef STEREOSCORE_HARNESS_H_
#define STEREOSCORE_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereoscore/dataset.h"
#include "stereoscore/metrics.h"
#include "stereoscore/model.h"
#include "stereoscore/ops.h"
#include "stereoscore/optim.h"

namespace stereoscore {

// kFull trains all four scores; kNoLrMos drops the per-view loss terms;
// kNoGlobalScore never builds the global head and reports q_stereo.
enum class AblationMode { kFull, kNoGlobalScore, kNoLrMos };

std::string_view AblationName(AblationMode mode);
AblationMode ParseAblationMode(std::string_view name);

struct LossWeights {
  double global = 2.0;
  double stereo = 1.0;
  double left = 1.0;
  double right = 1.0;
};

LossWeights WeightsFor(AblationMode mode);

// Weighted sum of mean-L1 terms:
//   w_g*|q_g - m_s| + w_s*|q_s - m_s| + w_l*|q_l - m_l| + w_r*|q_r - m_r|.
// Terms with zero weight are left out of the graph entirely. q_global may be
// undefined only when its weight is zero.
template <typename T>
BasicTensor<T> WeightedL1(const BasicTensor<T>& q_global,
                          const BasicTensor<T>& q_stereo,
                          const BasicTensor<T>& q_left,
                          const BasicTensor<T>& q_right,
                          const BasicTensor<T>& m_stereo,
                          const BasicTensor<T>& m_left,
                          const BasicTensor<T>& m_right,
                          const LossWeights& weights) {
  BasicTensor<T> total;
  auto accumulate = [&](double weight, const BasicTensor<T>& q,
                        const BasicTensor<T>& m) {
    if (weight == 0.0) return;
    BasicTensor<T> term = L1Loss(q, m);
    if (weight != 1.0) term = Scale(term, static_cast<T>(weight));
    total = total.defined() ? Add(total, term) : term;
  };
  accumulate(weights.global, q_global, m_stereo);
  accumulate(weights.stereo, q_stereo, m_stereo);
  accumulate(weights.left, q_left, m_left);
  accumulate(weights.right, q_right, m_right);
  return total;
}

// Multi-score training loss for a batch; mean reduction over the batch.
Tensor MultiscoreLoss(const ScoreBatch& scores,
                      std::span<const PatchLabels> labels, AblationMode mode);

struct TrainConfig {
  SgdConfig sgd;
  int epochs = 1;
  std::uint64_t seed = 0;
  AblationMode ablation = AblationMode::kFull;
  // Optional step decay: lr *= gamma every lr_step_epochs (0 = constant lr).
  int lr_step_epochs = 0;
  double lr_step_gamma = 0.1;

  void Validate() const;
  double LearningRateAt(int epoch) const;
};

struct TrainResult {
  MultiScoreNet net;
  std::vector<double> epoch_losses;  // per-patch mean loss of each epoch
  std::size_t train_images = 0;
  std::size_t train_patches = 0;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// Pools the patches of every training image, shuffles them each epoch with a
// seeded generator and takes one SGD step per mini-batch (the final short
// batch is kept). Single-threaded and bit-reproducible for a fixed config.
TrainResult Train(const DatasetManifest& manifest, const SplitPlan& split,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

// Anything that maps patch pairs to score quads.
class QualityPredictor {
 public:
  virtual ~QualityPredictor() = default;
  virtual std::vector<ScoreQuad> ScorePatches(const PatchBatch& batch) const = 0;
};

class NetworkPredictor : public QualityPredictor {
 public:
  explicit NetworkPredictor(const MultiScoreNet& net, std::size_t chunk = 128)
      : net_(net), chunk_(chunk) {}
  std::vector<ScoreQuad> ScorePatches(const PatchBatch& batch) const override;

 private:
  const MultiScoreNet& net_;
  std::size_t chunk_;
};

struct ImagePrediction {
  std::string id;
  ScoreQuad scores;
  double reported = 0.0;  // q_global, or q_stereo without the global head
  double mos_stereo = 0.0;
  std::size_t patches = 0;
};

struct Evaluation {
  std::vector<ImagePrediction> predictions;  // in test_ids order
  ReportRow row;
};

double ReportedQuality(const ScoreQuad& scores, AblationMode mode);

// Tiles every test image, scores all patches, averages per image and
// correlates the reported quality with mos_stereo. Images are spread over
// `threads` workers; results are assembled in test_ids order.
Evaluation Evaluate(const QualityPredictor& predictor,
                    const DatasetManifest& manifest,
                    std::span<const std::string> test_ids, AblationMode mode,
                    std::string partition = "eval", std::string repeat = "0",
                    int threads = 1);

struct RunRecord {
  TrainConfig config;
  SplitPlan split;
  std::vector<double> epoch_losses;
  Evaluation evaluation;
  std::filesystem::path checkpoint;  // empty when nothing was written
};

// Persists config.txt, split.csv, loss.csv, report.csv, predictions.csv and
// model.msqa under `dir`, and sets record->checkpoint.
void WriteRunRecord(RunRecord* record, const MultiScoreNet& net,
                    std::string_view split_csv, const std::filesystem::path& dir);

std::string ConfigSnapshot(const TrainConfig& config, const SplitPlan& split);
std::string LossCsv(std::span<const double> epoch_losses);
std::string PredictionsCsv(std::span<const ImagePrediction> predictions);

// "80-20" for 0.8, and so on.
std::string PartitionLabel(double train_fraction);

struct ProtocolResult {
  std::vector<RunRecord> runs;
  EvalReport report;
};

// `repeats` independent scene-disjoint splits, each trained and evaluated.
// When out_dir is nonempty, writes repeat_<k>/ run records plus report.csv.
ProtocolResult RunProtocol(const DatasetManifest& manifest,
                           double train_fraction, int repeats,
                           const TrainConfig& config,
                           const std::filesystem::path& out_dir = {},
                           int threads = 1,
                           const EpochCallback& on_epoch = nullptr);

// Trains on every sample of train_manifest and evaluates on every sample of
// test_manifest. Refuses (ConfigError) when both manifests share a name.
RunRecord CrossDatabase(const DatasetManifest& train_manifest,
                        const DatasetManifest& test_manifest,
                        const TrainConfig& config,
                        const std::filesystem::path& out_dir = {},
                        int threads = 1,
                        const EpochCallback& on_epoch = nullptr);

struct ImageScore {
  ScoreQuad scores;
  std::size_t patches = 0;
};

ImageScore ScoreImage(const MultiScoreNet& net,
                      const std::filesystem::path& left_path,
                      const std::filesystem::path& right_path);

}  // namespace stereoscore

#endif  // STEREOSCORE_HARNESS_H_
