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

#ifndef STEREOSCORE_DATASET_H_
#define STEREOSCORE_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereoscore/model.h"
#include "stereoscore/ppm.h"
#include "stereoscore/tensor.h"

namespace stereoscore {

inline constexpr double kMosMin = 10.0;
inline constexpr double kMosMax = 100.0;

enum class DistortionType { kAwgn, kGblur, kJpeg, kPristine, kSynthetic };

std::string_view DistortionName(DistortionType type);
// Throws DataError on an unknown name.
DistortionType ParseDistortionType(std::string_view name);

// One manifest row. Paths are relative to the manifest file.
struct SampleRecord {
  std::string id;
  std::string left_path;
  std::string right_path;
  double mos_left = 0.0;
  double mos_right = 0.0;
  double mos_stereo = 0.0;
  std::string reference_id;
  DistortionType distortion_type = DistortionType::kPristine;
  double level_left = 0.0;
  double level_right = 0.0;

  bool symmetric() const { return level_left == level_right; }
};

struct StereoSample {
  SampleRecord record;
  RgbImage left;
  RgbImage right;
};

// A database of stereo pairs with per-view and stereo MOS.
//
// CSV layout (header required):
//   id,left_path,right_path,mos_left,mos_right,mos_stereo,reference_id,
//   distortion_type,level_left,level_right
class DatasetManifest {
 public:
  // Validates ids, MOS range, levels and the two-scene minimum. Does not
  // touch the filesystem.
  DatasetManifest(std::string name, std::filesystem::path base_dir,
                  std::vector<SampleRecord> samples);

  // Parses and validates, and additionally checks that every referenced
  // image exists. The manifest name is the canonical path of `csv_path`.
  static DatasetManifest Load(const std::filesystem::path& csv_path);
  void Save(const std::filesystem::path& csv_path) const;

  const std::string& name() const { return name_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::span<const SampleRecord> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  const SampleRecord& sample(std::string_view id) const;

  // Sorted distinct reference scene ids.
  std::vector<std::string> ReferenceIds() const;

  std::filesystem::path Resolve(const std::string& relative) const;
  // Decodes both views; throws DataError if their dimensions differ.
  StereoSample LoadSample(const SampleRecord& record) const;

 private:
  std::string name_;
  std::filesystem::path base_dir_;
  std::vector<SampleRecord> samples_;
};

std::string ManifestCsv(std::span<const SampleRecord> samples);
std::vector<SampleRecord> ParseManifestCsv(std::string_view text);

// Absolute MOS mismatch between the stereo score and the mean of the two
// per-view scores: |(mos_left + mos_right) / 2 - mos_stereo|.
double MosMismatch(const SampleRecord& record);

struct MismatchRow {
  std::string id;
  double mos_left;
  double mos_right;
  double mos_mean;
  double mos_stereo;
  double mismatch;
};

// One row per sample, sorted by descending mismatch (ties by id).
std::vector<MismatchRow> AnalyzeMismatch(std::span<const SampleRecord> samples);
// Header: id,mos_left,mos_right,mos_mean,mos_stereo,D
std::string MismatchCsv(std::span<const MismatchRow> rows);

// ---------------------------------------------------------------------------
// Patches

struct PatchOrigin {
  std::string sample_id;
  std::size_t row = 0;  // top-left pixel, y
  std::size_t col = 0;  // top-left pixel, x
};

struct PatchLabels {
  float mos_left = 0.0f;
  float mos_right = 0.0f;
  float mos_stereo = 0.0f;
};

// Co-located left/right 32x32 patches; raw 0..255 values, CHW per patch.
struct PatchBatch {
  Tensor left;   // [N,3,32,32]
  Tensor right;  // [N,3,32,32]
  std::vector<PatchLabels> labels;
  std::vector<PatchOrigin> origins;

  std::size_t size() const { return labels.size(); }
};

// Top-left corners of the non-overlapping 32x32 grid, stride 32, in raster
// order. Trailing partial rows and columns are dropped.
std::vector<std::pair<std::size_t, std::size_t>> PatchGrid(std::size_t width,
                                                           std::size_t height);

// Compact 8-bit store of patch pairs; used to pool training patches across
// images and gather shuffled mini-batches.
class PatchPool {
 public:
  // Appends every grid patch of the sample with the sample's labels.
  // Throws DataError if the views differ in size or hold no full patch.
  void Append(const StereoSample& sample);

  std::size_t size() const { return labels_.size(); }
  PatchBatch Gather(std::span<const std::size_t> indices) const;
  PatchBatch GatherAll() const;

 private:
  std::vector<std::uint8_t> left_;
  std::vector<std::uint8_t> right_;
  std::vector<PatchLabels> labels_;
  std::vector<PatchOrigin> origins_;
};

PatchBatch TilePatches(const StereoSample& sample);

// Mean of each score channel over the patches of one image.
ScoreQuad AggregateScore(std::span<const ScoreQuad> patch_scores);

// ---------------------------------------------------------------------------
// Scene-disjoint splits

struct SplitPlan {
  std::vector<std::string> train_ids;  // manifest order
  std::vector<std::string> test_ids;   // manifest order
  std::vector<std::string> train_scenes;
  std::vector<std::string> test_scenes;
  double train_fraction = 0.0;
  int repeat_index = 0;
  std::uint64_t seed = 0;

  double achieved_fraction() const;
};

// Shuffles reference scenes with a generator keyed on (seed, repeat_index),
// then assigns scenes to training until the cumulative sample fraction first
// reaches train_fraction. At least one scene always remains for testing.
SplitPlan MakeSplit(const DatasetManifest& manifest, double train_fraction,
                    int repeat_index, std::uint64_t seed);

// Every sample in training, none in test (cross-database training).
SplitPlan TrainOnAll(const DatasetManifest& manifest);

// Header: id,reference_id,partition
std::string SplitCsv(const DatasetManifest& manifest, const SplitPlan& plan);
// Reads a split file back; only ids are needed to rebuild the plan.
SplitPlan ParseSplitCsv(std::string_view text);

// ---------------------------------------------------------------------------
// Synthetic desk-scale databases

struct SynthConfig {
  int scenes = 6;
  int levels = 3;
  std::size_t width = 96;
  std::size_t height = 96;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Synthetic per-view MOS: 100 - 90 * level / level_max, clipped to [10,100].
double SyntheticViewMos(double level, double level_max);
// Synthetic stereo MOS: min(l, r) + 0.25 * |l - r|.
double SyntheticStereoMos(double mos_left, double mos_right);

// Writes images/<id>_L.ppm, images/<id>_R.ppm and manifest.csv under
// out_dir. Per scene: one pristine pair, then for each of AWGN and box blur
// and each level 1..L the symmetric pair (l,l) and the asymmetric pairs
// (0,l) and (l,0).
DatasetManifest GenerateSynthetic(const SynthConfig& config,
                                  const std::filesystem::path& out_dir);

}  // namespace stereoscore

#endif  // STEREOSCORE_DATASET_H_
