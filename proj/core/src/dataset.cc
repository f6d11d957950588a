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

#include "stereoscore/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "stereoscore/errors.h"
#include "text_util.h"

namespace stereoscore {
namespace {

using internal::FormatDouble;
using internal::ParseDouble;

constexpr std::string_view kManifestHeader =
    "id,left_path,right_path,mos_left,mos_right,mos_stereo,reference_id,"
    "distortion_type,level_left,level_right";
constexpr std::size_t kPatchValues = 3 * kPatchSize * kPatchSize;

bool ValidId(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

void CheckMos(const SampleRecord& r, const char* field, double value) {
  if (!std::isfinite(value) || value < kMosMin || value > kMosMax) {
    throw DataError("sample '" + r.id + "': " + field + " = " +
                    FormatDouble(value) + " outside [10,100]");
  }
}

// Generator keyed on a seed and a list of stream indices.
std::mt19937_64 KeyedRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words = {static_cast<std::uint32_t>(seed),
                                      static_cast<std::uint32_t>(seed >> 32)};
  for (std::uint64_t k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

std::string_view DistortionName(DistortionType type) {
  switch (type) {
    case DistortionType::kAwgn: return "awgn";
    case DistortionType::kGblur: return "gblur";
    case DistortionType::kJpeg: return "jpeg";
    case DistortionType::kPristine: return "pristine";
    case DistortionType::kSynthetic: return "synthetic";
  }
  return "unknown";
}

DistortionType ParseDistortionType(std::string_view name) {
  for (DistortionType t :
       {DistortionType::kAwgn, DistortionType::kGblur, DistortionType::kJpeg,
        DistortionType::kPristine, DistortionType::kSynthetic}) {
    if (DistortionName(t) == name) return t;
  }
  throw DataError("unknown distortion_type '" + std::string(name) + "'");
}

DatasetManifest::DatasetManifest(std::string name,
                                 std::filesystem::path base_dir,
                                 std::vector<SampleRecord> samples)
    : name_(std::move(name)),
      base_dir_(std::move(base_dir)),
      samples_(std::move(samples)) {
  std::set<std::string> ids;
  std::set<std::string> scenes;
  for (const SampleRecord& r : samples_) {
    if (!ValidId(r.id)) {
      throw DataError("sample id '" + r.id + "' must match [A-Za-z0-9_-]+");
    }
    if (!ids.insert(r.id).second) throw DataError("duplicate sample id '" + r.id + "'");
    if (r.left_path.empty() || r.right_path.empty()) {
      throw DataError("sample '" + r.id + "': empty image path");
    }
    if (r.reference_id.empty()) {
      throw DataError("sample '" + r.id + "': empty reference_id");
    }
    CheckMos(r, "mos_left", r.mos_left);
    CheckMos(r, "mos_right", r.mos_right);
    CheckMos(r, "mos_stereo", r.mos_stereo);
    if (!(r.level_left >= 0.0) || !(r.level_right >= 0.0)) {
      throw DataError("sample '" + r.id + "': distortion levels must be >= 0");
    }
    scenes.insert(r.reference_id);
  }
  if (scenes.size() < 2) {
    throw DataError("manifest '" + name_ + "' needs at least 2 reference scenes, has " +
                    std::to_string(scenes.size()));
  }
}

DatasetManifest DatasetManifest::Load(const std::filesystem::path& csv_path) {
  const std::string text = internal::ReadTextFile(csv_path);
  std::vector<SampleRecord> samples;
  try {
    samples = ParseManifestCsv(text);
  } catch (const DataError& e) {
    throw DataError(csv_path.string() + ": " + e.what());
  }
  const auto canonical = std::filesystem::weakly_canonical(csv_path);
  DatasetManifest manifest(canonical.string(), canonical.parent_path(),
                           std::move(samples));
  for (const SampleRecord& r : manifest.samples()) {
    for (const std::string* rel : {&r.left_path, &r.right_path}) {
      const auto full = manifest.Resolve(*rel);
      if (!std::filesystem::exists(full)) {
        throw DataError("sample '" + r.id + "': missing image " + full.string());
      }
    }
  }
  return manifest;
}

void DatasetManifest::Save(const std::filesystem::path& csv_path) const {
  internal::WriteTextFile(csv_path, ManifestCsv(samples_));
}

const SampleRecord& DatasetManifest::sample(std::string_view id) const {
  for (const SampleRecord& r : samples_) {
    if (r.id == id) return r;
  }
  throw DataError("no sample '" + std::string(id) + "' in manifest " + name_);
}

std::vector<std::string> DatasetManifest::ReferenceIds() const {
  std::set<std::string> scenes;
  for (const SampleRecord& r : samples_) scenes.insert(r.reference_id);
  return {scenes.begin(), scenes.end()};
}

std::filesystem::path DatasetManifest::Resolve(const std::string& relative) const {
  return base_dir_ / relative;
}

StereoSample DatasetManifest::LoadSample(const SampleRecord& record) const {
  StereoSample sample{record, ReadPpm(Resolve(record.left_path)),
                      ReadPpm(Resolve(record.right_path))};
  if (sample.left.width != sample.right.width ||
      sample.left.height != sample.right.height) {
    throw DataError("sample '" + record.id + "': left view is " +
                    std::to_string(sample.left.width) + "x" +
                    std::to_string(sample.left.height) + " but right view is " +
                    std::to_string(sample.right.width) + "x" +
                    std::to_string(sample.right.height));
  }
  return sample;
}

std::string ManifestCsv(std::span<const SampleRecord> samples) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const SampleRecord& r : samples) {
    out << r.id << ',' << r.left_path << ',' << r.right_path << ','
        << FormatDouble(r.mos_left) << ',' << FormatDouble(r.mos_right) << ','
        << FormatDouble(r.mos_stereo) << ',' << r.reference_id << ','
        << DistortionName(r.distortion_type) << ','
        << FormatDouble(r.level_left) << ',' << FormatDouble(r.level_right)
        << '\n';
  }
  return out.str();
}

std::vector<SampleRecord> ParseManifestCsv(std::string_view text) {
  const auto lines = internal::SplitLines(text);
  if (lines.empty() || lines[0] != kManifestHeader) {
    throw DataError("manifest header must be '" + std::string(kManifestHeader) + "'");
  }
  std::vector<SampleRecord> samples;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = internal::SplitFields(lines[i]);
    const std::string where = "manifest line " + std::to_string(i + 1);
    if (f.size() != 10) {
      throw DataError(where + ": expected 10 fields, got " + std::to_string(f.size()));
    }
    SampleRecord r;
    r.id = f[0];
    r.left_path = f[1];
    r.right_path = f[2];
    r.mos_left = ParseDouble(f[3], where + " mos_left");
    r.mos_right = ParseDouble(f[4], where + " mos_right");
    r.mos_stereo = ParseDouble(f[5], where + " mos_stereo");
    r.reference_id = f[6];
    r.distortion_type = ParseDistortionType(f[7]);
    r.level_left = ParseDouble(f[8], where + " level_left");
    r.level_right = ParseDouble(f[9], where + " level_right");
    samples.push_back(std::move(r));
  }
  return samples;
}

double MosMismatch(const SampleRecord& record) {
  return std::abs((record.mos_left + record.mos_right) / 2.0 - record.mos_stereo);
}

std::vector<MismatchRow> AnalyzeMismatch(std::span<const SampleRecord> samples) {
  std::vector<MismatchRow> rows;
  rows.reserve(samples.size());
  for (const SampleRecord& r : samples) {
    rows.push_back({r.id, r.mos_left, r.mos_right, (r.mos_left + r.mos_right) / 2.0,
                    r.mos_stereo, MosMismatch(r)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MismatchRow& a, const MismatchRow& b) {
                     if (a.mismatch != b.mismatch) return a.mismatch > b.mismatch;
                     return a.id < b.id;
                   });
  return rows;
}

std::string MismatchCsv(std::span<const MismatchRow> rows) {
  std::ostringstream out;
  out << "id,mos_left,mos_right,mos_mean,mos_stereo,D\n";
  for (const MismatchRow& r : rows) {
    out << r.id << ',' << FormatDouble(r.mos_left) << ','
        << FormatDouble(r.mos_right) << ',' << FormatDouble(r.mos_mean) << ','
        << FormatDouble(r.mos_stereo) << ',' << FormatDouble(r.mismatch) << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::size_t, std::size_t>> PatchGrid(std::size_t width,
                                                           std::size_t height) {
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (std::size_t row = 0; row + kPatchSize <= height; row += kPatchSize) {
    for (std::size_t col = 0; col + kPatchSize <= width; col += kPatchSize) {
      grid.emplace_back(row, col);
    }
  }
  return grid;
}

void PatchPool::Append(const StereoSample& sample) {
  const RgbImage& l = sample.left;
  const RgbImage& r = sample.right;
  if (l.width != r.width || l.height != r.height) {
    throw DataError("sample '" + sample.record.id + "': view sizes differ (" +
                    std::to_string(l.width) + "x" + std::to_string(l.height) +
                    " vs " + std::to_string(r.width) + "x" +
                    std::to_string(r.height) + ")");
  }
  const auto grid = PatchGrid(l.width, l.height);
  if (grid.empty()) {
    throw DataError("sample '" + sample.record.id + "': image " +
                    std::to_string(l.width) + "x" + std::to_string(l.height) +
                    " is smaller than one 32x32 patch");
  }
  const PatchLabels labels{static_cast<float>(sample.record.mos_left),
                           static_cast<float>(sample.record.mos_right),
                           static_cast<float>(sample.record.mos_stereo)};
  for (const auto& [row, col] : grid) {
    for (const RgbImage* view : {&l, &r}) {
      auto& dst = view == &l ? left_ : right_;
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < kPatchSize; ++y) {
          for (std::size_t x = 0; x < kPatchSize; ++x) {
            dst.push_back(view->at(col + x, row + y, c));
          }
        }
      }
    }
    labels_.push_back(labels);
    origins_.push_back({sample.record.id, row, col});
  }
}

PatchBatch PatchPool::Gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("cannot gather an empty patch batch");
  const std::size_t n = indices.size();
  std::vector<float> left(n * kPatchValues);
  std::vector<float> right(n * kPatchValues);
  PatchBatch batch;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw DataError("patch index out of range");
    std::copy_n(left_.begin() + src * kPatchValues, kPatchValues,
                left.begin() + i * kPatchValues);
    std::copy_n(right_.begin() + src * kPatchValues, kPatchValues,
                right.begin() + i * kPatchValues);
    batch.labels.push_back(labels_[src]);
    batch.origins.push_back(origins_[src]);
  }
  const Shape shape = {n, 3, kPatchSize, kPatchSize};
  batch.left = Tensor::FromVector(shape, std::move(left));
  batch.right = Tensor::FromVector(shape, std::move(right));
  return batch;
}

PatchBatch PatchPool::GatherAll() const {
  std::vector<std::size_t> all(size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return Gather(all);
}

PatchBatch TilePatches(const StereoSample& sample) {
  PatchPool pool;
  pool.Append(sample);
  return pool.GatherAll();
}

ScoreQuad AggregateScore(std::span<const ScoreQuad> patch_scores) {
  if (patch_scores.empty()) throw DataError("cannot aggregate zero patch scores");
  ScoreQuad sum;
  for (const ScoreQuad& q : patch_scores) {
    sum.q_left += q.q_left;
    sum.q_right += q.q_right;
    sum.q_stereo += q.q_stereo;
    sum.q_global += q.q_global;
  }
  const double n = static_cast<double>(patch_scores.size());
  return {sum.q_left / n, sum.q_right / n, sum.q_stereo / n, sum.q_global / n};
}

double SplitPlan::achieved_fraction() const {
  const std::size_t total = train_ids.size() + test_ids.size();
  return total == 0 ? 0.0 : static_cast<double>(train_ids.size()) / total;
}

SplitPlan MakeSplit(const DatasetManifest& manifest, double train_fraction,
                    int repeat_index, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must be in (0,1), got " +
                      FormatDouble(train_fraction));
  }
  if (repeat_index < 0) throw ConfigError("repeat index must be >= 0");
  std::vector<std::string> scenes = manifest.ReferenceIds();
  if (scenes.size() < 2) {
    throw DataError("split needs at least 2 reference scenes");
  }
  std::map<std::string, std::size_t> counts;
  for (const SampleRecord& r : manifest.samples()) ++counts[r.reference_id];

  auto rng = KeyedRng(seed, {static_cast<std::uint64_t>(repeat_index)});
  std::shuffle(scenes.begin(), scenes.end(), rng);

  const double total = static_cast<double>(manifest.size());
  std::size_t cumulative = 0;
  std::size_t n_train = 0;
  while (n_train < scenes.size()) {
    cumulative += counts[scenes[n_train]];
    ++n_train;
    if (cumulative / total >= train_fraction) break;
  }
  if (n_train == scenes.size()) --n_train;

  SplitPlan plan;
  plan.train_fraction = train_fraction;
  plan.repeat_index = repeat_index;
  plan.seed = seed;
  plan.train_scenes.assign(scenes.begin(), scenes.begin() + n_train);
  plan.test_scenes.assign(scenes.begin() + n_train, scenes.end());
  const std::set<std::string> train_set(plan.train_scenes.begin(),
                                        plan.train_scenes.end());
  for (const SampleRecord& r : manifest.samples()) {
    (train_set.contains(r.reference_id) ? plan.train_ids : plan.test_ids)
        .push_back(r.id);
  }
  return plan;
}

SplitPlan TrainOnAll(const DatasetManifest& manifest) {
  SplitPlan plan;
  plan.train_fraction = 1.0;
  plan.train_scenes = manifest.ReferenceIds();
  for (const SampleRecord& r : manifest.samples()) plan.train_ids.push_back(r.id);
  return plan;
}

std::string SplitCsv(const DatasetManifest& manifest, const SplitPlan& plan) {
  const std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
  const std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
  std::ostringstream out;
  out << "id,reference_id,partition\n";
  for (const SampleRecord& r : manifest.samples()) {
    if (train.contains(r.id)) {
      out << r.id << ',' << r.reference_id << ",train\n";
    } else if (test.contains(r.id)) {
      out << r.id << ',' << r.reference_id << ",test\n";
    }
  }
  return out.str();
}

SplitPlan ParseSplitCsv(std::string_view text) {
  const auto lines = internal::SplitLines(text);
  if (lines.empty() || lines[0] != "id,reference_id,partition") {
    throw DataError("split header must be 'id,reference_id,partition'");
  }
  SplitPlan plan;
  std::set<std::string> train_scenes, test_scenes;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = internal::SplitFields(lines[i]);
    if (f.size() != 3) {
      throw DataError("split line " + std::to_string(i + 1) + ": expected 3 fields");
    }
    if (f[2] == "train") {
      plan.train_ids.emplace_back(f[0]);
      train_scenes.emplace(f[1]);
    } else if (f[2] == "test") {
      plan.test_ids.emplace_back(f[0]);
      test_scenes.emplace(f[1]);
    } else {
      throw DataError("split line " + std::to_string(i + 1) +
                      ": partition must be train or test");
    }
  }
  plan.train_scenes.assign(train_scenes.begin(), train_scenes.end());
  plan.test_scenes.assign(test_scenes.begin(), test_scenes.end());
  return plan;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SynthConfig::Validate() const {
  if (scenes < 2) throw ConfigError("synthetic scenes must be >= 2");
  if (levels < 2) throw ConfigError("synthetic levels must be >= 2");
  if (width < kPatchSize || height < kPatchSize) {
    throw ConfigError("synthetic image size " + std::to_string(width) + "x" +
                      std::to_string(height) + " is below the 32x32 patch size");
  }
}

double SyntheticViewMos(double level, double level_max) {
  return std::clamp(kMosMax - 90.0 * (level / level_max), kMosMin, kMosMax);
}

double SyntheticStereoMos(double mos_left, double mos_right) {
  return std::min(mos_left, mos_right) + 0.25 * std::abs(mos_left - mos_right);
}

namespace {

struct PlaneF {
  std::size_t width, height;
  std::vector<float> values;  // HWC, 3 channels
  float& at(std::size_t x, std::size_t y, std::size_t c) {
    return values[(y * width + x) * 3 + c];
  }
};

// Smooth value noise: a random lattice with spacing `cell`, bilinearly
// interpolated with a smoothstep weight.
void AddValueNoise(PlaneF* plane, std::size_t cell, float amplitude,
                   std::mt19937_64& rng) {
  const std::size_t gw = plane->width / cell + 2;
  const std::size_t gh = plane->height / cell + 2;
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
  std::vector<float> lattice(gw * gh * 3);
  for (float& v : lattice) v = unit(rng);
  auto smooth = [](float t) { return t * t * (3.0f - 2.0f * t); };
  for (std::size_t y = 0; y < plane->height; ++y) {
    const std::size_t gy = y / cell;
    const float ty = smooth(static_cast<float>(y % cell) / cell);
    for (std::size_t x = 0; x < plane->width; ++x) {
      const std::size_t gx = x / cell;
      const float tx = smooth(static_cast<float>(x % cell) / cell);
      for (std::size_t c = 0; c < 3; ++c) {
        auto g = [&](std::size_t ix, std::size_t iy) {
          return lattice[(iy * gw + ix) * 3 + c];
        };
        const float top = g(gx, gy) * (1 - tx) + g(gx + 1, gy) * tx;
        const float bottom = g(gx, gy + 1) * (1 - tx) + g(gx + 1, gy + 1) * tx;
        plane->at(x, y, c) += amplitude * (top * (1 - ty) + bottom * ty);
      }
    }
  }
}

std::uint8_t ToByte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Pristine stereo pair: the right view sees the scene shifted by a fixed
// horizontal disparity.
std::pair<RgbImage, RgbImage> MakeScene(const SynthConfig& config, int scene) {
  auto rng = KeyedRng(config.seed, {static_cast<std::uint64_t>(scene), 0});
  std::uniform_int_distribution<std::size_t> disparity_dist(2, 6);
  const std::size_t disparity = disparity_dist(rng);
  PlaneF plane{config.width + disparity, config.height,
               std::vector<float>((config.width + disparity) * config.height * 3)};
  std::uniform_real_distribution<float> base(70.0f, 180.0f);
  std::uniform_real_distribution<float> slope(-60.0f, 60.0f);
  for (std::size_t c = 0; c < 3; ++c) {
    const float b = base(rng), sx = slope(rng), sy = slope(rng);
    for (std::size_t y = 0; y < plane.height; ++y) {
      for (std::size_t x = 0; x < plane.width; ++x) {
        plane.at(x, y, c) = b + sx * (static_cast<float>(x) / plane.width - 0.5f) +
                            sy * (static_cast<float>(y) / plane.height - 0.5f);
      }
    }
  }
  const std::pair<std::size_t, float> octaves[] = {
      {24, 45.0f}, {12, 30.0f}, {6, 22.0f}, {3, 16.0f}};
  for (const auto& [cell, amplitude] : octaves) {
    AddValueNoise(&plane, cell, amplitude, rng);
  }
  RgbImage left(config.width, config.height), right(config.width, config.height);
  for (std::size_t y = 0; y < config.height; ++y) {
    for (std::size_t x = 0; x < config.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        left.at(x, y, c) = ToByte(plane.at(x + disparity, y, c));
        right.at(x, y, c) = ToByte(plane.at(x, y, c));
      }
    }
  }
  return {std::move(left), std::move(right)};
}

RgbImage AddGaussianNoise(const RgbImage& image, double sigma,
                          std::mt19937_64& rng) {
  RgbImage out = image;
  std::normal_distribution<float> noise(0.0f, static_cast<float>(sigma));
  for (std::uint8_t& p : out.pixels) p = ToByte(static_cast<float>(p) + noise(rng));
  return out;
}

// Separable box blur with clamped borders.
RgbImage BoxBlur(const RgbImage& image, std::size_t radius) {
  const std::size_t w = image.width, h = image.height;
  const float norm = 1.0f / static_cast<float>(2 * radius + 1);
  std::vector<float> tmp(image.pixels.size());
  auto clamp_index = [](std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  const auto r = static_cast<std::ptrdiff_t>(radius);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        float sum = 0.0f;
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          sum += image.at(clamp_index(static_cast<std::ptrdiff_t>(x) + d, w), y, c);
        }
        tmp[(y * w + x) * 3 + c] = sum * norm;
      }
    }
  }
  RgbImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        float sum = 0.0f;
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          sum += tmp[(clamp_index(static_cast<std::ptrdiff_t>(y) + d, h) * w + x) * 3 + c];
        }
        out.at(x, y, c) = ToByte(sum * norm);
      }
    }
  }
  return out;
}

RgbImage Distort(const RgbImage& pristine, DistortionType type, int level,
                 std::mt19937_64& rng) {
  if (level == 0) return pristine;
  if (type == DistortionType::kAwgn) return AddGaussianNoise(pristine, 10.0 * level, rng);
  return BoxBlur(pristine, static_cast<std::size_t>(level));
}

std::string SceneTag(int scene) {
  std::string s = std::to_string(scene);
  return std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

}  // namespace

DatasetManifest GenerateSynthetic(const SynthConfig& config,
                                  const std::filesystem::path& out_dir) {
  config.Validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) {
    throw IoError("cannot create " + (out_dir / "images").string() + ": " +
                  ec.message());
  }
  std::vector<SampleRecord> samples;
  const double level_max = config.levels;
  for (int scene = 0; scene < config.scenes; ++scene) {
    const auto [left, right] = MakeScene(config, scene);
    struct Variant {
      DistortionType type;
      int level_left, level_right;
    };
    std::vector<Variant> variants = {{DistortionType::kPristine, 0, 0}};
    for (DistortionType type : {DistortionType::kAwgn, DistortionType::kGblur}) {
      for (int level = 1; level <= config.levels; ++level) {
        variants.push_back({type, level, level});
        variants.push_back({type, 0, level});
        variants.push_back({type, level, 0});
      }
    }
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const Variant& var = variants[v];
      SampleRecord r;
      r.id = "s" + SceneTag(scene) + "_" + std::string(DistortionName(var.type));
      if (var.type != DistortionType::kPristine) {
        r.id += "_" + std::to_string(var.level_left) + "_" +
                std::to_string(var.level_right);
      }
      r.left_path = "images/" + r.id + "_L.ppm";
      r.right_path = "images/" + r.id + "_R.ppm";
      r.reference_id = "scene" + SceneTag(scene);
      r.distortion_type = var.type;
      r.level_left = var.level_left;
      r.level_right = var.level_right;
      r.mos_left = SyntheticViewMos(var.level_left, level_max);
      r.mos_right = SyntheticViewMos(var.level_right, level_max);
      r.mos_stereo = SyntheticStereoMos(r.mos_left, r.mos_right);
      auto rng_left = KeyedRng(config.seed, {static_cast<std::uint64_t>(scene), v + 1, 0});
      auto rng_right = KeyedRng(config.seed, {static_cast<std::uint64_t>(scene), v + 1, 1});
      WritePpm(Distort(left, var.type, var.level_left, rng_left), out_dir / r.left_path);
      WritePpm(Distort(right, var.type, var.level_right, rng_right),
               out_dir / r.right_path);
      samples.push_back(std::move(r));
    }
  }
  const auto manifest_path = out_dir / "manifest.csv";
  internal::WriteTextFile(manifest_path, ManifestCsv(samples));
  const auto canonical = std::filesystem::weakly_canonical(manifest_path);
  return DatasetManifest(canonical.string(), canonical.parent_path(),
                         std::move(samples));
}

}  // namespace stereoscore
