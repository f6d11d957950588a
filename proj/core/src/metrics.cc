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

#include "stereoscore/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "stereoscore/errors.h"
#include "text_util.h"

namespace stereoscore {
namespace {

void CheckPairs(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("score lists differ in length: " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw DataError("score lists are empty");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw DataError("non-finite score at index " + std::to_string(i));
    }
  }
}

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double Pearson(std::span<const double> x, std::span<const double> y,
               const char* what) {
  if (x.size() < 2) {
    throw UndefinedCorrelationError(std::string(what) + " needs at least 2 samples");
  }
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError(std::string(what) +
                                    " undefined: one score list is constant");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> FractionalRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the mean 1-based rank.
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Plcc(std::span<const double> predicted, std::span<const double> subjective) {
  CheckPairs(predicted, subjective);
  return Pearson(predicted, subjective, "PLCC");
}

double Srocc(std::span<const double> predicted, std::span<const double> subjective) {
  CheckPairs(predicted, subjective);
  const auto rp = FractionalRanks(predicted);
  const auto rs = FractionalRanks(subjective);
  return Pearson(rp, rs, "SROCC");
}

double Rmse(std::span<const double> predicted, std::span<const double> subjective) {
  CheckPairs(predicted, subjective);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - subjective[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

ReportRow ComputeReportRow(std::string partition, std::string repeat,
                           std::span<const double> predicted,
                           std::span<const double> subjective) {
  ReportRow row;
  row.partition = std::move(partition);
  row.repeat = std::move(repeat);
  row.n = static_cast<double>(predicted.size());
  row.srocc = Srocc(predicted, subjective);
  row.plcc = Plcc(predicted, subjective);
  row.rmse = Rmse(predicted, subjective);
  return row;
}

ReportRow EvalReport::Mean() const {
  if (rows.empty()) throw StateError("report has no rows");
  ReportRow mean;
  mean.partition = rows.front().partition;
  mean.repeat = "mean";
  for (const ReportRow& r : rows) {
    mean.n += r.n;
    mean.srocc += r.srocc;
    mean.plcc += r.plcc;
    mean.rmse += r.rmse;
  }
  const double k = static_cast<double>(rows.size());
  mean.n /= k;
  mean.srocc /= k;
  mean.plcc /= k;
  mean.rmse /= k;
  return mean;
}

std::string EvalReport::ToCsv() const {
  using internal::FormatDouble;
  std::ostringstream out;
  out << "partition,repeat,n,srocc,plcc,rmse\n";
  auto emit = [&](const ReportRow& r) {
    out << r.partition << ',' << r.repeat << ',' << FormatDouble(r.n) << ','
        << FormatDouble(r.srocc) << ',' << FormatDouble(r.plcc) << ','
        << FormatDouble(r.rmse) << '\n';
  };
  for (const ReportRow& r : rows) emit(r);
  if (!rows.empty()) emit(Mean());
  return out.str();
}

std::string EvalReport::ToTable() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-7s %7s %8s %8s %8s\n", "partition",
                "repeat", "n", "SROCC", "PLCC", "RMSE");
  out << line;
  auto emit = [&](const ReportRow& r) {
    std::snprintf(line, sizeof(line), "%-10s %-7s %7.1f %8.4f %8.4f %8.4f\n",
                  r.partition.c_str(), r.repeat.c_str(), r.n, r.srocc, r.plcc,
                  r.rmse);
    out << line;
  };
  for (const ReportRow& r : rows) emit(r);
  if (!rows.empty()) emit(Mean());
  return out.str();
}

}  // namespace stereoscore
