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

#ifndef STEREOSCORE_METRICS_H_
#define STEREOSCORE_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stereoscore {

// Agreement between objective (predicted) and subjective (MOS) scores.
// Inputs must be equal-length, nonempty and finite (DataError otherwise).
// Correlations on zero-variance input throw UndefinedCorrelationError.

// Pearson linear correlation on the raw scores; no nonlinear mapping is
// fitted first. Needs n >= 2.
double Plcc(std::span<const double> predicted, std::span<const double> subjective);

// Spearman rank-order correlation: Pearson of fractional (average) ranks.
double Srocc(std::span<const double> predicted, std::span<const double> subjective);

// Root mean squared error, in the units of the scores.
double Rmse(std::span<const double> predicted, std::span<const double> subjective);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> FractionalRanks(std::span<const double> values);

struct ReportRow {
  std::string partition;  // e.g. "80-20", "cross", "eval"
  std::string repeat;     // repeat index, or "mean" for the summary row
  double n = 0.0;
  double srocc = 0.0;
  double plcc = 0.0;
  double rmse = 0.0;
};

ReportRow ComputeReportRow(std::string partition, std::string repeat,
                           std::span<const double> predicted,
                           std::span<const double> subjective);

// Per-repeat rows and their arithmetic mean.
struct EvalReport {
  std::vector<ReportRow> rows;

  // Throws StateError when there are no rows.
  ReportRow Mean() const;
  // Header `partition,repeat,n,srocc,plcc,rmse`, one line per row, then the
  // mean row.
  std::string ToCsv() const;
  // Fixed-width table for terminals.
  std::string ToTable() const;
};

}  // namespace stereoscore

#endif  // STEREOSCORE_METRICS_H_
