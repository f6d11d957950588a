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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "stereoscore/errors.h"
#include "stereoscore/metrics.h"

namespace stereoscore {
namespace {

// Independent oracle: Neumaier-compensated sums, ranks by counting.
double KahanSum(const std::vector<double>& v) {
  double sum = 0.0, c = 0.0;
  for (double x : v) {
    const double t = sum + x;
    c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

double OraclePearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = KahanSum(a) / n, mb = KahanSum(b) / n;
  std::vector<double> sab, saa, sbb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab.push_back((a[i] - ma) * (b[i] - mb));
    saa.push_back((a[i] - ma) * (a[i] - ma));
    sbb.push_back((b[i] - mb) * (b[i] - mb));
  }
  return KahanSum(sab) / std::sqrt(KahanSum(saa) * KahanSum(sbb));
}

// rank_i = 1 + #{x_j < x_i} + (#{x_j == x_i} - 1) / 2, by brute force.
std::vector<double> OracleRanks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

double OracleRmse(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> sq;
  for (std::size_t i = 0; i < a.size(); ++i) sq.push_back((a[i] - b[i]) * (a[i] - b[i]));
  return std::sqrt(KahanSum(sq) / static_cast<double>(a.size()));
}

TEST(MetricsTest, HandExamples) {
  const std::vector<double> x = {1, 2, 4}, y = {1, 3, 5};
  // Centered: dx = (-4,-1,5)/3, dy = (-2,0,2); r = 6 / sqrt(42/9 * 8).
  EXPECT_NEAR(Plcc(x, y), 6.0 / std::sqrt(42.0 / 9.0 * 8.0), 1e-12);
  EXPECT_NEAR(Plcc(x, y), 0.98198050606196563, 1e-12);
  // dx = (-7,-1,8)/3, dy = (-2,0,2); r = 10 / sqrt(38/3 * 8).
  EXPECT_NEAR(Plcc(std::vector<double>{1, 3, 6}, y), 0.99339926779878274, 1e-12);
  EXPECT_DOUBLE_EQ(Rmse(std::vector<double>{0}, std::vector<double>{10}), 10.0);
  EXPECT_NEAR(Rmse(std::vector<double>{1, 2}, std::vector<double>{3, 5}),
              std::sqrt(6.5), 1e-15);
  const std::vector<double> t = {1, 2, 2, 3}, u = {10, 20, 30, 40};
  EXPECT_EQ(FractionalRanks(t), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_NEAR(Srocc(t, u), OraclePearson({1, 2.5, 2.5, 4}, {1, 2, 3, 4}), 1e-15);
}

TEST(MetricsTest, PerfectAndReversed) {
  const std::vector<double> a = {3, 1, 4, 1.5, 9, 2.6};
  std::vector<double> neg(a.size());
  std::transform(a.begin(), a.end(), neg.begin(), [](double v) { return -v; });
  EXPECT_DOUBLE_EQ(Plcc(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Plcc(a, neg), -1.0);
  EXPECT_DOUBLE_EQ(Srocc(a, a), 1.0);
  EXPECT_DOUBLE_EQ(Srocc(a, neg), -1.0);
  EXPECT_EQ(Rmse(a, a), 0.0);
}

TEST(MetricsTest, ConstantInputIsUndefined) {
  const std::vector<double> c = {5, 5, 5}, v = {1, 2, 3};
  EXPECT_THROW(Plcc(c, v), UndefinedCorrelationError);
  EXPECT_THROW(Srocc(v, c), UndefinedCorrelationError);
  EXPECT_THROW(Plcc(std::vector<double>{1}, std::vector<double>{2}),
               UndefinedCorrelationError);
  EXPECT_NO_THROW(Rmse(c, v));
}

TEST(MetricsTest, InputContract) {
  EXPECT_THROW(Plcc(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DataError);
  EXPECT_THROW(Rmse(std::vector<double>{}, std::vector<double>{}), DataError);
  EXPECT_THROW(Srocc(std::vector<double>{1, NAN}, std::vector<double>{1, 2}), DataError);
}

TEST(MetricsTest, AgreesWithCompensatedOracle) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(2, 1000);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    const bool ties = trial % 2 == 0;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = 50 + 20 * noise(rng);
      b[i] = 0.7 * a[i] + 10 * noise(rng);
      if (ties) {
        a[i] = std::round(a[i] / 5) * 5;
        b[i] = std::round(b[i]);
      }
    }
    EXPECT_NEAR(Plcc(a, b), OraclePearson(a, b), 1e-9) << trial;
    EXPECT_NEAR(Srocc(a, b), OraclePearson(OracleRanks(a), OracleRanks(b)), 1e-9) << trial;
    EXPECT_NEAR(Rmse(a, b), OracleRmse(a, b), 1e-9) << trial;
    EXPECT_EQ(FractionalRanks(a), OracleRanks(a));
  }
}

TEST(MetricsTest, ClosedFormSpearmanWithoutTies) {
  std::mt19937_64 rng(7);
  for (int n = 2; n <= 7; ++n) {
    std::vector<double> a(n), b(n);
    std::iota(a.begin(), a.end(), 1.0);
    std::iota(b.begin(), b.end(), 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::shuffle(a.begin(), a.end(), rng);
      std::shuffle(b.begin(), b.end(), rng);
      double d2 = 0;
      for (int i = 0; i < n; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
      const double closed = 1.0 - 6.0 * d2 / (n * (static_cast<double>(n) * n - 1));
      // Scale the inputs so ranks, not values, are compared.
      std::vector<double> sa(n), sb(n);
      for (int i = 0; i < n; ++i) {
        sa[i] = std::exp(a[i]);
        sb[i] = 3 * b[i] - 100;
      }
      EXPECT_NEAR(Srocc(sa, sb), closed, 1e-12);
    }
  }
}

TEST(MetricsTest, InvarianceProperties) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> a(50), b(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = g(rng);
    b[i] = a[i] + g(rng);
  }
  std::vector<double> mono(50), affine(50), shifted_a(50), shifted_b(50);
  for (int i = 0; i < 50; ++i) {
    mono[i] = std::exp(a[i]) + a[i] * a[i] * a[i];
    affine[i] = 4 * a[i] + 7;
    shifted_a[i] = a[i] + 12.5;
    shifted_b[i] = b[i] + 12.5;
  }
  EXPECT_NEAR(Srocc(mono, b), Srocc(a, b), 1e-12);
  EXPECT_NEAR(Plcc(affine, b), Plcc(a, b), 1e-12);
  EXPECT_NEAR(Rmse(shifted_a, shifted_b), Rmse(a, b), 1e-12);
  EXPECT_DOUBLE_EQ(Srocc(a, b), Srocc(b, a));
  EXPECT_DOUBLE_EQ(Plcc(a, b), Plcc(b, a));
}

TEST(ReportTest, CsvLayoutAndMeanRow) {
  const std::vector<double> p1 = {1, 2, 3, 4}, s1 = {1, 2, 3, 5};
  const std::vector<double> p2 = {4, 3, 2, 1}, s2 = {1, 2, 3, 4};
  EvalReport report;
  report.rows.push_back(ComputeReportRow("80-20", "0", p1, s1));
  report.rows.push_back(ComputeReportRow("80-20", "1", p2, s2));
  const ReportRow mean = report.Mean();
  EXPECT_EQ(mean.repeat, "mean");
  EXPECT_DOUBLE_EQ(mean.srocc, 0.0);
  EXPECT_DOUBLE_EQ(mean.n, 4.0);
  const std::string csv = report.ToCsv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "partition,repeat,n,srocc,plcc,rmse");
  EXPECT_NE(csv.find("\n80-20,0,4,1,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\n80-20,mean,4,0,"), std::string::npos) << csv;
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_THROW(EvalReport{}.Mean(), StateError);
}

}  // namespace
}  // namespace stereoscore
