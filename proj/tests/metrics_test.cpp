//
// Copyright 2026 The PPCMP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ppcmp/metrics.hpp"
#include "ppcmp/perturb.hpp"
#include "ppcmp/platform.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {
namespace {

TEST(CoTest, Examples) {
  const std::vector<Vector> a = {{0.1, 0.2}, {0.5, 0.5}};
  EXPECT_EQ(compute_co(a, a, 0.0), 100.0);
  const std::vector<Vector> far = {{0.2, 0.2}, {0.5, 0.7}};
  EXPECT_EQ(compute_co(a, far, 1e-3), 0.0);
  const std::vector<Vector> edge = {{0.1, 0.2 + 2e-3}, {0.9, 0.9}};
  EXPECT_EQ(compute_co(a, edge, 1e-3 + 1e-15), 50.0);
  EXPECT_THROW(compute_co(a, std::vector<Vector>{{0.1, 0.2}}, 1e-3), std::invalid_argument);
  EXPECT_THROW(compute_co(std::vector<Vector>{}, std::vector<Vector>{}, 1e-3),
               std::invalid_argument);
}

TEST(CoProperty, MonotoneInMu) {
  RngStream rng(1, "co");
  std::vector<Vector> a, b;
  for (int i = 0; i < 500; ++i) {
    a.push_back({rng.uniform()});
    b.push_back({a.back()[0] + rng.normal(0.0, 0.01)});
  }
  double prev = -1.0;
  for (double mu = 0.0; mu < 0.05; mu += 0.001) {
    const double co = compute_co(a, b, mu);
    EXPECT_GE(co, prev);
    prev = co;
  }
}

// TQMA on uniform data: CO stays under 2^(k+2) mu (density 1 on [0,1]).
TEST(CoProperty, TqmaBound) {
  RngStream rng(2, "tq");
  const double mu = 1e-3;
  const std::size_t n = 100000;
  for (int k = 1; k <= 6; ++k) {
    std::vector<Vector> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = rng.uniform();
      a.push_back({v});
      b.push_back({tqma_scalar(v, {0.0, 1.0}, k)});
    }
    const double bound = std::ldexp(1.0, k + 2) * mu;
    EXPECT_LE(compute_co(a, b, mu), 100.0 * (bound + 3 * std::sqrt(bound * (1 - bound) / n)));
  }
}

TEST(RlTest, Examples) {
  EXPECT_EQ(record_linkage_rate(Vector{1, 2, 3}, Vector{1, 2, 3}), 100.0);
  // One-step cyclic shift: entries 0 and 1 sit exactly dist2 from their own
  // originals and count as linked; entry 2 does not.
  EXPECT_NEAR(record_linkage_rate(Vector{1, 2, 3}, Vector{2, 3, 1}), 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(oracle::record_linkage({1, 2, 3}, {2, 3, 1}), 200.0 / 3.0, 1e-12);
  // A two-step shift has a closer original between every pair.
  EXPECT_EQ(record_linkage_rate(Vector{1, 2, 3, 4, 5}, Vector{3, 4, 5, 1, 2}), 0.0);
  // Duplicated values count as linked.
  EXPECT_EQ(record_linkage_rate(Vector{1, 1, 5}, Vector{1, 1, 5}), 100.0);
  EXPECT_THROW(record_linkage_rate(Vector{1}, Vector{1}), std::invalid_argument);
  EXPECT_THROW(record_linkage_rate(Vector{1, 2}, Vector{1}), std::invalid_argument);
  const std::vector<Vector> o = {{1, 2, 3}, {1, 2, 3}}, p = {{1, 2, 3}, {2, 3, 1}};
  EXPECT_NEAR(compute_rl(o, p), 250.0 / 3.0, 1e-12);
}

TEST(RlProperty, MatchesDefinition) {
  RngStream rng(3, "rl");
  for (int t = 0; t < 2000; ++t) {
    const std::size_t m = 2 + rng.uniform_index(25);
    Vector a(m), b(m);
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = std::round(rng.uniform(0, 10));
      b[i] = t % 2 ? a[rng.uniform_index(m)] : std::round(rng.uniform(0, 10));
    }
    EXPECT_EQ(record_linkage_rate(a, b),
              oracle::record_linkage(std::vector<double>(a.begin(), a.end()),
                                     std::vector<double>(b.begin(), b.end())));
  }
}

TEST(RlProperty, BoundedSwapBound) {
  RngStream rng(4, "rlb");
  for (int t = 0; t < 3000; ++t) {
    const std::size_t m = 5 + rng.uniform_index(20);
    const std::size_t lo = 2 + rng.uniform_index(m - 3);
    const std::size_t hi = lo + 1 + rng.uniform_index(m - 1 - lo);
    Vector v(m);
    for (double& x : v) x = rng.uniform();
    const auto rec = bstd_swap(v, {lo, hi, {}}, rng);
    EXPECT_LE(record_linkage_rate(rec.original, rec.swapped), 100.0 * (lo - 1) / m + 1e-12);
  }
}

TEST(UtilityTest, Examples) {
  const Vector t = {0.1, 0.2, 0.3};
  EXPECT_EQ(compute_utility(t, t).mse, 0.0);
  const auto u = compute_utility(Vector{0.6, 0.7, 0.8}, t);
  EXPECT_NEAR(u.mse, 0.25, 1e-15);
  EXPECT_NEAR(u.rmse, 0.5, 1e-15);
  EXPECT_THROW(compute_utility(Vector{}, Vector{}), std::invalid_argument);
  EXPECT_THROW(compute_utility(Vector{1.0}, t), std::invalid_argument);
}

TEST(DoseTest, Examples) {
  EXPECT_EQ(dose_group(35), DoseGroup::kIntermediate);
  EXPECT_EQ(classify_dose(35, 35), DoseCall::kIdeal);
  EXPECT_EQ(dose_group(50), DoseGroup::kHigh);
  EXPECT_EQ(classify_dose(39, 50), DoseCall::kUnder);
  EXPECT_EQ(classify_dose(40, 50), DoseCall::kUnder);
  EXPECT_EQ(dose_group(20), DoseGroup::kLow);
  EXPECT_EQ(classify_dose(24.5, 20), DoseCall::kOver);
  EXPECT_EQ(dose_group(21), DoseGroup::kLow);
  EXPECT_EQ(dose_group(49), DoseGroup::kHigh);
}

TEST(DoseProperty, CountsAddUp) {
  RngStream rng(5, "dose");
  Vector p, t;
  for (int i = 0; i < 3000; ++i) {
    t.push_back(rng.uniform(5, 120));
    p.push_back(t.back() * rng.uniform(0.5, 1.6));
  }
  const auto rep = dose_group_report(p, t);
  std::size_t total = 0, predicted = 0;
  for (const auto& g : rep.groups) {
    EXPECT_EQ(g.ideal + g.under + g.over, g.size);
    EXPECT_LE(g.correctly_predicted, std::min(g.size, g.predicted_in_range));
    total += g.size;
    predicted += g.predicted_in_range;
  }
  EXPECT_EQ(total, 3000u);
  EXPECT_EQ(predicted, 3000u);
}

TEST(DoseTest, UnitsApplied) {
  // Normalized 0.5 on a [10, 70] scale is 40 mg/week.
  const auto rep = dose_group_report(Vector{0.5}, Vector{0.5}, DoseUnits{10.0, 60.0});
  EXPECT_EQ(rep.at(DoseGroup::kIntermediate).ideal, 1u);
  EXPECT_EQ(rep.at(DoseGroup::kIntermediate).correct_percent(), 100.0);
}

}  // namespace
}  // namespace ppcmp
