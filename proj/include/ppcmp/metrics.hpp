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
#ifndef PPCMP_METRICS_HPP_
#define PPCMP_METRICS_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ppcmp/core.hpp"
#include "ppcmp/regress.hpp"

namespace ppcmp {

struct PrivacyScore {
  double co_percent = 0.0;
  double rl_percent = 0.0;
};

// Share of perturbed records within 2*mu of their originals, in percent.
inline double compute_co(std::span<const Vector> originals,
                         std::span<const Vector> perturbed, double mu) {
  if (originals.empty() || originals.size() != perturbed.size())
    throw std::invalid_argument("CO needs two equal, nonempty lists");
  const double r2 = 4.0 * mu * mu;
  std::size_t close = 0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    if (originals[i].size() != perturbed[i].size())
      throw std::invalid_argument("CO: dimension mismatch");
    close += internal::sq_dist(originals[i], perturbed[i]) <= r2;
  }
  return 100.0 * static_cast<double>(close) / static_cast<double>(originals.size());
}

// Distance-based record linkage over one vector of m scalars, in percent.
// An entry is linked when its own original is no farther than the
// second-closest original; equal distances count as linked.
inline double record_linkage_rate(std::span<const double> original,
                                  std::span<const double> perturbed) {
  const std::size_t m = original.size();
  if (m < 2) throw std::invalid_argument("RL needs m >= 2");
  if (perturbed.size() != m) throw std::invalid_argument("RL: length mismatch");
  std::size_t linked = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = perturbed[i];
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::abs(v - original[j]);
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    double second = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (j != nearest) second = std::min(second, std::abs(v - original[j]));
    }
    linked += std::abs(v - original[i]) <= second;
  }
  return 100.0 * static_cast<double>(linked) / static_cast<double>(m);
}

// Per-query record linkage averaged over queries.
inline double compute_rl(std::span<const Vector> originals,
                         std::span<const Vector> perturbed) {
  if (originals.empty() || originals.size() != perturbed.size())
    throw std::invalid_argument("RL needs two equal, nonempty lists");
  double sum = 0.0;
  for (std::size_t q = 0; q < originals.size(); ++q)
    sum += record_linkage_rate(originals[q], perturbed[q]);
  return sum / static_cast<double>(originals.size());
}

struct UtilityScore {
  double mse = 0.0;
  double rmse = 0.0;
};

inline UtilityScore compute_utility(std::span<const double> predictions,
                                    std::span<const double> truths) {
  if (predictions.empty() || predictions.size() != truths.size())
    throw std::invalid_argument("utility needs two equal, nonempty lists");
  double ss = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    ss += e * e;
  }
  UtilityScore u;
  u.mse = ss / static_cast<double>(predictions.size());
  u.rmse = std::sqrt(u.mse);
  return u;
}

// Dose groups in mg/week.
inline constexpr double kLowDoseMax = 21.0;
inline constexpr double kHighDoseMin = 49.0;

enum class DoseGroup { kLow, kIntermediate, kHigh };

inline std::string_view to_string(DoseGroup g) {
  switch (g) {
    case DoseGroup::kLow: return "low";
    case DoseGroup::kIntermediate: return "intermediate";
    case DoseGroup::kHigh: return "high";
  }
  return "unknown";
}

inline DoseGroup dose_group(double dose) {
  if (dose <= kLowDoseMax) return DoseGroup::kLow;
  if (dose >= kHighDoseMin) return DoseGroup::kHigh;
  return DoseGroup::kIntermediate;
}

enum class DoseCall { kIdeal, kUnder, kOver };

// Within 20% of the truth is ideal; at or beyond the 20% line is a miss.
inline DoseCall classify_dose(double prediction, double truth) {
  if (prediction <= 0.8 * truth) return DoseCall::kUnder;
  if (prediction >= 1.2 * truth) return DoseCall::kOver;
  return DoseCall::kIdeal;
}

struct DoseGroupCounts {
  std::size_t size = 0;
  std::size_t ideal = 0;
  std::size_t under = 0;
  std::size_t over = 0;
  // Predictions falling inside this group's dose range, and how many of
  // those belong to patients whose true dose is in the group.
  std::size_t predicted_in_range = 0;
  std::size_t correctly_predicted = 0;

  double ideal_percent() const {
    return size == 0 ? 0.0 : 100.0 * static_cast<double>(ideal) / static_cast<double>(size);
  }
  double correct_percent() const {
    return size == 0 ? 0.0
                     : 100.0 * static_cast<double>(correctly_predicted) /
                           static_cast<double>(size);
  }
};

struct DoseGroupReport {
  std::array<DoseGroupCounts, 3> groups{};

  const DoseGroupCounts& at(DoseGroup g) const {
    return groups[static_cast<std::size_t>(g)];
  }
  std::size_t total() const {
    return groups[0].size + groups[1].size + groups[2].size;
  }
};

// Maps normalized doses back to mg/week as offset + scale * v.
struct DoseUnits {
  double offset = 0.0;
  double scale = 1.0;
};

inline DoseGroupReport dose_group_report(std::span<const double> predictions,
                                         std::span<const double> truths,
                                         DoseUnits units = {}) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("dose report: length mismatch");
  DoseGroupReport rep;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const double t = units.offset + units.scale * truths[i];
    const double p = units.offset + units.scale * predictions[i];
    const DoseGroup tg = dose_group(t);
    const DoseGroup pg = dose_group(p);
    DoseGroupCounts& c = rep.groups[static_cast<std::size_t>(tg)];
    ++c.size;
    switch (classify_dose(p, t)) {
      case DoseCall::kIdeal: ++c.ideal; break;
      case DoseCall::kUnder: ++c.under; break;
      case DoseCall::kOver: ++c.over; break;
    }
    DoseGroupCounts& pc = rep.groups[static_cast<std::size_t>(pg)];
    ++pc.predicted_in_range;
    if (pg == tg) ++pc.correctly_predicted;
  }
  return rep;
}

}  // namespace ppcmp

#endif  // PPCMP_METRICS_HPP_
