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
#ifndef PPCMP_PERTURB_HPP_
#define PPCMP_PERTURB_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ppcmp/core.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

struct TqmaParams {
  int depth = 4;
};

enum class PerturbMethod { kNone, kTqma, kUma, kKdTree, kMulNoise, kDpNoise };

inline std::string_view to_string(PerturbMethod m) {
  switch (m) {
    case PerturbMethod::kNone: return "none";
    case PerturbMethod::kTqma: return "tqma";
    case PerturbMethod::kUma: return "uma";
    case PerturbMethod::kKdTree: return "kdtree";
    case PerturbMethod::kMulNoise: return "mul_noise";
    case PerturbMethod::kDpNoise: return "dp_noise";
  }
  return "unknown";
}

struct PerturbedQuery {
  PatientRecord original;
  Vector perturbed_qia;
  PerturbMethod method = PerturbMethod::kNone;

  // What the doctors receive: perturbed QIA followed by the untouched CA.
  Vector input() const {
    Vector x;
    x.reserve(perturbed_qia.size() + original.ca.size());
    x.insert(x.end(), perturbed_qia.begin(), perturbed_qia.end());
    x.insert(x.end(), original.ca.begin(), original.ca.end());
    return x;
  }
};

inline constexpr int kMaxTqmaDepth = 60;

// Midpoint of the depth-k dyadic cell of [a, b] holding v. The right end b
// belongs to the last cell.
inline double tqma_scalar(double v, Interval range, int depth) {
  if (depth < 0 || depth > kMaxTqmaDepth)
    throw std::invalid_argument("TQMA depth out of range");
  if (!(range.lo < range.hi)) throw std::invalid_argument("TQMA needs a < b");
  if (!range.contains(v))
    throw std::invalid_argument("TQMA value outside its attribute range");
  const double cells = std::ldexp(1.0, depth);
  double j = std::floor((v - range.lo) / range.width() * cells);
  j = std::clamp(j, 0.0, cells - 1.0);
  return range.lo + range.width() * (j + 0.5) / cells;
}

inline PerturbedQuery tqma_query(const PatientRecord& record,
                                 const AttributeSchema& schema,
                                 TqmaParams params) {
  if (!validate_schema(record, schema))
    throw std::invalid_argument("record does not match schema");
  PerturbedQuery q{record, Vector(record.qia.size()), PerturbMethod::kTqma};
  for (std::size_t i = 0; i < record.qia.size(); ++i) {
    q.perturbed_qia[i] =
        tqma_scalar(record.qia[i], schema.ranges[i], params.depth);
  }
  return q;
}

namespace internal {

inline std::vector<PerturbedQuery> copy_batch(
    std::span<const PatientRecord> batch, PerturbMethod method) {
  std::vector<PerturbedQuery> out;
  out.reserve(batch.size());
  for (const auto& r : batch) out.push_back({r, r.qia, method});
  return out;
}

inline void check_rectangular(std::span<const PatientRecord> batch) {
  for (const auto& r : batch) {
    if (r.qia.size() != batch.front().qia.size())
      throw std::invalid_argument("batch has ragged QIA vectors");
  }
}

inline void kd_split(std::span<std::size_t> idx,
                     const std::vector<PerturbedQuery>& pts,
                     std::size_t leaf_size, std::vector<Vector>& centroid) {
  const std::size_t dims = pts.front().perturbed_qia.size();
  if (idx.size() <= leaf_size) {
    Vector c(dims, 0.0);
    for (std::size_t i : idx) {
      for (std::size_t d = 0; d < dims; ++d) c[d] += pts[i].perturbed_qia[d];
    }
    for (double& v : c) v /= static_cast<double>(idx.size());
    for (std::size_t i : idx) centroid[i] = c;
    return;
  }
  std::size_t widest = 0;
  double best = -1.0;
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i : idx) {
      lo = std::min(lo, pts[i].perturbed_qia[d]);
      hi = std::max(hi, pts[i].perturbed_qia[d]);
    }
    if (hi - lo > best) {
      best = hi - lo;
      widest = d;
    }
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    double va = pts[a].perturbed_qia[widest], vb = pts[b].perturbed_qia[widest];
    return va < vb || (va == vb && a < b);
  });
  const std::size_t half = idx.size() / 2;
  kd_split(idx.first(half), pts, leaf_size, centroid);
  kd_split(idx.subspan(half), pts, leaf_size, centroid);
}

}  // namespace internal

// Univariate microaggregation: per QIA attribute, sort the batch, cut it into
// `groups` near-equal-frequency groups and replace values by group means.
inline std::vector<PerturbedQuery> uma_perturb(
    std::span<const PatientRecord> batch, std::size_t groups) {
  if (batch.empty()) throw std::invalid_argument("UMA needs a nonempty batch");
  if (groups < 1 || groups > batch.size())
    throw std::invalid_argument("UMA needs 1 <= groups <= batch size");
  internal::check_rectangular(batch);
  auto out = internal::copy_batch(batch, PerturbMethod::kUma);
  const std::size_t n = batch.size();
  std::vector<std::size_t> order(n);
  for (std::size_t d = 0; d < batch.front().qia.size(); ++d) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return batch[a].qia[d] < batch[b].qia[d] ||
             (batch[a].qia[d] == batch[b].qia[d] && a < b);
    });
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t begin = g * n / groups, end = (g + 1) * n / groups;
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += batch[order[i]].qia[d];
      const double mean = sum / static_cast<double>(end - begin);
      for (std::size_t i = begin; i < end; ++i)
        out[order[i]].perturbed_qia[d] = mean;
    }
  }
  return out;
}

// kd-tree perturbation: split on the widest QIA dimension at the median until
// leaves hold at most leaf_size points, then replace points by their leaf
// centroid.
inline std::vector<PerturbedQuery> kdtree_perturb(
    std::span<const PatientRecord> batch, std::size_t leaf_size) {
  if (batch.empty())
    throw std::invalid_argument("kd-tree perturbation needs a nonempty batch");
  if (leaf_size < 1) throw std::invalid_argument("leaf size must be >= 1");
  internal::check_rectangular(batch);
  auto out = internal::copy_batch(batch, PerturbMethod::kKdTree);
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Vector> centroid(batch.size());
  internal::kd_split(idx, out, leaf_size, centroid);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].perturbed_qia = centroid[i];
  return out;
}

enum class SensitivityRule { kMaxAbsInput, kMaxAbsOutput };

struct NoiseParams {
  enum class Kind { kMultiplicative, kLaplaceDp };

  Kind kind = Kind::kMultiplicative;
  // Multiplicative: e has variance p_noise * var(reference).
  double p_noise = 0.0;
  // Literal reading with E[e] = 0 instead of the default E[e] = 1.
  bool mean_zero = false;
  // Laplace: scale = sensitivity / epsilon.
  double epsilon = 1.0;
  // Which reference set the caller supplies; the sensitivity is always the
  // largest absolute value in that set.
  SensitivityRule sensitivity_rule = SensitivityRule::kMaxAbsInput;

  static NoiseParams multiplicative(double p_noise) {
    NoiseParams p;
    p.kind = Kind::kMultiplicative;
    p.p_noise = p_noise;
    return p;
  }
  static NoiseParams laplace(double epsilon, SensitivityRule rule) {
    NoiseParams p;
    p.kind = Kind::kLaplaceDp;
    p.epsilon = epsilon;
    p.sensitivity_rule = rule;
    return p;
  }
};

inline double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

inline double max_abs(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// Noises a value vector. Variance (multiplicative) or sensitivity (Laplace)
// comes from `reference`, which defaults to the values themselves.
inline Vector noise_perturb(std::span<const double> values,
                            const NoiseParams& params, RngStream& rng,
                            std::span<const double> reference = {}) {
  if (reference.empty()) reference = values;
  Vector out(values.begin(), values.end());
  if (params.kind == NoiseParams::Kind::kMultiplicative) {
    if (params.p_noise < 0.0)
      throw std::invalid_argument("p_noise must be non-negative");
    const double sd = std::sqrt(params.p_noise * population_variance(reference));
    const double mean = params.mean_zero ? 0.0 : 1.0;
    for (double& v : out) v *= rng.normal(mean, sd);
  } else {
    if (!(params.epsilon > 0.0))
      throw std::invalid_argument("DP noise needs epsilon > 0");
    const double scale = std::isinf(params.epsilon)
                             ? 0.0
                             : max_abs(reference) / params.epsilon;
    for (double& v : out) v += rng.laplace(scale);
  }
  return out;
}

// Patient-side noising: each QIA attribute column is noised as one vector, so
// the variance or sensitivity comes from that attribute across the batch
// together with any extra reference rows (e.g. the attack split).
inline std::vector<PerturbedQuery> noise_perturb_batch(
    std::span<const PatientRecord> batch, const NoiseParams& params,
    RngStream& rng, std::span<const Vector> extra_reference = {}) {
  if (batch.empty()) throw std::invalid_argument("noise needs a nonempty batch");
  internal::check_rectangular(batch);
  const PerturbMethod method = params.kind == NoiseParams::Kind::kMultiplicative
                                   ? PerturbMethod::kMulNoise
                                   : PerturbMethod::kDpNoise;
  auto out = internal::copy_batch(batch, method);
  Vector column(batch.size());
  Vector reference;
  for (std::size_t d = 0; d < batch.front().qia.size(); ++d) {
    for (std::size_t i = 0; i < batch.size(); ++i) column[i] = batch[i].qia[d];
    reference = column;
    for (const Vector& r : extra_reference) {
      if (r.size() != batch.front().qia.size())
        throw std::invalid_argument("reference rows have the wrong QIA size");
      reference.push_back(r[d]);
    }
    const Vector noised = noise_perturb(column, params, rng, reference);
    for (std::size_t i = 0; i < batch.size(); ++i) out[i].perturbed_qia[d] = noised[i];
  }
  return out;
}

}  // namespace ppcmp

#endif  // PPCMP_PERTURB_HPP_
