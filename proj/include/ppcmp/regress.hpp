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
#ifndef PPCMP_REGRESS_HPP_
#define PPCMP_REGRESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ppcmp/core.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

struct LocalEstimate {
  double value = 0.0;
  // 1 when at least one sample carries weight, 0 for empty support.
  double weight_mass = 0.0;
};

namespace internal {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Unnormalised NWK weights from squared distances. Gaussian and Laplace are
// shifted by the nearest sample so they cannot all underflow; the shift
// cancels on normalisation.
inline void nwk_raw_weights(KernelKind kind, double h,
                            std::span<const double> sqd, std::span<double> w) {
  switch (kind) {
    case KernelKind::kNwkGaussian: {
      const double m = *std::min_element(sqd.begin(), sqd.end());
      const double inv = 1.0 / (h * h);
      for (std::size_t i = 0; i < sqd.size(); ++i)
        w[i] = std::exp(-(sqd[i] - m) * inv);
      break;
    }
    case KernelKind::kNwkLaplace: {
      const double m = std::sqrt(*std::min_element(sqd.begin(), sqd.end()));
      for (std::size_t i = 0; i < sqd.size(); ++i)
        w[i] = std::exp(-(std::sqrt(sqd[i]) - m) / h);
      break;
    }
    case KernelKind::kNwkEpanechnikov: {
      const double inv = 1.0 / (h * h);
      for (std::size_t i = 0; i < sqd.size(); ++i)
        w[i] = std::max(0.0, 1.0 - sqd[i] * inv);
      break;
    }
    default:
      throw std::logic_error("nwk_raw_weights: not an NWK kernel");
  }
}

// Normalises in place; returns the weight mass (0 or 1).
inline double normalise(std::span<double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  if (!(s > 0.0)) {
    std::fill(w.begin(), w.end(), 0.0);
    return 0.0;
  }
  for (double& v : w) v /= s;
  return 1.0;
}

inline double cell_coord(double v, double h) { return std::floor(v / h); }

inline bool same_cell(std::span<const double> a, std::span<const double> b,
                      double h) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (cell_coord(a[i], h) != cell_coord(b[i], h)) return false;
  }
  return true;
}

}  // namespace internal

// Local-average weights of every shard sample for query x under `spec`.
// Weights are nonnegative and sum to one unless the support is empty, in
// which case all are zero. Returns the weight mass.
inline double lar_weights(const DoctorShard& shard, std::span<const double> x,
                          const KernelSpec& spec, std::vector<double>& w) {
  const std::size_t n = shard.size();
  if (n == 0) throw std::invalid_argument("empty shard");
  if (x.size() != shard.dim())
    throw std::invalid_argument("query dimension does not match shard");
  w.assign(n, 0.0);
  switch (spec.kind()) {
    case KernelKind::kPartition:
      for (std::size_t i = 0; i < n; ++i) {
        if (internal::same_cell(x, shard.samples[i].input, spec.h())) w[i] = 1.0;
      }
      break;
    case KernelKind::kKnn: {
      std::vector<std::pair<double, std::size_t>> d(n);
      for (std::size_t i = 0; i < n; ++i)
        d[i] = {internal::sq_dist(x, shard.samples[i].input), i};
      const std::size_t k = std::min(spec.k(), n);
      std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
      for (std::size_t i = 0; i < k; ++i) w[d[i].second] = 1.0;
      break;
    }
    default: {
      std::vector<double> sqd(n);
      for (std::size_t i = 0; i < n; ++i)
        sqd[i] = internal::sq_dist(x, shard.samples[i].input);
      internal::nwk_raw_weights(spec.kind(), spec.h(), sqd, w);
    }
  }
  return internal::normalise(w);
}

// Weighted average of the shard outputs; zero with weight_mass 0 when no
// sample falls in the support.
inline LocalEstimate lar_predict(const DoctorShard& shard,
                                 std::span<const double> x,
                                 const KernelSpec& spec) {
  std::vector<double> w;
  LocalEstimate est;
  est.weight_mass = lar_weights(shard, x, spec, w);
  for (std::size_t i = 0; i < w.size(); ++i)
    est.value += w[i] * shard.samples[i].output;
  return est;
}

inline LocalEstimate lar_predict(const DoctorShard& shard,
                                 std::span<const double> x) {
  return lar_predict(shard, x, shard.kernel);
}

// Logarithmic mechanism: h^(log_{|D_j|} |D|). With h < 1 and |D| >= |D_j|
// the result never exceeds h.
inline double refine_bandwidth(double h, std::size_t shard_size,
                               std::size_t total) {
  if (!(h > 0.0 && h < 1.0))
    throw std::invalid_argument("refine_bandwidth needs 0 < h < 1");
  if (shard_size < 2)
    throw std::invalid_argument("refine_bandwidth needs |D_j| >= 2");
  if (total < shard_size)
    throw std::invalid_argument("refine_bandwidth needs |D| >= |D_j|");
  if (total == shard_size) return h;
  const double e = std::log(static_cast<double>(total)) /
                   std::log(static_cast<double>(shard_size));
  return std::pow(h, e);
}

// KNN analogue: k scaled by the same exponent, rounded, kept in [1, |D_j|].
inline std::size_t refine_neighbors(std::size_t k, std::size_t shard_size,
                                    std::size_t total) {
  if (shard_size < 2)
    throw std::invalid_argument("refine_neighbors needs |D_j| >= 2");
  if (total < shard_size)
    throw std::invalid_argument("refine_neighbors needs |D| >= |D_j|");
  const double e = std::log(static_cast<double>(total)) /
                   std::log(static_cast<double>(shard_size));
  const double scaled = std::round(static_cast<double>(k) * e);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1.0, scaled)),
                                 1, shard_size);
}

inline KernelSpec refine_kernel(const KernelSpec& spec, std::size_t shard_size,
                                std::size_t total) {
  if (spec.is_knn())
    return KernelSpec::neighbors(refine_neighbors(spec.k(), shard_size, total));
  return KernelSpec::bandwidth(spec.kind(),
                               refine_bandwidth(spec.h(), shard_size, total));
}

inline constexpr std::size_t kCvFolds = 5;
inline constexpr std::size_t kBandwidthGridSize = 30;
inline constexpr std::size_t kMaxKnnGrid = 50;

// 30 log-spaced bandwidths on [n^(-2/d), 1), ascending.
inline std::vector<double> bandwidth_grid(std::size_t n, std::size_t dim) {
  if (n < 2 || dim < 1) throw std::invalid_argument("bandwidth_grid domain");
  const double lo = std::pow(static_cast<double>(n), -2.0 / static_cast<double>(dim));
  std::vector<double> g(kBandwidthGridSize);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = lo * std::pow(1.0 / lo, static_cast<double>(i) /
                                       static_cast<double>(kBandwidthGridSize));
  }
  return g;
}

// Candidate specs for CV, ordered from least to most smoothing parameter.
inline std::vector<KernelSpec> cv_candidates(KernelKind kind, std::size_t n,
                                             std::size_t dim) {
  std::vector<KernelSpec> out;
  if (kind == KernelKind::kKnn) {
    const std::size_t kmax = std::min(kMaxKnnGrid, n - 1);
    for (std::size_t k = 1; k <= kmax; ++k) out.push_back(KernelSpec::neighbors(k));
  } else {
    for (double h : bandwidth_grid(n, dim)) out.push_back(KernelSpec::bandwidth(kind, h));
  }
  return out;
}

// Fold label in [0, 5) for each sample: a shuffled round-robin assignment.
inline std::vector<std::size_t> cv_fold_assignment(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % kCvFolds;
  return fold;
}

// Mean squared validation error of each candidate over the given folds.
inline std::vector<double> cv_curve(const DoctorShard& shard,
                                    std::span<const KernelSpec> candidates,
                                    std::span<const std::size_t> fold) {
  const std::size_t n = shard.size();
  const std::size_t g = candidates.size();
  std::vector<double> err(g, 0.0);
  if (g == 0) return err;
  const KernelKind kind = candidates.front().kind();
  const std::size_t dim = shard.dim();

  std::vector<std::size_t> train;
  std::vector<double> sqd, w, cells;
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t f = 0; f < kCvFolds; ++f) {
    train.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (fold[i] != f) train.push_back(i);
    if (train.empty()) continue;
    const std::size_t nt = train.size();
    sqd.resize(nt);
    w.resize(nt);

    if (kind == KernelKind::kPartition) {
      for (std::size_t c = 0; c < g; ++c) {
        const double h = candidates[c].h();
        cells.resize(nt * dim);
        for (std::size_t t = 0; t < nt; ++t)
          for (std::size_t d = 0; d < dim; ++d)
            cells[t * dim + d] =
                internal::cell_coord(shard.samples[train[t]].input[d], h);
        for (std::size_t v = 0; v < n; ++v) {
          if (fold[v] != f) continue;
          const Vector& xv = shard.samples[v].input;
          double num = 0.0, den = 0.0;
          for (std::size_t t = 0; t < nt; ++t) {
            bool same = true;
            for (std::size_t d = 0; d < dim && same; ++d)
              same = cells[t * dim + d] == internal::cell_coord(xv[d], h);
            if (same) {
              num += shard.samples[train[t]].output;
              den += 1.0;
            }
          }
          const double pred = den > 0.0 ? num / den : 0.0;
          const double r = shard.samples[v].output - pred;
          err[c] += r * r;
        }
      }
      continue;
    }

    for (std::size_t v = 0; v < n; ++v) {
      if (fold[v] != f) continue;
      const Vector& xv = shard.samples[v].input;
      const double yv = shard.samples[v].output;
      for (std::size_t t = 0; t < nt; ++t)
        sqd[t] = internal::sq_dist(xv, shard.samples[train[t]].input);

      if (kind == KernelKind::kKnn) {
        ranked.resize(nt);
        for (std::size_t t = 0; t < nt; ++t) ranked[t] = {sqd[t], train[t]};
        std::sort(ranked.begin(), ranked.end());
        double prefix = 0.0;
        std::size_t taken = 0;
        for (std::size_t c = 0; c < g; ++c) {
          const std::size_t k = std::min(candidates[c].k(), nt);
          while (taken < k) prefix += shard.samples[ranked[taken++].second].output;
          const double r = yv - prefix / static_cast<double>(k);
          err[c] += r * r;
        }
        continue;
      }

      for (std::size_t c = 0; c < g; ++c) {
        internal::nwk_raw_weights(kind, candidates[c].h(), sqd, w);
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
          num += w[t] * shard.samples[train[t]].output;
          den += w[t];
        }
        const double pred = den > 0.0 ? num / den : 0.0;
        const double r = yv - pred;
        err[c] += r * r;
      }
    }
  }
  for (double& e : err) e /= static_cast<double>(n);
  return err;
}

struct BandwidthChoice {
  KernelSpec spec;
  double cv_mse = std::numeric_limits<double>::quiet_NaN();
  // All inputs identical: CV carries no information and the grid minimum
  // is returned.
  bool degenerate = false;
};

// Five-fold CV over the candidate grid. Ties go to the smaller parameter.
inline BandwidthChoice select_bandwidth(const DoctorShard& shard, KernelKind kind,
                                        RngStream& rng) {
  const std::size_t n = shard.size();
  if (n < kCvFolds)
    throw std::invalid_argument("bandwidth selection needs |D_j| >= 5");
  const auto candidates = cv_candidates(kind, n, shard.dim());

  bool identical = true;
  for (std::size_t i = 1; i < n && identical; ++i)
    identical = shard.samples[i].input == shard.samples[0].input;
  if (identical) return {candidates.front(), std::numeric_limits<double>::quiet_NaN(), true};

  const auto fold = cv_fold_assignment(n, rng);
  const auto err = cv_curve(shard, candidates, fold);
  std::size_t best = 0;
  for (std::size_t c = 1; c < err.size(); ++c) {
    if (err[c] < err[best]) best = c;
  }
  return {candidates[best], err[best], false};
}

}  // namespace ppcmp

#endif  // PPCMP_REGRESS_HPP_
