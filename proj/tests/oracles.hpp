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
// Straight-line reference implementations used only by tests. They share no
// code with the library beyond plain data types.

#ifndef PPCMP_TESTS_ORACLES_HPP_
#define PPCMP_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

struct Point {
  Vec x;
  double y;
};

enum class Kind { kGauss, kLaplace, kEpan, kPe, kKnn };

inline double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Unnormalized table weights without any numerical stabilisation.
inline Vec raw_weights(Kind kind, double h, std::size_t k, const std::vector<Point>& pts,
                       const Vec& x) {
  Vec w(pts.size(), 0.0);
  if (kind == Kind::kKnn) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return dist(x, pts[a].x) < dist(x, pts[b].x);
    });
    for (std::size_t i = 0; i < std::min(k, pts.size()); ++i) w[idx[i]] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = dist(x, pts[i].x);
    switch (kind) {
      case Kind::kGauss: w[i] = std::exp(-d * d / (h * h)); break;
      case Kind::kLaplace: w[i] = std::exp(-d / h); break;
      case Kind::kEpan: w[i] = std::max(0.0, 1.0 - d * d / (h * h)); break;
      case Kind::kPe: {
        bool same = true;
        for (std::size_t c = 0; c < x.size(); ++c)
          same = same && std::floor(x[c] / h) == std::floor(pts[i].x[c] / h);
        w[i] = same ? 1.0 : 0.0;
        break;
      }
      case Kind::kKnn: break;
    }
  }
  return w;
}

// Weighted average with 0/0 := 0. Exponential kernels are evaluated relative
// to the nearest point, which leaves the ratio unchanged but avoids
// underflowing every weight at once for narrow bandwidths.
inline double lar(Kind kind, double h, std::size_t k, const std::vector<Point>& pts,
                  const Vec& x) {
  Vec w = raw_weights(kind, h, k, pts, x);
  if (kind == Kind::kGauss || kind == Kind::kLaplace) {
    double dmin = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) dmin = std::min(dmin, dist(x, p.x));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = dist(x, pts[i].x);
      w[i] = kind == Kind::kGauss ? std::exp(-(d * d - dmin * dmin) / (h * h))
                                  : std::exp(-(d - dmin) / h);
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    num += w[i] * pts[i].y;
    den += w[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

struct Doctor {
  std::vector<Point> pts;
  Kind kind;
  double h;
  std::size_t k;
};

// Refined local estimates, bundled by size, thresholded and synthesized.
inline double collaborative(const std::vector<Doctor>& docs, const Vec& x) {
  double total = 0.0;
  for (const auto& d : docs) total += static_cast<double>(d.pts.size());
  double sum = 0.0, active = 0.0;
  for (const auto& d : docs) {
    const double n = static_cast<double>(d.pts.size());
    const double e = std::log(total) / std::log(n);
    const double h = d.kind == Kind::kKnn ? 0.0 : std::pow(d.h, e);
    std::size_t k = 0;
    if (d.kind == Kind::kKnn) {
      k = static_cast<std::size_t>(std::max(1.0, std::round(static_cast<double>(d.k) * e)));
      k = std::min(k, d.pts.size());
    }
    const double b = n / total * lar(d.kind, h, k, d.pts, x);
    if (std::abs(b) >= n / (total * total)) {
      sum += b;
      active += n;
    }
  }
  return active > 0.0 ? total / active * sum : 0.0;
}

// Mean squared validation error of a fixed spec over explicit fold labels.
inline double cv_mse(Kind kind, double h, std::size_t k, const std::vector<Point>& pts,
                     const std::vector<std::size_t>& fold, std::size_t folds) {
  double ss = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Point> train;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (fold[i] != f) train.push_back(pts[i]);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (fold[i] != f) continue;
      const double e = lar(kind, h, std::min(k, train.size()), train, pts[i].x) - pts[i].y;
      ss += e * e;
    }
  }
  return ss / static_cast<double>(pts.size());
}

// Record linkage of one vector, written directly from the definition.
inline double record_linkage(const Vec& orig, const Vec& pert) {
  const std::size_t m = orig.size();
  std::size_t linked = 0;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < m; ++j) d.push_back({std::abs(pert[i] - orig[j]), j});
    std::sort(d.begin(), d.end());
    const double second = d[1].first;
    if (std::abs(pert[i] - orig[i]) <= second) ++linked;
  }
  return 100.0 * static_cast<double>(linked) / static_cast<double>(m);
}

}  // namespace oracle

#endif  // PPCMP_TESTS_ORACLES_HPP_
