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
#ifndef PPCMP_CORE_HPP_
#define PPCMP_CORE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ppcmp/rng.hpp"

namespace ppcmp {

using Vector = std::vector<double>;

// Closed interval [lo, hi] with lo < hi.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Split of a patient record into quasi-identifier (QIA), confidential (CA)
// and identity (IA) blocks. Only QIA carries a declared value range.
struct AttributeSchema {
  std::size_t qia_dims = 1;
  std::size_t ca_dims = 0;
  std::size_t ia_dims = 0;
  std::vector<Interval> ranges;

  std::size_t total_dims() const { return qia_dims + ca_dims + ia_dims; }
  // Dimension of the vector a doctor sees: QIA followed by CA.
  std::size_t input_dims() const { return qia_dims + ca_dims; }

  static AttributeSchema make(std::size_t qia, std::size_t ca, std::size_t ia,
                              std::vector<Interval> ranges) {
    AttributeSchema s{qia, ca, ia, std::move(ranges)};
    s.check();
    return s;
  }

  // Unit-cube QIA ranges.
  static AttributeSchema unit(std::size_t qia, std::size_t ca,
                              std::size_t ia = 0) {
    return make(qia, ca, ia, std::vector<Interval>(qia, Interval{0.0, 1.0}));
  }

  void check() const {
    if (qia_dims < 1) throw std::invalid_argument("schema needs >= 1 QIA dim");
    if (ranges.size() != qia_dims)
      throw std::invalid_argument("schema: one range per QIA attribute");
    for (const Interval& r : ranges) {
      if (!(r.lo < r.hi))
        throw std::invalid_argument("schema: every range needs a < b");
    }
  }
};

struct PatientRecord {
  Vector qia;
  Vector ca;
  std::optional<Vector> ia;

  Vector input() const {
    Vector x;
    x.reserve(qia.size() + ca.size());
    x.insert(x.end(), qia.begin(), qia.end());
    x.insert(x.end(), ca.begin(), ca.end());
    return x;
  }
};

struct LabeledSample {
  Vector input;
  double output = 0.0;
};

// True iff the record's block sizes match and every QIA coordinate lies in
// its declared range.
inline bool validate_schema(const PatientRecord& record,
                            const AttributeSchema& schema) {
  if (record.qia.size() != schema.qia_dims) return false;
  if (record.ca.size() != schema.ca_dims) return false;
  if (record.ia && record.ia->size() != schema.ia_dims) return false;
  if (schema.ranges.size() != schema.qia_dims) return false;
  for (std::size_t i = 0; i < record.qia.size(); ++i) {
    if (!schema.ranges[i].contains(record.qia[i])) return false;
  }
  return true;
}

// Local average regression families.
enum class KernelKind {
  kNwkGaussian,
  kNwkLaplace,
  kNwkEpanechnikov,
  kPartition,
  kKnn,
};

inline constexpr std::array<KernelKind, 5> kAllKernels = {
    KernelKind::kNwkGaussian, KernelKind::kNwkLaplace,
    KernelKind::kNwkEpanechnikov, KernelKind::kPartition, KernelKind::kKnn};

inline std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kNwkGaussian: return "nwk_gaussian";
    case KernelKind::kNwkLaplace: return "nwk_laplace";
    case KernelKind::kNwkEpanechnikov: return "nwk_epanechnikov";
    case KernelKind::kPartition: return "pe";
    case KernelKind::kKnn: return "knn";
  }
  return "unknown";
}

inline KernelKind kernel_from_string(std::string_view name) {
  for (KernelKind k : kAllKernels) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown kernel: " + std::string(name));
}

// Kernel choice plus its single smoothing parameter: a bandwidth h for the
// NWK and partition estimators, a neighbour count k for KNN.
class KernelSpec {
 public:
  KernelSpec() = default;

  static KernelSpec bandwidth(KernelKind kind, double h) {
    if (kind == KernelKind::kKnn)
      throw std::invalid_argument("KNN takes a neighbour count");
    if (!(h > 0.0) || !std::isfinite(h))
      throw std::invalid_argument("bandwidth must be positive");
    KernelSpec s;
    s.kind_ = kind;
    s.h_ = h;
    return s;
  }

  static KernelSpec neighbors(std::size_t k) {
    if (k < 1) throw std::invalid_argument("KNN needs k >= 1");
    KernelSpec s;
    s.kind_ = KernelKind::kKnn;
    s.k_ = k;
    return s;
  }

  KernelKind kind() const { return kind_; }
  bool is_knn() const { return kind_ == KernelKind::kKnn; }
  double h() const { return h_; }
  std::size_t k() const { return k_; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

 private:
  KernelKind kind_ = KernelKind::kNwkGaussian;
  double h_ = 0.5;
  std::size_t k_ = 0;
};

struct DoctorShard {
  std::vector<LabeledSample> samples;
  KernelSpec kernel;
  // The platform's estimate of |D_j|; defaults to the true size.
  std::size_t assessed_size = 0;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const {
    return samples.empty() ? 0 : samples.front().input.size();
  }
};

struct Partition {
  std::vector<DoctorShard> shards;

  std::size_t m() const { return shards.size(); }
  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& s : shards) t += s.size();
    return t;
  }
  std::size_t assessed_total() const {
    std::size_t t = 0;
    for (const auto& s : shards) t += s.assessed_size;
    return t;
  }
  std::vector<std::size_t> assessed_sizes() const {
    std::vector<std::size_t> out;
    out.reserve(shards.size());
    for (const auto& s : shards) out.push_back(s.assessed_size);
    return out;
  }
  // Index of the largest shard; lowest index on ties.
  std::size_t largest_shard() const {
    std::size_t best = 0;
    for (std::size_t j = 1; j < shards.size(); ++j) {
      if (shards[j].size() > shards[best].size()) best = j;
    }
    return best;
  }
};

// Shard sizes for |D| samples over m doctors: the first m-1 are floors of
// U[0.8|D|/m, |D|/m] draws and the last takes the remainder.
inline std::vector<std::size_t> draw_shard_sizes(std::size_t total,
                                                 std::size_t m,
                                                 RngStream& rng) {
  if (m < 2) throw std::invalid_argument("partition needs m >= 2");
  if (total < m) throw std::invalid_argument("partition needs |D| >= m");
  const double hi = static_cast<double>(total) / static_cast<double>(m);
  const double lo = 0.8 * hi;
  if (std::floor(lo) < 1.0)
    throw std::invalid_argument(
        "m too large: size range [0.8|D|/m, |D|/m] admits empty shards");
  std::vector<std::size_t> sizes(m);
  std::size_t used = 0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    sizes[j] = static_cast<std::size_t>(std::floor(rng.uniform(lo, hi)));
    used += sizes[j];
  }
  sizes[m - 1] = total - used;
  return sizes;
}

// Disjoint random split of the samples into m shards. Each shard starts with
// a placeholder kernel and assessed_size equal to its true size.
inline Partition partition_dataset(std::span<const LabeledSample> samples,
                                   std::size_t m, RngStream& rng) {
  const std::vector<std::size_t> sizes =
      draw_shard_sizes(samples.size(), m, rng);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());

  Partition p;
  p.shards.resize(m);
  std::size_t next = 0;
  for (std::size_t j = 0; j < m; ++j) {
    DoctorShard& shard = p.shards[j];
    shard.samples.reserve(sizes[j]);
    for (std::size_t i = 0; i < sizes[j]; ++i) {
      shard.samples.push_back(samples[order[next++]]);
    }
    shard.assessed_size = sizes[j];
  }
  return p;
}

}  // namespace ppcmp

#endif  // PPCMP_CORE_HPP_
