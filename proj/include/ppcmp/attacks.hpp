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
#ifndef PPCMP_ATTACKS_HPP_
#define PPCMP_ATTACKS_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ppcmp/core.hpp"
#include "ppcmp/perturb.hpp"
#include "ppcmp/platform.hpp"
#include "ppcmp/regress.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

// The attacker's side table: QIA copies joined to identities.
struct AttackRow {
  Vector qia;
  Vector ia;
};

struct AttackTable {
  std::vector<AttackRow> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t qia_dims() const {
    return rows.empty() ? 0 : rows.front().qia.size();
  }
};

struct AttributeAttackParams {
  double mu = 1e-3;
  double table_noise_sigma = 1e-3;
};

// Builds a side table from the true records plus N(0, sigma^2) jitter on every
// QIA coordinate. Records without an IA block get their position as identity.
inline AttackTable make_attack_table(std::span<const PatientRecord> records,
                                     double sigma, RngStream& rng) {
  if (sigma < 0.0) throw std::invalid_argument("table noise sigma must be >= 0");
  AttackTable t;
  t.rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    AttackRow row;
    row.qia = records[i].qia;
    for (double& v : row.qia) v += rng.normal(0.0, sigma);
    row.ia = records[i].ia ? *records[i].ia : Vector{static_cast<double>(i)};
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct LinkVerdict {
  bool linked = false;
  std::size_t nearest_row = 0;
  double distance = 0.0;
  // IA of the nearest table row.
  Vector ia;
};

// Nearest-neighbour linkage of each submitted QIA vector against the table.
// Ties go to the lower row.
inline std::vector<LinkVerdict> attribute_attack(
    std::span<const Vector> submitted, const AttackTable& table, double mu) {
  if (table.rows.empty()) throw std::invalid_argument("attack table is empty");
  if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
  std::vector<LinkVerdict> out;
  out.reserve(submitted.size());
  for (const Vector& q : submitted) {
    if (q.size() != table.qia_dims())
      throw std::invalid_argument("attack: QIA dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t l = 0; l < table.rows.size(); ++l) {
      const double d = internal::sq_dist(q, table.rows[l].qia);
      if (d < best) {
        best = d;
        arg = l;
      }
    }
    LinkVerdict v;
    v.nearest_row = arg;
    v.distance = std::sqrt(best);
    v.linked = v.distance <= mu;
    v.ia = table.rows[arg].ia;
    out.push_back(std::move(v));
  }
  return out;
}

// Axis-aligned box the attacker draws fake queries from (QIA then CA).
// The leading qia_dims coordinates are the ones TQMA would aggregate.
struct InputBox {
  std::vector<Interval> dims;
  std::size_t qia_dims = 0;

  static InputBox unit(std::size_t d) {
    return InputBox{std::vector<Interval>(d, Interval{0.0, 1.0}), d};
  }
  // QIA ranges from the schema; CA coordinates on [0, 1].
  static InputBox from_schema(const AttributeSchema& schema) {
    InputBox box{schema.ranges, schema.qia_dims};
    box.dims.resize(schema.input_dims(), Interval{0.0, 1.0});
    return box;
  }
};

struct ExtractionAttackResult {
  std::size_t victim = 0;
  std::vector<LabeledSample> fake_pairs;
  KernelSpec surrogate;
  Partition post_attack_partition;

  LocalEstimate surrogate_predict(std::span<const double> x) const {
    return lar_predict(post_attack_partition.shards[victim], x, surrogate);
  }
};

// Model extraction by the platform. |D_v| fake queries are pushed through
// `platform`; the victim's released slot, un-bundled by |D| / |D_v|, is
// taken as its answer. The answers train an NWK (Gaussian) surrogate that
// then stands in for the victim. With `tqma` set the fake queries are
// aggregated like any real query before the doctors see them.
inline ExtractionAttackResult extraction_attack(const Platform& platform,
                                                std::size_t victim,
                                                const InputBox& box,
                                                std::optional<TqmaParams> tqma,
                                                RngStream& rng) {
  const Partition& part = platform.partition();
  if (victim >= part.m()) throw std::invalid_argument("victim out of range");
  if (box.dims.size() != part.shards[victim].dim())
    throw std::invalid_argument("attack box dimension mismatch");
  const std::size_t n = part.shards[victim].size();
  const double unbundle = static_cast<double>(platform.total()) /
                          static_cast<double>(platform.assessed_sizes()[victim]);

  RngStream qrng = rng.derive("queries");
  RngStream srng = rng.derive("release");
  ExtractionAttackResult res;
  res.victim = victim;
  res.fake_pairs.reserve(n);
  Vector x(box.dims.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < x.size(); ++d) {
      const Interval& r = box.dims[d];
      x[d] = qrng.uniform(r.lo, r.hi);
      if (tqma && d < box.qia_dims) x[d] = tqma_scalar(x[d], r, tqma->depth);
    }
    const Released rel = platform.release(platform.bundle(x), srng, i);
    res.fake_pairs.push_back({x, rel.values[victim] * unbundle});
  }

  DoctorShard fake{res.fake_pairs, KernelSpec{}, part.shards[victim].assessed_size};
  RngStream cv = rng.derive("cv");
  res.surrogate = select_bandwidth(fake, KernelKind::kNwkGaussian, cv).spec;
  fake.kernel = res.surrogate;
  res.post_attack_partition = part;
  res.post_attack_partition.shards[victim] = std::move(fake);
  return res;
}

// Convenience form: the attacker observes the victim through a platform that
// either swaps with `bstd` or releases the bundled values untouched.
inline ExtractionAttackResult extraction_attack(const Partition& partition,
                                                std::size_t victim, bool bstd_on,
                                                std::optional<TqmaParams> tqma,
                                                const BstdParams& bstd,
                                                const AttributeSchema& schema,
                                                RngStream& rng) {
  OutputDefense defense;
  if (bstd_on) defense = bstd;
  const Platform platform(partition, defense);
  return extraction_attack(platform, victim, InputBox::from_schema(schema), tqma,
                           rng);
}

}  // namespace ppcmp

#endif  // PPCMP_ATTACKS_HPP_
