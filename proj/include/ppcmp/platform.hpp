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
#ifndef PPCMP_PLATFORM_HPP_
#define PPCMP_PLATFORM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ppcmp/core.hpp"
#include "ppcmp/perturb.hpp"
#include "ppcmp/regress.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

// Raised when the unanimous-consent gate in front of swapping is not met.
class CollaborationRejected : public std::runtime_error {
 public:
  CollaborationRejected() : std::runtime_error("collaboration rejected") {}
};

struct BstdParams {
  std::size_t p_lower = 3;
  std::size_t p_upper = 8;
  // One flag per doctor; empty means everyone consented.
  std::vector<bool> consent;

  bool all_consent() const {
    return std::all_of(consent.begin(), consent.end(), [](bool b) { return b; });
  }

  // Full contract for m doctors: 1 <= p_lower < p_upper < m.
  void validate(std::size_t m) const {
    if (!(p_lower >= 1 && p_lower < p_upper && p_upper < m))
      throw std::invalid_argument("BSTD needs 1 <= p_lower < p_upper < m");
    if (!consent.empty() && consent.size() != m)
      throw std::invalid_argument("BSTD consent vector must have length m");
  }
};

struct SwapRecord {
  std::size_t query_id = 0;
  Vector original;
  Vector swapped;
  // swapped[j] == original[permutation[j]].
  std::vector<std::size_t> permutation;

  std::size_t fixed_count() const {
    std::size_t c = 0;
    for (std::size_t j = 0; j < permutation.size(); ++j) c += permutation[j] == j;
    return c;
  }

  static SwapRecord identity(std::span<const double> values, std::size_t id = 0) {
    SwapRecord r{id, Vector(values.begin(), values.end()),
                 Vector(values.begin(), values.end()),
                 std::vector<std::size_t>(values.size())};
    std::iota(r.permutation.begin(), r.permutation.end(), std::size_t{0});
    return r;
  }
};

// Descending rank order, ties broken by doctor index.
inline std::vector<std::size_t> rank_order(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  return order;
}

// Bounded rank swapping. Ranks are swept from the top; each rank not yet
// swapped exchanges with a uniformly chosen unswapped partner whose rank
// distance lies in [p_lower, p_upper]. Partners are drawn only among those
// that still let the sweep finish with the fewest unswapped ranks any such
// pairing can achieve, so the pass never strands more values than it must.
// That minimum depends only on (m, p_lower, p_upper) and is memoised. The
// table grows quickly with p_upper - p_lower; windows of a dozen ranks are
// cheap, windows near 30 take about a second to build.
class BoundedSwapper {
 public:
  BoundedSwapper(std::size_t m, std::size_t p_lower, std::size_t p_upper)
      : m_(m), lower_(p_lower), upper_(std::min(p_upper, m == 0 ? 0 : m - 1)) {
    if (m < 2) throw std::invalid_argument("swapping needs m >= 2");
    if (p_lower < 1 || p_lower > p_upper)
      throw std::invalid_argument("swapping needs 1 <= p_lower <= p_upper");
    if (upper_ > 62) throw std::invalid_argument("p_upper above 62 unsupported");
    memo_ = std::make_shared<std::vector<std::unordered_map<std::uint64_t, std::uint32_t>>>(m_ + 1);
    budget_ = min_unswapped(0, 0);
  }

  std::size_t m() const { return m_; }
  std::size_t p_lower() const { return lower_; }
  std::size_t p_upper() const { return upper_; }
  // Number of values the sweep leaves in place on every call.
  std::size_t unswapped_count() const { return budget_; }

  SwapRecord swap(std::span<const double> values, RngStream& rng,
                  std::size_t query_id = 0) const {
    if (values.size() != m_)
      throw std::invalid_argument("swap: expected one value per doctor");
    for (double v : values) {
      if (!std::isfinite(v)) throw std::invalid_argument("swap: non-finite value");
    }
    const auto order = rank_order(values);
    // partner[r] = rank whose value lands at rank r.
    std::vector<std::size_t> partner(m_);
    std::iota(partner.begin(), partner.end(), std::size_t{0});

    std::uint64_t mask = 0;
    std::size_t stranded = 0;
    std::vector<std::size_t> choices;
    for (std::size_t j = 0; j < m_; ++j) {
      if (mask & 1u) {
        mask >>= 1;
        continue;
      }
      choices.clear();
      for (std::size_t t = lower_; t <= upper_ && j + t < m_; ++t) {
        if (mask >> t & 1u) continue;
        const std::uint64_t next = (mask | (std::uint64_t{1} << t)) >> 1;
        if (stranded + min_unswapped(j + 1, next) <= budget_) choices.push_back(t);
      }
      if (choices.empty()) {
        ++stranded;
        mask >>= 1;
        continue;
      }
      const std::size_t t = choices[rng.uniform_index(choices.size())];
      std::swap(partner[j], partner[j + t]);
      mask = (mask | (std::uint64_t{1} << t)) >> 1;
    }

    SwapRecord rec;
    rec.query_id = query_id;
    rec.original.assign(values.begin(), values.end());
    rec.swapped.resize(m_);
    rec.permutation.resize(m_);
    for (std::size_t r = 0; r < m_; ++r) {
      rec.permutation[order[r]] = order[partner[r]];
      rec.swapped[order[r]] = values[order[partner[r]]];
    }
    return rec;
  }

 private:
  // Fewest unswapped ranks among j..m-1 given the set of later ranks already
  // claimed (bit t of mask = rank j+t).
  std::size_t min_unswapped(std::size_t j, std::uint64_t mask) const {
    if (j >= m_) return 0;
    auto& table = (*memo_)[j];
    if (auto it = table.find(mask); it != table.end()) return it->second;
    std::size_t best;
    if (mask & 1u) {
      best = min_unswapped(j + 1, mask >> 1);
    } else {
      best = 1 + min_unswapped(j + 1, mask >> 1);
      for (std::size_t t = lower_; t <= upper_ && j + t < m_ && best > 0; ++t) {
        if (mask >> t & 1u) continue;
        best = std::min(best, min_unswapped(j + 1, (mask | (std::uint64_t{1} << t)) >> 1));
      }
    }
    (*memo_)[j].emplace(mask, static_cast<std::uint32_t>(best));
    return best;
  }

  std::size_t m_, lower_, upper_;
  std::size_t budget_ = 0;
  std::shared_ptr<std::vector<std::unordered_map<std::uint64_t, std::uint32_t>>> memo_;
};

// Consent-gated bounded swap of one vector of doctor outputs. Window bounds
// past the last rank are clipped, so p_upper >= m is tolerated here.
inline SwapRecord bstd_swap(std::span<const double> values, const BstdParams& params,
                            RngStream& rng, std::size_t query_id = 0) {
  if (!params.consent.empty() && params.consent.size() != values.size())
    throw std::invalid_argument("BSTD consent vector must have length m");
  if (!params.all_consent()) throw CollaborationRejected();
  // Building the swapper is the expensive part, so keep recent window shapes
  // around. One cache per thread keeps the memo tables unshared.
  thread_local std::map<std::tuple<std::size_t, std::size_t, std::size_t>, BoundedSwapper>
      cache;
  const auto key = std::make_tuple(values.size(), params.p_lower, params.p_upper);
  auto it = cache.find(key);
  if (it == cache.end()) {
    if (cache.size() >= 64) cache.clear();
    it = cache.emplace(key, BoundedSwapper(values.size(), params.p_lower, params.p_upper))
             .first;
  }
  return it->second.swap(values, rng, query_id);
}

// Doctors whose released value clears |D_j| / |D|^2 (inclusive).
inline std::vector<std::size_t> qualify(std::span<const double> released,
                                        std::span<const std::size_t> assessed_sizes,
                                        std::size_t total) {
  if (released.size() != assessed_sizes.size())
    throw std::invalid_argument("qualify: length mismatch");
  const double t2 = static_cast<double>(total) * static_cast<double>(total);
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < released.size(); ++j) {
    if (std::abs(released[j]) >= static_cast<double>(assessed_sizes[j]) / t2)
      active.push_back(j);
  }
  return active;
}

struct SynthesisResult {
  double prediction = 0.0;
  std::vector<std::size_t> active_set;
  std::size_t active_mass = 0;
  // Raised when no doctor qualified and the prediction defaulted to zero.
  bool flagged = false;
};

// (|D| / |D*|) * sum of active released values. The sum runs over the values
// in sorted order so that it does not depend on which position holds which
// value.
inline SynthesisResult synthesize(std::span<const double> released,
                                  std::span<const std::size_t> active,
                                  std::span<const std::size_t> assessed_sizes,
                                  std::size_t total) {
  SynthesisResult res;
  res.active_set.assign(active.begin(), active.end());
  if (active.empty()) {
    res.flagged = true;
    return res;
  }
  std::vector<double> terms;
  terms.reserve(active.size());
  for (std::size_t j : active) {
    if (j >= released.size() || j >= assessed_sizes.size())
      throw std::invalid_argument("synthesize: active index out of range");
    terms.push_back(released[j]);
    res.active_mass += assessed_sizes[j];
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double v : terms) sum += v;
  res.prediction =
      static_cast<double>(total) / static_cast<double>(res.active_mass) * sum;
  return res;
}

inline SynthesisResult synthesize(const SwapRecord& swap,
                                  std::span<const std::size_t> active,
                                  std::span<const std::size_t> assessed_sizes,
                                  std::size_t total) {
  return synthesize(swap.swapped, active, assessed_sizes, total);
}

// Doctor-side protection applied to the bundled outputs of one query.
using OutputDefense = std::variant<std::monostate, BstdParams, NoiseParams>;

enum class QualifyRule {
  // Threshold the released (possibly swapped) values.
  kReleased,
  // Threshold each doctor's own pre-release value.
  kUnswapped,
};

struct Released {
  // Bundled values before any doctor-side protection.
  Vector original;
  // What the central agent receives.
  Vector values;
  // Present when the defense was a swap.
  std::optional<SwapRecord> swap;
};

// One-shot collaboration over a fixed partition. Construction performs the
// consent check (before any shard is touched) and the per-doctor bandwidth
// refinement.
class Platform {
 public:
  Platform(const Partition& partition, OutputDefense defense = {},
           QualifyRule rule = QualifyRule::kReleased)
      : partition_(&partition), defense_(std::move(defense)), rule_(rule) {
    if (const auto* b = std::get_if<BstdParams>(&defense_)) {
      if (!b->consent.empty() && !b->all_consent()) throw CollaborationRejected();
      b->validate(partition.m());
      swapper_.emplace(partition.m(), b->p_lower, b->p_upper);
    }
    if (partition.m() < 2) throw std::invalid_argument("platform needs m >= 2");
    sizes_ = partition.assessed_sizes();
    total_ = partition.assessed_total();
    refined_.reserve(partition.m());
    for (const auto& shard : partition.shards) {
      if (shard.size() == 0) throw std::invalid_argument("empty doctor shard");
      refined_.push_back(refine_kernel(shard.kernel, shard.size(), total_));
    }
  }

  const Partition& partition() const { return *partition_; }
  const std::vector<std::size_t>& assessed_sizes() const { return sizes_; }
  std::size_t total() const { return total_; }
  const std::vector<KernelSpec>& refined_kernels() const { return refined_; }
  const OutputDefense& defense() const { return defense_; }

  // Each doctor's refined local estimate at x.
  Vector local_estimates(std::span<const double> x) const {
    Vector out(partition_->m());
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = lar_predict(partition_->shards[j], x, refined_[j]).value;
    return out;
  }

  // Local estimates scaled by |D_j| / |D|.
  Vector bundle(std::span<const double> x) const {
    Vector out = local_estimates(x);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] *= static_cast<double>(sizes_[j]) / static_cast<double>(total_);
    return out;
  }

  Released release(std::span<const double> bundled, RngStream& rng,
                   std::size_t query_id = 0) const {
    Released r;
    r.original.assign(bundled.begin(), bundled.end());
    if (swapper_) {
      r.swap = swapper_->swap(bundled, rng, query_id);
      r.values = r.swap->swapped;
    } else if (const auto* noise = std::get_if<NoiseParams>(&defense_)) {
      r.values = noise_perturb(bundled, *noise, rng);
    } else {
      r.values = r.original;
    }
    return r;
  }

  SynthesisResult combine(const Released& r) const {
    const auto active =
        qualify(rule_ == QualifyRule::kUnswapped ? r.original : r.values, sizes_, total_);
    return synthesize(r.values, active, sizes_, total_);
  }

 private:
  const Partition* partition_;
  OutputDefense defense_;
  QualifyRule rule_;
  std::optional<BoundedSwapper> swapper_;
  std::vector<std::size_t> sizes_;
  std::size_t total_ = 0;
  std::vector<KernelSpec> refined_;
};

struct PipelineOutput {
  PerturbedQuery query;
  Released released;
  SynthesisResult result;
};

// The full one-shot protocol for one patient query: TQMA (optional), local
// estimation with refined bandwidths, bundling, BSTD (optional),
// qualification and synthesis.
inline PipelineOutput run_pipeline(const Platform& platform,
                                   const PatientRecord& query,
                                   const AttributeSchema& schema,
                                   std::optional<TqmaParams> tqma, RngStream& rng,
                                   std::size_t query_id = 0) {
  PipelineOutput out;
  if (tqma) {
    out.query = tqma_query(query, schema, *tqma);
  } else {
    if (!validate_schema(query, schema))
      throw std::invalid_argument("record does not match schema");
    out.query = {query, query.qia, PerturbMethod::kNone};
  }
  const Vector x = out.query.input();
  out.released = platform.release(platform.bundle(x), rng, query_id);
  out.result = platform.combine(out.released);
  return out;
}

inline PipelineOutput run_pipeline(const Partition& partition,
                                   const PatientRecord& query,
                                   const AttributeSchema& schema,
                                   std::optional<TqmaParams> tqma,
                                   std::optional<BstdParams> bstd, RngStream& rng,
                                   std::size_t query_id = 0) {
  OutputDefense defense;
  if (bstd) defense = *bstd;
  const Platform platform(partition, defense);
  return run_pipeline(platform, query, schema, tqma, rng, query_id);
}

// One JSON object per query for the audit trail.
inline nlohmann::json trace_json(const PipelineOutput& out, std::size_t query_id) {
  nlohmann::json j;
  j["query_id"] = query_id;
  j["qia"] = out.query.original.qia;
  j["perturbed_qia"] = out.query.perturbed_qia;
  j["method"] = std::string(to_string(out.query.method));
  j["bundled"] = out.released.original;
  j["released"] = out.released.values;
  if (out.released.swap) j["permutation"] = out.released.swap->permutation;
  j["active"] = out.result.active_set;
  j["active_mass"] = out.result.active_mass;
  j["prediction"] = out.result.prediction;
  j["flagged"] = out.result.flagged;
  return j;
}

}  // namespace ppcmp

#endif  // PPCMP_PLATFORM_HPP_
