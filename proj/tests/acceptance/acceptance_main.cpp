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
// Acceptance suite. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "../oracles.hpp"
#include "ppcmp/ppcmp.hpp"

namespace ppcmp {
namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// TQMA closeness: P(|v - v'| <= 2 mu) against 2^(k+2) mu plus three SEs.
Verdict tqma_closeness() {
  const auto t0 = Clock::now();
  constexpr double kMu = 1e-3;
  constexpr std::size_t kDraws = 1000000;
  RngStream rng(101, "acceptance/tqma");
  bool ok = true;
  std::string d;
  for (int k = 2; k <= 5; ++k) {
    std::size_t close = 0;
    for (std::size_t i = 0; i < kDraws; ++i) {
      const double v = rng.uniform();
      close += std::abs(v - tqma_scalar(v, {0.0, 1.0}, k)) <= 2.0 * kMu;
    }
    const double p = static_cast<double>(close) / kDraws;
    const double bound = std::ldexp(1.0, k + 2) * kMu + 3.0 * std::sqrt(p * (1 - p) / kDraws);
    ok = ok && p <= bound;
    d += fmt::format("k={} p={:.5f} bound={:.5f}; ", k, p, bound);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 10.0;
  return {ok, d + fmt::format("{:.1f}s", secs)};
}

// A fixed victim stays in place on every one of |D_j| queries.
Verdict victim_unswapped() {
  const auto t0 = Clock::now();
  constexpr std::size_t kM = 20, kTrials = 100000;
  const BoundedSwapper swapper(kM, 3, 8);
  RngStream rng(202, "acceptance/prop2");
  bool ok = true;
  std::string d = fmt::format("budget={} unswapped/query; ", swapper.unswapped_count());
  Vector values(kM);
  for (std::size_t queries = 1; queries <= 3; ++queries) {
    std::size_t hit = 0;
    for (std::size_t t = 0; t < kTrials; ++t) {
      bool all = true;
      for (std::size_t q = 0; q < queries && all; ++q) {
        for (double& v : values) v = rng.uniform();
        all = swapper.swap(values, rng).permutation[0] == 0;
      }
      hit += all;
    }
    const double p = static_cast<double>(hit) / kTrials;
    const double bound = std::pow(6.0, -static_cast<double>(queries)) +
                         3.0 * std::sqrt(p * (1 - p) / kTrials);
    ok = ok && p <= bound;
    d += fmt::format("|D_j|={} p={:.5f} bound={:.5f}; ", queries, p, bound);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 30.0;
  return {ok, d + fmt::format("{:.1f}s", secs)};
}

// Per-query RL never exceeds 100 (p_lower - 1) / m.
Verdict swap_linkage_bound() {
  RngStream rng(303, "acceptance/rl");
  const std::size_t ms[] = {5, 10, 20};
  std::size_t violations = 0;
  double worst_slack = 1e9;
  for (std::size_t inst = 0; inst < 10000; ++inst) {
    const std::size_t m = ms[rng.uniform_index(3)];
    BstdParams p;
    p.p_lower = 2 + rng.uniform_index(m - 3);
    p.p_upper = p.p_lower + 1 + rng.uniform_index(m - 1 - p.p_lower);
    p.validate(m);
    Vector v(m);
    for (double& x : v) x = rng.uniform();
    const SwapRecord s = bstd_swap(v, p, rng, inst);
    const double rl = record_linkage_rate(s.original, s.swapped);
    const double bound = 100.0 * static_cast<double>(p.p_lower - 1) / static_cast<double>(m);
    violations += rl > bound;
    worst_slack = std::min(worst_slack, bound - rl);
  }
  return {violations == 0,
          fmt::format("10000 instances, violations={}, min slack={:.2f} pts", violations,
                      worst_slack)};
}

struct ToyRun {
  std::map<std::pair<std::string, std::string>, double> mean;
  std::size_t reps = 0;
  double seconds = 0.0;
  std::vector<std::string> diagnostics;

  double at(const std::string& c, const std::string& m) const { return mean.at({c, m}); }
};

// Full-scale toy experiment shared by the three table checks.
ToyRun run_toy() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.conditions = {"original", "tqma", "bstd", "tqma_bstd", "bstd@attack",
                    "tqma_bstd@attack"};
  const RunReport report = run_experiment(cfg);
  ToyRun out;
  out.reps = cfg.repetitions;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
  for (const auto& r : report.rows) {
    auto& a = acc[{r.condition, r.metric}];
    a.first += r.value;
    ++a.second;
  }
  for (const auto& [k, a] : acc) out.mean[k] = a.first / static_cast<double>(a.second);
  out.diagnostics = report.diagnostics;
  out.seconds = seconds_since(t0);
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Verdict toy_tqma(const ToyRun& t) {
  const double co = t.at("tqma", "co");
  const double r0 = t.at("original", "rmse"), r1 = t.at("tqma", "rmse");
  const bool ok = co >= 4.0 && co <= 9.0 && rel(r1, r0) <= 0.10 && t.diagnostics.empty();
  return {ok, fmt::format("|D|=10000, {} reps, {:.0f}s: CO={:.2f}% RMSE {:.5f} vs {:.5f} "
                          "({:+.2f}%)",
                          t.reps, t.seconds, co, r1, r0, 100.0 * (r1 - r0) / r0)};
}

Verdict toy_bstd(const ToyRun& t) {
  const double ae0 = t.at("original", "ae"), ae1 = t.at("bstd", "ae");
  const double f1 = t.at("bstd@attack", "ae") / ae1;
  const double f2 = t.at("tqma_bstd@attack", "ae") / t.at("tqma_bstd", "ae");
  const bool ok = rel(ae1, ae0) <= 0.05 && std::min(f1, f2) >= 2.0;
  return {ok, fmt::format("AE {:.7f} vs {:.7f} ({:+.2f}%); attack factor {:.2f} (bstd), "
                          "{:.2f} (tqma_bstd)",
                          ae1, ae0, 100.0 * (ae1 - ae0) / ae0, f1, f2)};
}

Verdict toy_headline(const ToyRun& t) {
  const double ae0 = t.at("original", "ae"), ae1 = t.at("tqma_bstd", "ae");
  const double co = t.at("tqma_bstd", "co"), rl = t.at("tqma_bstd", "rl");
  const bool ok = rel(ae1, ae0) <= 0.05 && co <= 9.0 && rl <= 10.0;
  return {ok, fmt::format("AE change {:+.2f}%, CO={:.2f}%, RL={:.2f}%",
                          100.0 * (ae1 - ae0) / ae0, co, rl)};
}

// Equal-size doctors with a strictly positive target, so every doctor
// clears the threshold.
Partition positive_partition(std::size_t m, std::size_t per, std::span<const KernelKind> kinds,
                             RngStream& rng) {
  Partition p;
  for (std::size_t j = 0; j < m; ++j) {
    DoctorShard s;
    for (std::size_t i = 0; i < per; ++i) {
      Vector x(5);
      for (double& v : x) v = rng.uniform();
      s.samples.push_back({x, 1.0 + toy_truth(x) + rng.normal(0.0, 0.1)});
    }
    s.assessed_size = per;
    RngStream cv = rng.derive("cv", j);
    s.kernel = select_bandwidth(s, kinds[rng.uniform_index(kinds.size())], cv).spec;
    p.shards.push_back(std::move(s));
  }
  return p;
}

Verdict synthesis_symmetry() {
  RngStream rng(707, "acceptance/symmetry");
  const KernelKind kinds[] = {KernelKind::kNwkGaussian, KernelKind::kNwkLaplace,
                              KernelKind::kKnn};
  const Partition part = positive_partition(20, 150, kinds, rng);
  const Platform plain(part);
  const Platform swapped(part, BstdParams{3, 8, {}});
  const AttributeSchema schema = AttributeSchema::unit(1, 4);
  std::size_t differ = 0, partial = 0, moved = 0;
  for (std::size_t q = 0; q < 1000; ++q) {
    PatientRecord r;
    r.qia = {rng.uniform()};
    for (int i = 0; i < 4; ++i) r.ca.push_back(rng.uniform());
    const auto a = run_pipeline(plain, r, schema, std::nullopt, rng, q);
    const auto b = run_pipeline(swapped, r, schema, std::nullopt, rng, q);
    partial += a.result.active_set.size() != part.m() || b.result.active_set.size() != part.m();
    moved += b.released.swap->fixed_count() < part.m();
    differ += a.result.prediction != b.result.prediction;
  }
  return {differ == 0 && partial == 0,
          fmt::format("1000 queries, m=20: {} differ, {} not fully active, {} had swaps",
                      differ, partial, moved)};
}

Verdict weight_sums() {
  RngStream rng(808, "acceptance/weights");
  std::size_t done = 0, tried = 0;
  double worst = 0.0;
  std::vector<double> w;
  while (done < 10000) {
    ++tried;
    const std::size_t n = 1 + rng.uniform_index(60), dim = 1 + rng.uniform_index(6);
    DoctorShard s;
    for (std::size_t i = 0; i < n; ++i) {
      Vector x(dim);
      for (double& v : x) v = rng.uniform();
      s.samples.push_back({x, rng.uniform()});
    }
    Vector x(dim);
    for (double& v : x) v = rng.uniform();
    const KernelKind kind = kAllKernels[rng.uniform_index(kAllKernels.size())];
    const KernelSpec spec = kind == KernelKind::kKnn
                                ? KernelSpec::neighbors(1 + rng.uniform_index(n))
                                : KernelSpec::bandwidth(kind, std::pow(10.0, rng.uniform(-2, 0)));
    if (!(lar_weights(s, x, spec, w) > 0.0)) continue;
    double sum = 0.0;
    for (double v : w) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
    ++done;
  }
  return {worst < 1e-12, fmt::format("10000 supported triples ({} drawn), max |sum-1|={:.3g}",
                                     tried, worst)};
}

Verdict oracle_equivalence() {
  RngStream rng(909, "acceptance/oracle");
  const AttributeSchema schema = AttributeSchema::unit(1, 1);
  double worst = 0.0;
  for (std::size_t inst = 0; inst < 10000; ++inst) {
    Partition part;
    std::vector<oracle::Doctor> docs;
    for (int j = 0; j < 3; ++j) {
      DoctorShard s;
      oracle::Doctor d{{}, oracle::Kind::kGauss, 0.0, 0};
      const std::size_t n = 2 + rng.uniform_index(4);
      for (std::size_t i = 0; i < n; ++i) {
        const Vector x = {rng.uniform(), rng.uniform()};
        const double y = rng.uniform(-1, 1);
        s.samples.push_back({x, y});
        d.pts.push_back({x, y});
      }
      s.assessed_size = n;
      const std::size_t f = rng.uniform_index(5);
      const double h = rng.uniform(0.05, 0.95);
      const std::size_t k = 1 + rng.uniform_index(n);
      static const oracle::Kind kOk[] = {oracle::Kind::kGauss, oracle::Kind::kLaplace,
                                         oracle::Kind::kEpan, oracle::Kind::kPe,
                                         oracle::Kind::kKnn};
      d.kind = kOk[f];
      s.kernel = f == 4 ? KernelSpec::neighbors(k) : KernelSpec::bandwidth(kAllKernels[f], h);
      d.h = h;
      d.k = k;
      part.shards.push_back(std::move(s));
      docs.push_back(std::move(d));
    }
    PatientRecord r;
    r.qia = {rng.uniform()};
    r.ca = {rng.uniform()};
    const double got =
        run_pipeline(part, r, schema, std::nullopt, std::nullopt, rng).result.prediction;
    const double want = oracle::collaborative(docs, r.input());
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-12,
          fmt::format("10000 instances, m=3, 2..5 points each, max |diff|={:.3g}", worst)};
}

// AE against |D| on a one-dimensional toy with both defenses on.
Verdict rate_slope() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.dataset.toy.dim = 1;
  cfg.dataset.toy.qia_dims = 1;
  cfg.tqma_depth = 10;
  cfg.repetitions = 3;
  cfg.conditions = {"tqma_bstd"};
  cfg.sweep = SweepConfig{"n_train", {2000, 8000, 32000}};
  const RunReport report = run_experiment(cfg);
  std::map<double, std::pair<double, std::size_t>> ae;
  for (const auto& r : report.rows) {
    if (r.metric != "ae") continue;
    ae[r.sweep_value].first += r.value;
    ++ae[r.sweep_value].second;
  }
  std::vector<double> lx, ly;
  std::string d;
  bool depth_ok = true;
  for (const auto& [n, a] : ae) {
    const double mean = a.first / static_cast<double>(a.second);
    lx.push_back(std::log(n));
    ly.push_back(std::log(mean));
    depth_ok = depth_ok && cfg.tqma_depth >= std::log2(n) / 6.0 - 1.0;
    d += fmt::format("|D|={:.0f} AE={:.3g}; ", n, mean);
  }
  if (lx.size() != 3 || !report.diagnostics.empty())
    return {false, d + "incomplete sweep"};
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  const bool ok = depth_ok && slope >= -1.0 && slope <= -0.3;
  return {ok, d + fmt::format("k={} slope={:.3f} {:.0f}s", cfg.tqma_depth, slope,
                              seconds_since(t0))};
}

}  // namespace
}  // namespace ppcmp

int main() {
  using namespace ppcmp;
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    fmt::print("{} [{:2d}] {}: {}\n", v.pass ? "PASS" : "FAIL", id, name, v.detail);
    std::fflush(stdout);
    failures += !v.pass;
  };
  auto guarded = [](const std::function<Verdict()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Verdict{false, std::string("exception: ") + e.what()};
    }
  };
  report(1, "TQMA closeness bound", guarded(tqma_closeness));
  report(2, "victim unswapped across queries", guarded(victim_unswapped));
  report(3, "swap record-linkage bound", guarded(swap_linkage_bound));
  ToyRun toy;
  std::string toy_error;
  try {
    toy = run_toy();
  } catch (const std::exception& e) {
    toy_error = e.what();
  }
  const auto on_toy = [&](Verdict (*f)(const ToyRun&)) {
    return toy_error.empty() ? guarded([&] { return f(toy); })
                             : Verdict{false, "toy run failed: " + toy_error};
  };
  report(4, "toy TQMA privacy and utility", on_toy(toy_tqma));
  report(5, "toy BSTD utility and extraction", on_toy(toy_bstd));
  report(6, "toy TQMA+BSTD headline", on_toy(toy_headline));
  report(7, "synthesis symmetry", guarded(synthesis_symmetry));
  report(8, "weight-sum invariant", guarded(weight_sums));
  report(9, "oracle equivalence", guarded(oracle_equivalence));
  report(10, "rate sanity", guarded(rate_slope));
  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
