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
#ifndef PPCMP_HARNESS_EXPERIMENT_HPP_
#define PPCMP_HARNESS_EXPERIMENT_HPP_

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fmt/core.h"
#include "ppcmp/attacks.hpp"
#include "ppcmp/core.hpp"
#include "ppcmp/harness/config.hpp"
#include "ppcmp/harness/csv.hpp"
#include "ppcmp/harness/dataset.hpp"
#include "ppcmp/metrics.hpp"
#include "ppcmp/perturb.hpp"
#include "ppcmp/platform.hpp"
#include "ppcmp/regress.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

inline constexpr double kFixedDoseMgPerWeek = 35.0;

// One long-format result value.
struct ResultRow {
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::string sweep_param;
  // NaN when the run has no sweep.
  double sweep_value = std::numeric_limits<double>::quiet_NaN();
  std::size_t rep = 0;
  std::string condition;
  std::string metric;
  double value = 0.0;
};

struct RunReport {
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::vector<ResultRow> rows;
  std::vector<std::string> diagnostics;
};

// Ordinary least squares with intercept.
class LinearModel {
 public:
  static LinearModel fit(std::span<const LabeledSample> data) {
    if (data.empty()) throw std::invalid_argument("OLS needs data");
    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(data.front().input.size());
    Eigen::MatrixXd X(n, d + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (Eigen::Index k = 0; k < d; ++k)
        X(i, k + 1) = data[static_cast<std::size_t>(i)].input[static_cast<std::size_t>(k)];
      y(i) = data[static_cast<std::size_t>(i)].output;
    }
    LinearModel m;
    m.beta_ = X.colPivHouseholderQr().solve(y);
    return m;
  }

  double predict(std::span<const double> x) const {
    double v = beta_(0);
    for (std::size_t k = 0; k < x.size(); ++k)
      v += beta_(static_cast<Eigen::Index>(k + 1)) * x[k];
    return v;
  }

 private:
  Eigen::VectorXd beta_;
};

// Metric name -> value for one condition of one repetition, in emission order.
using MetricList = std::vector<std::pair<std::string, double>>;

struct RepetitionResult {
  std::size_t rep = 0;
  std::vector<std::pair<std::string, MetricList>> conditions;
  std::vector<std::string> diagnostics;
};

inline Dataset load_dataset(const ExperimentConfig& cfg, RngStream& rng) {
  if (cfg.dataset.source == "toy") return generate_toy(cfg.dataset.toy, rng);
  CsvSidecar sc = load_sidecar(cfg.dataset.sidecar_path);
  if (cfg.dataset.split) sc.split = *cfg.dataset.split;
  return ingest_csv(cfg.dataset.csv_path, sc, rng);
}

// Builds the doctors: random split, one family per doctor drawn from the
// configured list, then a cross-validated bandwidth for that family.
inline Partition build_partition(const ExperimentConfig& cfg, const Dataset& ds,
                                 const RngStream& rep_rng) {
  RngStream prng = rep_rng.derive("partition");
  Partition part = partition_dataset(ds.train, cfg.m, prng);
  for (std::size_t j = 0; j < part.m(); ++j) {
    DoctorShard& shard = part.shards[j];
    if (!cfg.assessed_sizes.empty()) shard.assessed_size = cfg.assessed_sizes[j];
    RngStream krng = rep_rng.derive("kernel", j);
    const KernelKind kind =
        kernel_from_string(cfg.kernels[krng.uniform_index(cfg.kernels.size())]);
    RngStream cv = rep_rng.derive("cv", j);
    shard.kernel = select_bandwidth(shard, kind, cv).spec;
  }
  return part;
}

namespace internal {

inline OutputDefense make_defense(const ExperimentConfig& cfg, DoctorSide side) {
  switch (side) {
    case DoctorSide::kNone: return {};
    case DoctorSide::kBstd: return BstdParams{cfg.p_lower, cfg.p_upper, {}};
    case DoctorSide::kMulNoise: {
      NoiseParams p = NoiseParams::multiplicative(cfg.baselines.doctor_mul_p_noise);
      p.mean_zero = cfg.baselines.mul_mean_zero;
      return p;
    }
    case DoctorSide::kDpNoise:
      return NoiseParams::laplace(cfg.baselines.doctor_dp_epsilon,
                                  SensitivityRule::kMaxAbsOutput);
  }
  return {};
}

inline std::vector<PerturbedQuery> perturb_patients(const ExperimentConfig& cfg,
                                                    const Dataset& ds, PatientSide side,
                                                    const RngStream& rep_rng) {
  // Noise statistics come from the test and attack rows together.
  std::vector<Vector> attack_qia;
  for (const auto& row : ds.attack_table.rows) attack_qia.push_back(row.qia);
  switch (side) {
    case PatientSide::kNone: {
      std::vector<PerturbedQuery> out;
      for (const auto& r : ds.test) out.push_back({r, r.qia, PerturbMethod::kNone});
      return out;
    }
    case PatientSide::kTqma: {
      std::vector<PerturbedQuery> out;
      for (const auto& r : ds.test)
        out.push_back(tqma_query(r, ds.schema, TqmaParams{cfg.tqma_depth}));
      return out;
    }
    case PatientSide::kUma: return uma_perturb(ds.test, cfg.baselines.uma_groups);
    case PatientSide::kKdTree:
      return kdtree_perturb(ds.test, cfg.baselines.kdtree_leaf_size);
    case PatientSide::kMulNoise: {
      NoiseParams p = NoiseParams::multiplicative(cfg.baselines.mul_p_noise);
      p.mean_zero = cfg.baselines.mul_mean_zero;
      RngStream r = rep_rng.derive("patient_mul");
      return noise_perturb_batch(ds.test, p, r, attack_qia);
    }
    case PatientSide::kDpNoise: {
      RngStream r = rep_rng.derive("patient_dp");
      return noise_perturb_batch(
          ds.test,
          NoiseParams::laplace(cfg.baselines.dp_epsilon, SensitivityRule::kMaxAbsInput),
          r, attack_qia);
    }
  }
  return {};
}

inline void add_dose_metrics(const Dataset& ds, const Vector& pred, MetricList& out) {
  if (!ds.dose_target) return;
  const DoseGroupReport rep = dose_group_report(pred, ds.test_truth, ds.target_units);
  for (DoseGroup g : {DoseGroup::kLow, DoseGroup::kIntermediate, DoseGroup::kHigh}) {
    const DoseGroupCounts& c = rep.at(g);
    const std::string n(to_string(g));
    const double size = c.size == 0 ? 1.0 : static_cast<double>(c.size);
    out.emplace_back("ideal_pct_" + n, 100.0 * static_cast<double>(c.ideal) / size);
    out.emplace_back("under_pct_" + n, 100.0 * static_cast<double>(c.under) / size);
    out.emplace_back("over_pct_" + n, 100.0 * static_cast<double>(c.over) / size);
    out.emplace_back("correct_pct_" + n, c.correct_percent());
  }
}

}  // namespace internal

// One repetition: fresh data, doctors and every configured condition.
inline RepetitionResult run_repetition(const ExperimentConfig& cfg, std::size_t rep) {
  RepetitionResult res;
  res.rep = rep;
  const RngStream rep_rng = RngStream(cfg.seed, "ppcmp").derive("rep", rep);
  RngStream drng = rep_rng.derive("data");
  const Dataset ds = load_dataset(cfg, drng);
  for (const auto& w : ds.warnings) res.diagnostics.push_back(w);
  const Partition part = build_partition(cfg, ds, rep_rng);
  const std::size_t victim = part.largest_shard();
  const QualifyRule rule =
      cfg.qualify_rule == "unswapped" ? QualifyRule::kUnswapped : QualifyRule::kReleased;

  std::vector<ConditionSpec> specs;
  for (const auto& name : cfg.conditions) specs.push_back(*parse_condition(name));

  // Patient-side variants are shared by every condition that uses them.
  std::map<PatientSide, std::vector<PerturbedQuery>> queries;
  std::map<PatientSide, MetricList> patient_metrics;
  std::map<PatientSide, std::vector<Vector>> bundles;
  const Platform plain(part);
  for (const auto& s : specs) {
    if (s.comparator != Comparator::kNone || queries.count(s.patient)) continue;
    auto qs = internal::perturb_patients(cfg, ds, s.patient, rep_rng);
    std::vector<Vector> orig, pert;
    for (const auto& q : qs) {
      orig.push_back(q.original.qia);
      pert.push_back(q.perturbed_qia);
    }
    MetricList pm;
    pm.emplace_back("co", compute_co(orig, pert, cfg.mu));
    if (!ds.attack_table.rows.empty()) {
      const auto verdicts = attribute_attack(pert, ds.attack_table, cfg.mu);
      std::size_t linked = 0, correct = 0;
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        linked += verdicts[i].linked;
        correct += verdicts[i].linked && qs[i].original.ia &&
                   verdicts[i].ia == *qs[i].original.ia;
      }
      const double n = static_cast<double>(verdicts.size());
      pm.emplace_back("link_pct", 100.0 * static_cast<double>(linked) / n);
      pm.emplace_back("correct_link_pct", 100.0 * static_cast<double>(correct) / n);
    }
    patient_metrics[s.patient] = std::move(pm);
    std::vector<Vector> b;
    b.reserve(qs.size());
    for (const auto& q : qs) b.push_back(plain.bundle(q.input()));
    bundles[s.patient] = std::move(b);
    queries[s.patient] = std::move(qs);
  }

  for (const auto& s : specs) {
    MetricList ml;
    if (s.comparator != Comparator::kNone) {
      Vector pred(ds.test.size());
      if (s.comparator == Comparator::kFixedDose) {
        if (!ds.dose_target) continue;
        const double v = (kFixedDoseMgPerWeek - ds.target_units.offset) /
                         ds.target_units.scale;
        std::fill(pred.begin(), pred.end(), v);
      } else {
        const LinearModel ols = LinearModel::fit(ds.train);
        for (std::size_t i = 0; i < pred.size(); ++i)
          pred[i] = ols.predict(ds.test[i].input());
      }
      const UtilityScore u = compute_utility(pred, ds.test_truth);
      ml.emplace_back("ae", u.mse);
      ml.emplace_back("rmse", u.rmse);
      internal::add_dose_metrics(ds, pred, ml);
      res.conditions.emplace_back(s.name, std::move(ml));
      continue;
    }

    const OutputDefense defense = internal::make_defense(cfg, s.doctor);
    const auto& qs = queries.at(s.patient);
    const Platform platform(part, defense, rule);
    RngStream release_rng = rep_rng.derive("release/" + s.name);

    std::optional<Platform> attacked;
    std::optional<ExtractionAttackResult> ar;
    if (s.attack) {
      RngStream arng = rep_rng.derive("attack/" + s.name);
      std::optional<TqmaParams> tq;
      if (s.patient == PatientSide::kTqma) tq = TqmaParams{cfg.tqma_depth};
      ar = extraction_attack(platform, victim, InputBox::from_schema(ds.schema), tq, arng);
      attacked.emplace(ar->post_attack_partition, defense, rule);
    }
    const Platform& used = attacked ? *attacked : platform;

    Vector pred(qs.size());
    std::vector<Vector> before, after;
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const Vector b = attacked ? used.bundle(qs[i].input()) : bundles.at(s.patient)[i];
      Released rel = used.release(b, release_rng, i);
      const SynthesisResult syn = used.combine(rel);
      pred[i] = syn.prediction;
      flagged += syn.flagged;
      before.push_back(std::move(rel.original));
      after.push_back(std::move(rel.values));
    }
    const UtilityScore u = compute_utility(pred, ds.test_truth);
    ml.emplace_back("ae", u.mse);
    ml.emplace_back("rmse", u.rmse);
    for (const auto& kv : patient_metrics.at(s.patient)) ml.push_back(kv);
    ml.emplace_back("rl", compute_rl(before, after));
    ml.emplace_back("flagged_pct",
                    100.0 * static_cast<double>(flagged) / static_cast<double>(qs.size()));
    if (ar) {
      ml.emplace_back("victim_size", static_cast<double>(part.shards[victim].size()));
      ml.emplace_back("surrogate_h", ar->surrogate.h());
    }
    internal::add_dose_metrics(ds, pred, ml);
    res.conditions.emplace_back(s.name, std::move(ml));
  }
  return res;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
// is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// All repetitions (and sweep points). A repetition that throws is dropped
// with a diagnostic; the others still report.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.fingerprint = config_fingerprint(cfg);
  report.seed = cfg.seed;

  struct Point {
    std::optional<double> value;
    ExperimentConfig cfg;
  };
  std::vector<Point> points;
  if (cfg.sweep) {
    for (double v : cfg.sweep->values) {
      ExperimentConfig c = cfg;
      c.sweep.reset();
      c.set_param(cfg.sweep->param, v);
      points.push_back({v, std::move(c)});
    }
  } else {
    points.push_back({std::nullopt, cfg});
  }

  const std::size_t reps = cfg.repetitions;
  std::vector<std::optional<RepetitionResult>> results(points.size() * reps);
  std::vector<std::string> errors(results.size());
  parallel_for(results.size(), cfg.threads, [&](std::size_t k) {
    try {
      results[k] = run_repetition(points[k / reps].cfg, k % reps);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });

  for (std::size_t k = 0; k < results.size(); ++k) {
    const Point& p = points[k / reps];
    const std::string where =
        p.value ? fmt::format("{}={:.10g} rep {}", cfg.sweep->param, *p.value, k % reps)
                : fmt::format("rep {}", k % reps);
    if (!results[k]) {
      report.diagnostics.push_back(where + ": aborted: " + errors[k]);
      continue;
    }
    for (const auto& d : results[k]->diagnostics) report.diagnostics.push_back(where + ": " + d);
    for (const auto& [cond, metrics] : results[k]->conditions) {
      for (const auto& [metric, value] : metrics) {
        ResultRow row;
        row.fingerprint = report.fingerprint;
        row.seed = cfg.seed;
        if (p.value) {
          row.sweep_param = cfg.sweep->param;
          row.sweep_value = *p.value;
        }
        row.rep = k % reps;
        row.condition = cond;
        row.metric = metric;
        row.value = value;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace ppcmp

#endif  // PPCMP_HARNESS_EXPERIMENT_HPP_
