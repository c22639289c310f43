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
#ifndef PPCMP_HARNESS_CONFIG_HPP_
#define PPCMP_HARNESS_CONFIG_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmt/core.h"
#include "json.hpp"
#include "ppcmp/core.hpp"
#include "ppcmp/harness/csv.hpp"
#include "ppcmp/harness/dataset.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

struct DatasetConfig {
  // "toy" or "csv".
  std::string source = "toy";
  ToyGenerator toy;
  std::string csv_path;
  std::string sidecar_path;
  // Overrides the sidecar's split when set.
  std::optional<std::array<double, 3>> split;
};

struct BaselineConfig {
  std::size_t uma_groups = 16;
  std::size_t kdtree_leaf_size = 63;
  double mul_p_noise = 0.21;
  bool mul_mean_zero = false;
  double dp_epsilon = 32.0;
  double doctor_mul_p_noise = 36.0;
  double doctor_dp_epsilon = 1.0;
};

struct SweepConfig {
  std::string param;
  std::vector<double> values;
};

inline const std::vector<std::string>& default_conditions() {
  static const std::vector<std::string> kList = {
      "original",          "tqma",
      "uma",               "kdtree",
      "mul_noise",         "dp_noise",
      "bstd",              "tqma_bstd",
      "doctor_mul_noise",  "doctor_dp_noise",
      "original@attack",   "tqma@attack",
      "bstd@attack",       "tqma_bstd@attack",
      "doctor_mul_noise@attack", "doctor_dp_noise@attack",
      "global_ols",        "fixed_dose"};
  return kList;
}

inline const std::vector<std::string>& sweepable_params() {
  static const std::vector<std::string> kList = {
      "tqma_depth", "p_lower", "p_upper", "m", "mu", "n_train"};
  return kList;
}

struct ExperimentConfig {
  DatasetConfig dataset;
  std::size_t m = 20;
  double mu = 1e-3;
  int tqma_depth = 4;
  std::size_t p_lower = 3;
  std::size_t p_upper = 8;
  // "released" or "unswapped".
  std::string qualify_rule = "released";
  // Families doctors draw their local learner from.
  std::vector<std::string> kernels = {"nwk_gaussian", "nwk_laplace",
                                      "nwk_epanechnikov", "pe", "knn"};
  // Optional per-doctor size the platform assumes instead of the true one.
  std::vector<std::size_t> assessed_sizes;
  std::vector<std::string> conditions = default_conditions();
  BaselineConfig baselines;
  std::size_t repetitions = 20;
  std::uint64_t seed = 20240601;
  // 0 means one worker per hardware thread. Not part of the fingerprint.
  std::size_t threads = 0;
  std::optional<SweepConfig> sweep;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  void validate() const;
  // Applies one sweep value; unknown names throw.
  void set_param(const std::string& name, double value);
};

namespace internal {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& keys,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key()))
      throw std::invalid_argument("unknown config key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace internal

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json d;
  d["source"] = dataset.source;
  d["toy"] = {{"dim", dataset.toy.dim},
              {"qia_dims", dataset.toy.qia_dims},
              {"noise_sigma", dataset.toy.noise_sigma},
              {"table_noise_sigma", dataset.toy.table_noise_sigma},
              {"n_train", dataset.toy.n_train},
              {"n_test", dataset.toy.n_test}};
  d["csv_path"] = dataset.csv_path;
  d["sidecar_path"] = dataset.sidecar_path;
  if (dataset.split) d["split"] = *dataset.split;

  nlohmann::json b = {{"uma_groups", baselines.uma_groups},
                      {"kdtree_leaf_size", baselines.kdtree_leaf_size},
                      {"mul_p_noise", baselines.mul_p_noise},
                      {"mul_mean_zero", baselines.mul_mean_zero},
                      {"dp_epsilon", baselines.dp_epsilon},
                      {"doctor_mul_p_noise", baselines.doctor_mul_p_noise},
                      {"doctor_dp_epsilon", baselines.doctor_dp_epsilon}};
  nlohmann::json j = {{"dataset", d},
                      {"m", m},
                      {"mu", mu},
                      {"tqma_depth", tqma_depth},
                      {"p_lower", p_lower},
                      {"p_upper", p_upper},
                      {"qualify_rule", qualify_rule},
                      {"kernels", kernels},
                      {"assessed_sizes", assessed_sizes},
                      {"conditions", conditions},
                      {"baselines", b},
                      {"repetitions", repetitions},
                      {"seed", seed},
                      {"threads", threads}};
  if (sweep) j["sweep"] = {{"param", sweep->param}, {"values", sweep->values}};
  return j;
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  internal::reject_unknown(j, {"dataset", "m", "mu", "tqma_depth", "p_lower",
                               "p_upper", "qualify_rule", "kernels",
                               "assessed_sizes", "conditions", "baselines",
                               "repetitions", "seed", "threads", "sweep"},
                           "config");
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    internal::reject_unknown(d, {"source", "toy", "csv_path", "sidecar_path", "split"},
                             "dataset");
    internal::read_opt(d, "source", c.dataset.source);
    internal::read_opt(d, "csv_path", c.dataset.csv_path);
    internal::read_opt(d, "sidecar_path", c.dataset.sidecar_path);
    if (d.contains("split")) c.dataset.split = d["split"].get<std::array<double, 3>>();
    if (d.contains("toy")) {
      const auto& t = d["toy"];
      internal::reject_unknown(t, {"dim", "qia_dims", "noise_sigma",
                                   "table_noise_sigma", "n_train", "n_test"},
                               "dataset.toy");
      internal::read_opt(t, "dim", c.dataset.toy.dim);
      internal::read_opt(t, "qia_dims", c.dataset.toy.qia_dims);
      internal::read_opt(t, "noise_sigma", c.dataset.toy.noise_sigma);
      internal::read_opt(t, "table_noise_sigma", c.dataset.toy.table_noise_sigma);
      internal::read_opt(t, "n_train", c.dataset.toy.n_train);
      internal::read_opt(t, "n_test", c.dataset.toy.n_test);
    }
  }
  internal::read_opt(j, "m", c.m);
  internal::read_opt(j, "mu", c.mu);
  internal::read_opt(j, "tqma_depth", c.tqma_depth);
  internal::read_opt(j, "p_lower", c.p_lower);
  internal::read_opt(j, "p_upper", c.p_upper);
  internal::read_opt(j, "qualify_rule", c.qualify_rule);
  internal::read_opt(j, "kernels", c.kernels);
  internal::read_opt(j, "assessed_sizes", c.assessed_sizes);
  internal::read_opt(j, "conditions", c.conditions);
  internal::read_opt(j, "repetitions", c.repetitions);
  internal::read_opt(j, "seed", c.seed);
  internal::read_opt(j, "threads", c.threads);
  if (j.contains("baselines")) {
    const auto& b = j["baselines"];
    internal::reject_unknown(b, {"uma_groups", "kdtree_leaf_size", "mul_p_noise",
                                 "mul_mean_zero", "dp_epsilon", "doctor_mul_p_noise",
                                 "doctor_dp_epsilon"},
                             "baselines");
    internal::read_opt(b, "uma_groups", c.baselines.uma_groups);
    internal::read_opt(b, "kdtree_leaf_size", c.baselines.kdtree_leaf_size);
    internal::read_opt(b, "mul_p_noise", c.baselines.mul_p_noise);
    internal::read_opt(b, "mul_mean_zero", c.baselines.mul_mean_zero);
    internal::read_opt(b, "dp_epsilon", c.baselines.dp_epsilon);
    internal::read_opt(b, "doctor_mul_p_noise", c.baselines.doctor_mul_p_noise);
    internal::read_opt(b, "doctor_dp_epsilon", c.baselines.doctor_dp_epsilon);
  }
  if (j.contains("sweep") && !j["sweep"].is_null()) {
    const auto& s = j["sweep"];
    internal::reject_unknown(s, {"param", "values"}, "sweep");
    c.sweep = SweepConfig{s.at("param").get<std::string>(),
                          s.at("values").get<std::vector<double>>()};
  }
  c.validate();
  return c;
}

inline void ExperimentConfig::set_param(const std::string& name, double value) {
  if (name == "tqma_depth") tqma_depth = static_cast<int>(value);
  else if (name == "p_lower") p_lower = static_cast<std::size_t>(value);
  else if (name == "p_upper") p_upper = static_cast<std::size_t>(value);
  else if (name == "m") m = static_cast<std::size_t>(value);
  else if (name == "mu") mu = value;
  else if (name == "n_train") dataset.toy.n_train = static_cast<std::size_t>(value);
  else throw std::invalid_argument("not a sweepable parameter: " + name);
}

enum class PatientSide { kNone, kTqma, kUma, kKdTree, kMulNoise, kDpNoise };
enum class DoctorSide { kNone, kBstd, kMulNoise, kDpNoise };
enum class Comparator { kNone, kGlobalOls, kFixedDose };

// Parsed condition name: "<patient>_<doctor>" style base names, optionally
// suffixed with "@attack" for an extraction attack on the largest shard.
struct ConditionSpec {
  std::string name;
  PatientSide patient = PatientSide::kNone;
  DoctorSide doctor = DoctorSide::kNone;
  Comparator comparator = Comparator::kNone;
  bool attack = false;
};

inline std::optional<ConditionSpec> parse_condition(const std::string& name) {
  ConditionSpec c;
  c.name = name;
  std::string base = name;
  const std::string suffix = "@attack";
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    c.attack = true;
    base.resize(base.size() - suffix.size());
  }
  if (base == "global_ols" || base == "fixed_dose") {
    if (c.attack) return std::nullopt;
    c.comparator = base == "global_ols" ? Comparator::kGlobalOls : Comparator::kFixedDose;
    return c;
  }
  if (base == "uma" || base == "kdtree" || base == "mul_noise" || base == "dp_noise") {
    if (c.attack) return std::nullopt;
    c.patient = base == "uma"         ? PatientSide::kUma
                : base == "kdtree"    ? PatientSide::kKdTree
                : base == "mul_noise" ? PatientSide::kMulNoise
                                      : PatientSide::kDpNoise;
    return c;
  }
  if (base.rfind("tqma", 0) == 0) {
    c.patient = PatientSide::kTqma;
    base = base.substr(4);
    if (base.empty()) return c;
    if (base.front() != '_') return std::nullopt;
    base = base.substr(1);
  } else if (base == "original") {
    return c;
  }
  if (base == "bstd") c.doctor = DoctorSide::kBstd;
  else if (base == "doctor_mul_noise") c.doctor = DoctorSide::kMulNoise;
  else if (base == "doctor_dp_noise") c.doctor = DoctorSide::kDpNoise;
  else return std::nullopt;
  return c;
}

inline bool is_known_condition(const std::string& name) {
  return parse_condition(name).has_value();
}

inline void ExperimentConfig::validate() const {
  if (dataset.source != "toy" && dataset.source != "csv")
    throw std::invalid_argument("dataset.source must be 'toy' or 'csv'");
  if (dataset.source == "csv" && (dataset.csv_path.empty() || dataset.sidecar_path.empty()))
    throw std::invalid_argument("csv source needs csv_path and sidecar_path");
  if (m < 2) throw std::invalid_argument("m must be >= 2");
  if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
  if (tqma_depth < 0 || tqma_depth > 60)
    throw std::invalid_argument("tqma_depth must lie in [0, 60]");
  if (!(p_lower >= 1 && p_lower < p_upper && p_upper < m))
    throw std::invalid_argument("need 1 <= p_lower < p_upper < m");
  if (qualify_rule != "released" && qualify_rule != "unswapped")
    throw std::invalid_argument("qualify_rule must be 'released' or 'unswapped'");
  if (kernels.empty()) throw std::invalid_argument("kernels must be nonempty");
  for (const auto& k : kernels) (void)kernel_from_string(k);
  if (!assessed_sizes.empty() && assessed_sizes.size() != m)
    throw std::invalid_argument("assessed_sizes must list one size per doctor");
  for (std::size_t s : assessed_sizes) {
    if (s == 0) throw std::invalid_argument("assessed sizes must be >= 1");
  }
  if (conditions.empty()) throw std::invalid_argument("conditions must be nonempty");
  for (const auto& c : conditions) {
    if (!is_known_condition(c)) throw std::invalid_argument("unknown condition: " + c);
  }
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (dataset.split) validate_split(*dataset.split);
  if (sweep) {
    bool ok = false;
    for (const auto& p : sweepable_params()) ok |= p == sweep->param;
    if (!ok) throw std::invalid_argument("not a sweepable parameter: " + sweep->param);
    if (sweep->values.empty()) throw std::invalid_argument("sweep needs values");
    for (double v : sweep->values) {
      ExperimentConfig probe = *this;
      probe.sweep.reset();
      probe.set_param(sweep->param, v);
      probe.validate();
    }
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return ExperimentConfig::from_json(nlohmann::json::parse(in));
}

// Stable identifier of everything that determines the numbers.
inline std::string config_fingerprint(const ExperimentConfig& c) {
  nlohmann::json j = c.to_json();
  j.erase("threads");
  return fmt::format("{:016x}", internal::fnv1a64(j.dump()));
}

}  // namespace ppcmp

#endif  // PPCMP_HARNESS_CONFIG_HPP_
