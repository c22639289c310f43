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
#ifndef PPCMP_HARNESS_DATASET_HPP_
#define PPCMP_HARNESS_DATASET_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ppcmp/attacks.hpp"
#include "ppcmp/core.hpp"
#include "ppcmp/metrics.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

// Everything one repetition needs: doctors' pooled training data, the
// patients that query the platform with their true outputs, and the
// attacker's side table.
struct Dataset {
  AttributeSchema schema;
  std::vector<LabeledSample> train;
  std::vector<PatientRecord> test;
  Vector test_truth;
  AttackTable attack_table;
  // Set when the target is a dose in mg/week after un-normalizing.
  bool dose_target = false;
  DoseUnits target_units;
  std::vector<std::string> warnings;
};

// Ground truth of the toy simulation.
inline double toy_truth(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  const double r = std::sqrt(s);
  if (r > 0.0 && r <= 1.0) {
    const double t = 1.0 - r;
    return t * t * t * t * t * (1.0 + 5.0 * r) + s / 5.0;
  }
  return s / 5.0;
}

struct ToyGenerator {
  std::size_t dim = 5;
  // Leading coordinates that act as quasi-identifiers; the rest are CA.
  std::size_t qia_dims = 1;
  // Standard deviation of the additive training noise.
  double noise_sigma = 0.1;
  double table_noise_sigma = 1e-3;
  std::size_t n_train = 10000;
  std::size_t n_test = 1000;
};

inline Dataset generate_toy(const ToyGenerator& gen, RngStream& rng) {
  if (gen.dim < 1 || gen.qia_dims < 1 || gen.qia_dims > gen.dim)
    throw std::invalid_argument("toy: need 1 <= qia_dims <= dim");
  if (gen.noise_sigma < 0.0) throw std::invalid_argument("toy: sigma < 0");
  Dataset ds;
  ds.schema = AttributeSchema::unit(gen.qia_dims, gen.dim - gen.qia_dims);
  RngStream tr = rng.derive("train");
  ds.train.resize(gen.n_train);
  for (auto& s : ds.train) {
    s.input.resize(gen.dim);
    for (double& v : s.input) v = tr.uniform();
    s.output = toy_truth(s.input) + tr.normal(0.0, gen.noise_sigma);
  }
  RngStream te = rng.derive("test");
  ds.test.resize(gen.n_test);
  ds.test_truth.resize(gen.n_test);
  for (std::size_t i = 0; i < gen.n_test; ++i) {
    Vector x(gen.dim);
    for (double& v : x) v = te.uniform();
    PatientRecord& r = ds.test[i];
    r.qia.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(gen.qia_dims));
    r.ca.assign(x.begin() + static_cast<std::ptrdiff_t>(gen.qia_dims), x.end());
    r.ia = Vector{static_cast<double>(i)};
    ds.test_truth[i] = toy_truth(x);
  }
  ds.schema.ia_dims = 1;
  RngStream at = rng.derive("table");
  ds.attack_table = make_attack_table(ds.test, gen.table_noise_sigma, at);
  return ds;
}

}  // namespace ppcmp

#endif  // PPCMP_HARNESS_DATASET_HPP_
