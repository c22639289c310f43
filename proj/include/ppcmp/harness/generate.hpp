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
#ifndef PPCMP_HARNESS_GENERATE_HPP_
#define PPCMP_HARNESS_GENERATE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>

#include "fmt/core.h"
#include "json.hpp"
#include "ppcmp/harness/dataset.hpp"
#include "ppcmp/rng.hpp"

namespace ppcmp {

// Toy training samples as CSV (id, x1..xd, y) plus the matching sidecar.
inline nlohmann::json write_toy_csv(const ToyGenerator& gen, RngStream& rng,
                                    std::ostream& out) {
  RngStream r = rng.derive("toy_csv");
  out << "id";
  for (std::size_t d = 0; d < gen.dim; ++d) out << ",x" << d + 1;
  out << ",y\n";
  const std::size_t n = gen.n_train + gen.n_test;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(gen.dim);
    for (double& v : x) v = r.uniform();
    out << i;
    for (double v : x) out << ',' << fmt::format("{:.17g}", v);
    out << ',' << fmt::format("{:.17g}", toy_truth(x) + r.normal(0.0, gen.noise_sigma))
        << '\n';
  }
  nlohmann::json cols = nlohmann::json::array();
  cols.push_back({{"name", "id"}, {"role", "ia"}});
  for (std::size_t d = 0; d < gen.dim; ++d) {
    cols.push_back({{"name", fmt::format("x{}", d + 1)},
                    {"role", d < gen.qia_dims ? "qia" : "ca"}});
  }
  cols.push_back({{"name", "y"}, {"role", "target"}});
  return {{"columns", cols}, {"split", {0.77, 0.14, 0.09}}, {"dose_target", false}};
}

// Synthetic table shaped like a warfarin dosing cohort: decade age bands,
// body size, race, VKORC1 genotype and two interacting drugs, with a weekly
// dose from a square-root linear model. Row `outlier_row` gets a 315 mg/week
// dose that the sidecar's outlier rule removes.
inline nlohmann::json write_warfarin_like_csv(std::size_t rows, RngStream& rng,
                                              std::ostream& out,
                                              std::size_t outlier_row = 0) {
  RngStream r = rng.derive("warfarin_csv");
  static const std::array<const char*, 4> kRace = {"Asian", "Black", "White", "Unknown"};
  static const std::array<const char*, 3> kVkorc1 = {"A/A", "A/G", "G/G"};
  out << "patient_id,age,height_cm,weight_kg,race,vkorc1,amiodarone,enzyme_inducer,"
         "dose_mg_week\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t decade = 1 + r.uniform_index(9);
    const std::string age =
        decade == 9 ? std::string("90+") : fmt::format("{} - {}", decade * 10, decade * 10 + 9);
    const double height = std::clamp(r.normal(168.0, 10.0), 130.0, 210.0);
    const double weight = std::clamp(r.normal(78.0, 17.0), 35.0, 180.0);
    const std::size_t race = r.uniform_index(kRace.size());
    const std::size_t vk = r.uniform_index(kVkorc1.size());
    const int amio = r.uniform() < 0.06 ? 1 : 0;
    const int enzyme = r.uniform() < 0.03 ? 1 : 0;
    double s = 5.6044 - 0.2614 * static_cast<double>(decade) + 0.0087 * height +
               0.0128 * weight - 0.5503 * amio + 1.1816 * enzyme;
    if (vk == 0) s -= 1.6974;
    if (vk == 1) s -= 0.8677;
    if (race == 0) s -= 0.1092;
    if (race == 1) s -= 0.2760;
    s += r.normal(0.0, 0.6);
    double dose = std::clamp(s * s, 5.0, 200.0);
    if (i == outlier_row) dose = 315.0;
    out << i << ",\"" << age << "\"," << fmt::format("{:.1f}", height) << ','
        << fmt::format("{:.1f}", weight) << ',' << kRace[race] << ',' << kVkorc1[vk]
        << ',' << amio << ',' << enzyme << ',' << fmt::format("{:.2f}", dose) << '\n';
  }
  nlohmann::json cols = nlohmann::json::array({
      {{"name", "patient_id"}, {"role", "ia"}},
      {{"name", "age"}, {"role", "qia"}, {"type", "interval"}},
      {{"name", "height_cm"}, {"role", "qia"}},
      {{"name", "weight_kg"}, {"role", "qia"}},
      {{"name", "race"}, {"role", "ca"}, {"type", "nominal"}},
      {{"name", "vkorc1"}, {"role", "ca"}, {"type", "nominal"}},
      {{"name", "amiodarone"}, {"role", "ca"}},
      {{"name", "enzyme_inducer"}, {"role", "ca"}},
      {{"name", "dose_mg_week"}, {"role", "target"}, {"drop_above", 300.0}},
  });
  return {{"columns", cols}, {"split", {0.77, 0.14, 0.09}}, {"dose_target", true}};
}

}  // namespace ppcmp

#endif  // PPCMP_HARNESS_GENERATE_HPP_
