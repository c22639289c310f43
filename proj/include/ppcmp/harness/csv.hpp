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
#ifndef PPCMP_HARNESS_CSV_HPP_
#define PPCMP_HARNESS_CSV_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fmt/core.h"
#include "json.hpp"
#include "ppcmp/harness/dataset.hpp"

namespace ppcmp {

enum class ColumnRole { kQia, kCa, kIa, kTarget, kIgnore };
enum class ColumnType { kNumeric, kInterval, kNominal };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::kCa;
  ColumnType type = ColumnType::kNumeric;
  // Rows whose raw value lies outside [drop_below, drop_above] are removed.
  std::optional<double> drop_above;
  std::optional<double> drop_below;
};

struct CsvSidecar {
  std::vector<ColumnSpec> columns;
  // Train / attack / test fractions.
  std::array<double, 3> split{0.77, 0.14, 0.09};
  bool dose_target = false;

  static CsvSidecar from_json(const nlohmann::json& j);
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {

inline ColumnRole role_from_string(const std::string& s) {
  if (s == "qia") return ColumnRole::kQia;
  if (s == "ca") return ColumnRole::kCa;
  if (s == "ia") return ColumnRole::kIa;
  if (s == "target") return ColumnRole::kTarget;
  if (s == "ignore") return ColumnRole::kIgnore;
  throw std::invalid_argument("unknown column role: " + s);
}

inline ColumnType type_from_string(const std::string& s) {
  if (s == "numeric") return ColumnType::kNumeric;
  if (s == "interval") return ColumnType::kInterval;
  if (s == "nominal") return ColumnType::kNominal;
  throw std::invalid_argument("unknown column type: " + s);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// RFC 4180 style split of one line; embedded newlines are not supported.
inline std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) return std::nullopt;
  out.emplace_back(trim(cur));
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

// "60 - 69" -> 64.5, "90+" -> 90, plain numbers pass through.
inline std::optional<double> parse_interval(std::string_view s) {
  s = trim(s);
  if (auto v = parse_number(s)) return v;
  if (!s.empty() && s.back() == '+') return parse_number(s.substr(0, s.size() - 1));
  const auto dash = s.find('-', 1);
  if (dash == std::string_view::npos) return std::nullopt;
  const auto lo = parse_number(s.substr(0, dash));
  const auto hi = parse_number(s.substr(dash + 1));
  if (!lo || !hi || *hi < *lo) return std::nullopt;
  return 0.5 * (*lo + *hi);
}

}  // namespace internal

inline CsvSidecar CsvSidecar::from_json(const nlohmann::json& j) {
  CsvSidecar sc;
  for (const auto& c : j.at("columns")) {
    ColumnSpec spec;
    spec.name = c.at("name").get<std::string>();
    spec.role = internal::role_from_string(c.value("role", std::string("ca")));
    spec.type = internal::type_from_string(c.value("type", std::string("numeric")));
    if (c.contains("drop_above")) spec.drop_above = c["drop_above"].get<double>();
    if (c.contains("drop_below")) spec.drop_below = c["drop_below"].get<double>();
    sc.columns.push_back(std::move(spec));
  }
  if (j.contains("split")) {
    const auto v = j["split"].get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument("split needs three fractions");
    sc.split = {v[0], v[1], v[2]};
  }
  sc.dose_target = j.value("dose_target", false);
  return sc;
}

inline void validate_split(const std::array<double, 3>& split) {
  double sum = 0.0;
  for (double f : split) {
    if (!(f >= 0.0)) throw std::invalid_argument("split fractions must be >= 0");
    sum += f;
  }
  if (sum > 1.0 + 1e-9) throw std::invalid_argument("split fractions sum above 1");
  if (split[0] <= 0.0 || split[2] <= 0.0)
    throw std::invalid_argument("train and test fractions must be positive");
}

// Parses, cleans and splits a table. Min-max statistics come from the training
// split only and are applied to every split; QIA values are clamped to [0, 1]
// so that every query lies inside its declared range.
inline Dataset ingest_csv(std::istream& in, const CsvSidecar& sidecar,
                          RngStream& rng) {
  validate_split(sidecar.split);
  std::size_t n_target = 0;
  for (const auto& c : sidecar.columns) n_target += c.role == ColumnRole::kTarget;
  if (n_target != 1) throw std::invalid_argument("sidecar needs exactly one target");

  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty CSV");
  const auto header = internal::split_csv_line(line);
  if (!header) throw CsvError("line 1: unterminated quote");
  std::vector<std::size_t> col_of(sidecar.columns.size());
  for (std::size_t c = 0; c < sidecar.columns.size(); ++c) {
    const auto it = std::find(header->begin(), header->end(), sidecar.columns[c].name);
    if (it == header->end())
      throw CsvError("missing declared column: " + sidecar.columns[c].name);
    col_of[c] = static_cast<std::size_t>(it - header->begin());
  }

  // First pass: raw fields, with nominal levels collected.
  std::vector<std::vector<std::string>> raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    auto fields = internal::split_csv_line(line);
    if (!fields) throw CsvError(fmt::format("line {}: unterminated quote", line_no));
    if (fields->size() != header->size())
      throw CsvError(fmt::format("line {}: expected {} fields, got {}", line_no,
                                 header->size(), fields->size()));
    std::vector<std::string> row;
    row.reserve(col_of.size() + 1);
    for (std::size_t c : col_of) row.push_back((*fields)[c]);
    row.push_back(std::to_string(line_no));
    raw.push_back(std::move(row));
  }

  const std::size_t nc = sidecar.columns.size();
  std::vector<std::map<std::string, double>> levels(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    if (sidecar.columns[c].type != ColumnType::kNominal) continue;
    for (const auto& r : raw) levels[c].emplace(r[c], 0.0);
    double code = 0.0;
    for (auto& [k, v] : levels[c]) v = code++;
  }

  std::vector<std::vector<double>> rows;
  rows.reserve(raw.size());
  std::vector<std::size_t> lines;
  for (const auto& r : raw) {
    std::vector<double> vals(nc);
    bool keep = true;
    for (std::size_t c = 0; c < nc; ++c) {
      const ColumnSpec& spec = sidecar.columns[c];
      if (spec.role == ColumnRole::kIgnore) continue;
      std::optional<double> v;
      switch (spec.type) {
        case ColumnType::kNumeric: v = internal::parse_number(r[c]); break;
        case ColumnType::kInterval: v = internal::parse_interval(r[c]); break;
        case ColumnType::kNominal: v = levels[c].at(r[c]); break;
      }
      if (!v)
        throw CsvError(fmt::format("line {}: column '{}' has bad value '{}'",
                                   r.back(), spec.name, r[c]));
      if ((spec.drop_above && *v > *spec.drop_above) ||
          (spec.drop_below && *v < *spec.drop_below))
        keep = false;
      vals[c] = *v;
    }
    if (keep) {
      rows.push_back(std::move(vals));
      lines.push_back(std::stoul(r.back()));
    }
  }

  const std::size_t n = rows.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  const double fsum = sidecar.split[0] + sidecar.split[1] + sidecar.split[2];
  const auto n_train = static_cast<std::size_t>(std::floor(sidecar.split[0] * n));
  const auto n_attack = static_cast<std::size_t>(std::floor(sidecar.split[1] * n));
  const std::size_t n_test =
      std::abs(fsum - 1.0) < 1e-9
          ? n - n_train - n_attack
          : static_cast<std::size_t>(std::floor(sidecar.split[2] * n));
  if (n_train == 0 || n_test == 0) throw CsvError("too few rows for the split");

  Dataset ds;
  ds.dose_target = sidecar.dose_target;
  std::vector<double> lo(nc, 0.0), span(nc, 1.0);
  for (std::size_t c = 0; c < nc; ++c) {
    const ColumnSpec& spec = sidecar.columns[c];
    if (spec.role == ColumnRole::kIa || spec.role == ColumnRole::kIgnore) continue;
    double mn = rows[order[0]][c], mx = mn;
    for (std::size_t i = 0; i < n_train; ++i) {
      mn = std::min(mn, rows[order[i]][c]);
      mx = std::max(mx, rows[order[i]][c]);
    }
    lo[c] = mn;
    span[c] = mx - mn;
    if (!(span[c] > 0.0))
      ds.warnings.push_back("column '" + spec.name + "' is constant; mapped to 0");
  }

  std::size_t qia = 0, ca = 0, ia = 0;
  for (const auto& c : sidecar.columns) {
    qia += c.role == ColumnRole::kQia;
    ca += c.role == ColumnRole::kCa;
    ia += c.role == ColumnRole::kIa;
  }
  ds.schema = AttributeSchema::unit(qia, ca, ia == 0 ? 1 : ia);

  for (std::size_t c = 0; c < nc; ++c) {
    if (sidecar.columns[c].role == ColumnRole::kTarget)
      ds.target_units = DoseUnits{lo[c], span[c] > 0.0 ? span[c] : 1.0};
  }

  auto make = [&](std::size_t i, PatientRecord& rec, double& y) {
    const auto& r = rows[i];
    Vector idv;
    for (std::size_t c = 0; c < nc; ++c) {
      const ColumnSpec& spec = sidecar.columns[c];
      const double z = span[c] > 0.0 ? (r[c] - lo[c]) / span[c] : 0.0;
      switch (spec.role) {
        case ColumnRole::kQia: rec.qia.push_back(std::clamp(z, 0.0, 1.0)); break;
        case ColumnRole::kCa: rec.ca.push_back(z); break;
        case ColumnRole::kIa: idv.push_back(r[c]); break;
        case ColumnRole::kTarget: y = z; break;
        case ColumnRole::kIgnore: break;
      }
    }
    if (idv.empty()) idv.push_back(static_cast<double>(lines[i]));
    rec.ia = std::move(idv);
  };

  for (std::size_t k = 0; k < n_train + n_attack + n_test; ++k) {
    PatientRecord rec;
    double y = 0.0;
    make(order[k], rec, y);
    if (k < n_train) {
      ds.train.push_back({rec.input(), y});
    } else if (k < n_train + n_attack) {
      ds.attack_table.rows.push_back({rec.qia, *rec.ia});
    } else {
      ds.test.push_back(std::move(rec));
      ds.test_truth.push_back(y);
    }
  }
  return ds;
}

inline Dataset ingest_csv(const std::string& path, const CsvSidecar& sidecar,
                          RngStream& rng) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return ingest_csv(in, sidecar, rng);
}

inline CsvSidecar load_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return CsvSidecar::from_json(nlohmann::json::parse(in));
}

}  // namespace ppcmp

#endif  // PPCMP_HARNESS_CSV_HPP_
