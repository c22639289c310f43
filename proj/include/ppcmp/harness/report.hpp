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
#ifndef PPCMP_HARNESS_REPORT_HPP_
#define PPCMP_HARNESS_REPORT_HPP_

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fmt/core.h"
#include "ppcmp/harness/csv.hpp"
#include "ppcmp/harness/experiment.hpp"

namespace ppcmp {

inline constexpr const char* kResultsHeader =
    "fingerprint,seed,sweep_param,sweep_value,rep,condition,metric,value";

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.10g}", v);
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.fingerprint << ',' << r.seed << ',' << r.sweep_param << ','
        << format_number(r.sweep_value) << ',' << r.rep << ',' << r.condition << ','
        << r.metric << ',' << format_number(r.value) << '\n';
  }
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || internal::trim(line) != kResultsHeader)
    throw CsvError("results.csv: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    const auto f = internal::split_csv_line(line);
    if (!f || f->size() != 8)
      throw CsvError(fmt::format("results.csv line {}: expected 8 fields", line_no));
    ResultRow r;
    r.fingerprint = (*f)[0];
    const auto seed = internal::parse_number((*f)[1]);
    const auto rep = internal::parse_number((*f)[4]);
    const auto value = internal::parse_number((*f)[7]);
    if (!seed || !rep || !value)
      throw CsvError(fmt::format("results.csv line {}: bad number", line_no));
    r.seed = static_cast<std::uint64_t>(std::stoull((*f)[1]));
    r.sweep_param = (*f)[2];
    if (!(*f)[3].empty()) {
      const auto sv = internal::parse_number((*f)[3]);
      if (!sv) throw CsvError(fmt::format("results.csv line {}: bad sweep value", line_no));
      r.sweep_value = *sv;
    }
    r.rep = static_cast<std::size_t>(*rep);
    r.condition = (*f)[5];
    r.metric = (*f)[6];
    r.value = *value;
    rows.push_back(std::move(r));
  }
  return rows;
}

struct SummaryStat {
  double mean = 0.0;
  // Sample standard deviation; 0 for a single value.
  double sd = 0.0;
  std::size_t n = 0;
};

inline SummaryStat summarize(const std::vector<double>& v) {
  SummaryStat s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

// (sweep value, condition, metric) -> statistics over repetitions. Sweep
// values are keyed by their formatted text so that NaN groups cleanly.
class ResultTable {
 public:
  explicit ResultTable(const std::vector<ResultRow>& rows) {
    for (const auto& r : rows) {
      const std::string key = format_number(r.sweep_value);
      if (!sweep_order_.count(key)) {
        sweep_order_[key] = sweep_keys_.size();
        sweep_keys_.push_back(key);
        sweep_values_.push_back(r.sweep_value);
      }
      if (!cond_seen_.count(r.condition)) {
        cond_seen_.insert(r.condition);
        conditions_.push_back(r.condition);
      }
      if (!metric_seen_.count(r.metric)) {
        metric_seen_.insert(r.metric);
        metrics_.push_back(r.metric);
      }
      if (sweep_param_.empty()) sweep_param_ = r.sweep_param;
      values_[{key, r.condition, r.metric}].push_back(r.value);
    }
  }

  const std::vector<std::string>& sweep_keys() const { return sweep_keys_; }
  const std::vector<double>& sweep_values() const { return sweep_values_; }
  const std::string& sweep_param() const { return sweep_param_; }
  const std::vector<std::string>& conditions() const { return conditions_; }
  const std::vector<std::string>& metrics() const { return metrics_; }

  std::optional<SummaryStat> get(const std::string& sweep, const std::string& cond,
                                 const std::string& metric) const {
    const auto it = values_.find({sweep, cond, metric});
    if (it == values_.end()) return std::nullopt;
    return summarize(it->second);
  }

 private:
  std::vector<std::string> sweep_keys_;
  std::vector<double> sweep_values_;
  std::map<std::string, std::size_t> sweep_order_;
  std::string sweep_param_;
  std::vector<std::string> conditions_;
  std::set<std::string> cond_seen_;
  std::vector<std::string> metrics_;
  std::set<std::string> metric_seen_;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> values_;
};

namespace internal {

inline std::string cell(const ResultTable& t, const std::string& sweep,
                        const std::string& cond, const std::string& metric) {
  const auto s = t.get(sweep, cond, metric);
  return s ? fmt::format("{:.6g}", s->mean) : "-";
}

inline bool has_any(const ResultTable& t, const std::string& sweep,
                    const std::vector<std::string>& conds) {
  for (const auto& c : conds) {
    if (t.get(sweep, c, "ae")) return true;
  }
  return false;
}

}  // namespace internal

inline std::string render_summary(const std::vector<ResultRow>& rows,
                                  const std::vector<std::string>& diagnostics = {}) {
  const ResultTable t(rows);
  std::ostringstream md;
  md << "# Run summary\n\n";
  if (!rows.empty()) {
    md << "- fingerprint: `" << rows.front().fingerprint << "`\n";
    md << "- seed: " << rows.front().seed << "\n";
  }
  std::set<std::size_t> reps;
  for (const auto& r : rows) reps.insert(r.rep);
  md << "- repetitions: " << reps.size() << "\n";
  md << "- diagnostics: " << diagnostics.size() << "\n\n";

  for (const auto& key : t.sweep_keys()) {
    const std::string title =
        key.empty() ? std::string() : fmt::format(" ({} = {})", t.sweep_param(), key);

    const std::vector<std::string> patient = {"original", "tqma", "uma", "kdtree",
                                              "mul_noise", "dp_noise"};
    if (internal::has_any(t, key, patient)) {
      md << "## Patient-side methods" << title << "\n\n";
      md << "| method | CO (%) | RMSE |\n|---|---|---|\n";
      for (const auto& c : patient) {
        if (!t.get(key, c, "ae")) continue;
        md << "| " << c << " | " << internal::cell(t, key, c, "co") << " | "
           << internal::cell(t, key, c, "rmse") << " |\n";
      }
      md << "\n";
    }

    const std::vector<std::string> doctor = {"original", "bstd", "doctor_mul_noise",
                                             "doctor_dp_noise"};
    const std::vector<std::string> doctor_t = {"tqma", "tqma_bstd",
                                               "tqma_doctor_mul_noise",
                                               "tqma_doctor_dp_noise"};
    if (internal::has_any(t, key, doctor) || internal::has_any(t, key, doctor_t)) {
      md << "## Doctor-side methods" << title << "\n\n";
      md << "| method | RL (%) | AE no attack | AE attack |\n|---|---|---|---|\n";
      for (const auto* group : {&doctor, &doctor_t}) {
        for (const auto& c : *group) {
          if (!t.get(key, c, "ae") && !t.get(key, c + "@attack", "ae")) continue;
          md << "| " << c << " | " << internal::cell(t, key, c, "rl") << " | "
             << internal::cell(t, key, c, "ae") << " | "
             << internal::cell(t, key, c + "@attack", "ae") << " |\n";
        }
      }
      md << "\n";
    }
  }

  if (!t.sweep_param().empty()) {
    md << "## Sweep over " << t.sweep_param() << "\n\n";
    md << "| " << t.sweep_param()
       << " | AE original | AE tqma_bstd | AE change (%) | CO tqma_bstd | RL tqma_bstd |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& key : t.sweep_keys()) {
      const auto a0 = t.get(key, "original", "ae");
      const auto a1 = t.get(key, "tqma_bstd", "ae");
      const std::string change =
          a0 && a1 && a0->mean > 0.0
              ? fmt::format("{:.3f}", 100.0 * (a1->mean - a0->mean) / a0->mean)
              : "-";
      md << "| " << key << " | " << internal::cell(t, key, "original", "ae") << " | "
         << internal::cell(t, key, "tqma_bstd", "ae") << " | " << change << " | "
         << internal::cell(t, key, "tqma_bstd", "co") << " | "
         << internal::cell(t, key, "tqma_bstd", "rl") << " |\n";
    }
    md << "\n";
  }

  md << "## All conditions (mean ± sd over repetitions)\n\n";
  for (const auto& key : t.sweep_keys()) {
    if (!key.empty()) md << "### " << t.sweep_param() << " = " << key << "\n\n";
    md << "| condition | metric | mean | sd |\n|---|---|---|---|\n";
    for (const auto& c : t.conditions()) {
      for (const auto& m : t.metrics()) {
        const auto s = t.get(key, c, m);
        if (!s) continue;
        md << "| " << c << " | " << m << " | " << fmt::format("{:.6g}", s->mean)
           << " | " << fmt::format("{:.3g}", s->sd) << " |\n";
      }
    }
    md << "\n";
  }

  if (!diagnostics.empty()) {
    md << "## Diagnostics\n\n";
    for (const auto& d : diagnostics) md << "- " << d << "\n";
    md << "\n";
  }
  return md.str();
}

// x = swept parameter, one series per (condition, metric). Header only when
// the run has no sweep.
inline void write_plot_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "sweep_param,sweep_value,condition,metric,mean,sd,n\n";
  const ResultTable t(rows);
  if (t.sweep_param().empty()) return;
  for (std::size_t i = 0; i < t.sweep_keys().size(); ++i) {
    const auto& key = t.sweep_keys()[i];
    for (const auto& c : t.conditions()) {
      for (const auto& m : t.metrics()) {
        const auto s = t.get(key, c, m);
        if (!s) continue;
        out << t.sweep_param() << ',' << key << ',' << c << ',' << m << ','
            << format_number(s->mean) << ',' << format_number(s->sd) << ',' << s->n
            << '\n';
      }
    }
  }
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
  if (!f) throw std::runtime_error("failed writing " + p.string());
}

// Writes results.csv, summary.md and plot_sweep.csv into `dir`.
inline void emit_report(const std::vector<ResultRow>& rows,
                        const std::vector<std::string>& diagnostics,
                        const std::filesystem::path& dir) {
  if (rows.empty()) throw std::invalid_argument("report has no rows");
  std::filesystem::create_directories(dir);
  std::ostringstream results, plot;
  write_results_csv(results, rows);
  write_plot_csv(plot, rows);
  write_file(dir / "results.csv", results.str());
  write_file(dir / "summary.md", render_summary(rows, diagnostics));
  write_file(dir / "plot_sweep.csv", plot.str());
}

inline void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  emit_report(report.rows, report.diagnostics, dir);
}

}  // namespace ppcmp

#endif  // PPCMP_HARNESS_REPORT_HPP_
