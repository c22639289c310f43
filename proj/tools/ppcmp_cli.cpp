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
// Command-line front end: data generation, experiment runs, attack studies
// and re-pivoting of existing results.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fmt/core.h"
#include "ppcmp/ppcmp.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> threads;
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config JSON");
  cmd->add_option("--seed", f.seed, "override the config seed");
  cmd->add_option("--reps", f.reps, "override the repetition count");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_option("--out", f.out, "output directory");
}

ppcmp::ExperimentConfig resolve(const CommonFlags& f) {
  ppcmp::ExperimentConfig cfg =
      f.config.empty() ? ppcmp::ExperimentConfig{} : ppcmp::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.reps) cfg.repetitions = *f.reps;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

void finish(const ppcmp::RunReport& report, const std::string& out) {
  ppcmp::emit_report(report, out);
  for (const auto& d : report.diagnostics) std::cerr << "warning: " << d << '\n';
  std::cout << fmt::format("wrote {} rows to {}/results.csv (fingerprint {})\n",
                           report.rows.size(), out, report.fingerprint);
}

// Audit trail of the protected pipeline for every test query of rep 0.
void write_trace(const ppcmp::ExperimentConfig& cfg, const std::filesystem::path& path) {
  using namespace ppcmp;
  const RngStream rep_rng = RngStream(cfg.seed, "ppcmp").derive("rep", 0);
  RngStream drng = rep_rng.derive("data");
  const Dataset ds = load_dataset(cfg, drng);
  const Partition part = build_partition(cfg, ds, rep_rng);
  const Platform platform(part, BstdParams{cfg.p_lower, cfg.p_upper, {}});
  RngStream rng = rep_rng.derive("trace");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const auto out = run_pipeline(platform, ds.test[i], ds.schema,
                                  TqmaParams{cfg.tqma_depth}, rng, i);
    f << trace_json(out, i).dump() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving collaborative medical prediction simulator"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  std::string kind = "toy";
  std::size_t rows = 0;
  auto* gen = app.add_subcommand("generate", "write a synthetic CSV and its sidecar");
  add_common(gen, gen_flags);
  gen->add_option("--kind", kind, "toy or warfarin")
      ->check(CLI::IsMember({"toy", "warfarin"}));
  gen->add_option("--rows", rows, "row count (warfarin; toy uses the config sizes)");

  CommonFlags run_flags;
  bool trace = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  add_common(run, run_flags);
  run->add_flag("--trace", trace, "also write trace.jsonl for repetition 0");

  CommonFlags atk_flags;
  auto* attack = app.add_subcommand("attack", "extraction-attack study only");
  add_common(attack, atk_flags);

  std::string in_csv;
  std::string report_out = "out";
  auto* report = app.add_subcommand("report", "re-pivot an existing results.csv");
  report->add_option("--in", in_csv, "results.csv to read")->required();
  report->add_option("--out", report_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ppcmp::ExperimentConfig cfg = resolve(gen_flags);
      std::filesystem::create_directories(gen_flags.out);
      ppcmp::RngStream rng(cfg.seed, "generate");
      const std::filesystem::path dir = gen_flags.out;
      std::ofstream csv(dir / (kind + ".csv"));
      if (!csv) throw std::runtime_error("cannot write into " + gen_flags.out);
      const nlohmann::json sidecar =
          kind == "toy" ? ppcmp::write_toy_csv(cfg.dataset.toy, rng, csv)
                        : ppcmp::write_warfarin_like_csv(rows == 0 ? 5700 : rows, rng, csv);
      std::ofstream(dir / (kind + ".sidecar.json")) << sidecar.dump(2) << '\n';
      std::cout << "wrote " << (dir / (kind + ".csv")).string() << '\n';
    } else if (*run) {
      const ppcmp::ExperimentConfig cfg = resolve(run_flags);
      finish(ppcmp::run_experiment(cfg), run_flags.out);
      if (trace) write_trace(cfg, std::filesystem::path(run_flags.out) / "trace.jsonl");
    } else if (*attack) {
      ppcmp::ExperimentConfig cfg = resolve(atk_flags);
      cfg.conditions = {"original",        "bstd",        "original@attack",
                        "bstd@attack",     "tqma",        "tqma_bstd",
                        "tqma@attack",     "tqma_bstd@attack"};
      finish(ppcmp::run_experiment(cfg), atk_flags.out);
    } else if (*report) {
      std::ifstream in(in_csv);
      if (!in) throw std::runtime_error("cannot open " + in_csv);
      const auto rows_in = ppcmp::read_results_csv(in);
      ppcmp::emit_report(rows_in, {}, report_out);
      std::cout << "wrote " << report_out << "/summary.md\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
