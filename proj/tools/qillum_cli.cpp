// Copyright 2026 The qillum Authors
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

// qillum command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qillum/config.hpp"
#include "qillum/errors.hpp"
#include "qillum/fileio.hpp"
#include "qillum/runner.hpp"
#include "qillum/tagproc.hpp"
#include "qillum/units.hpp"

namespace fs = std::filesystem;
using namespace qillum;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> workers;
  std::string bin_width;
  std::optional<double> k_sigma;
  std::string in;
  std::optional<double> delay_ps;
  double delay_offset_ps = 0.0;
};

ExperimentConfig load(const Options& o) {
  if (o.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig c = load_config(o.config_path);
  if (o.seed) c.plan.seed = *o.seed;
  if (o.workers) c.workers = std::max(1u, *o.workers);
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.bin_width.empty()) {
    double w = 0.0;
    try {
      w = parse_quantity(o.bin_width, Quantity::time);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(fmt::format("--bin-width: {}", e.what()));
    }
    const auto ps = std::llround(w * 1e12);
    if (ps <= 0) throw ConfigError("--bin-width must be at least 1 ps");
    c.analysis.bin_width_ps = ps;
  }
  if (o.k_sigma) {
    if (!(*o.k_sigma > 0)) throw ConfigError("--k-sigma must be positive");
    c.analysis.k_sigma = *o.k_sigma;
  }
  return c;
}

int finish(const AnalyzeOutcome& outcome, const fs::path& out_dir) {
  std::fputs(protocol_report(outcome.result).c_str(), stdout);
  if (!outcome.message.empty()) std::fprintf(stderr, "qillum: %s\n", outcome.message.c_str());
  std::fprintf(stderr, "qillum: outputs written to %s\n", out_dir.string().c_str());
  return static_cast<int>(outcome.exit_code);
}

int run_linkbudget(const Options& o) {
  const ExperimentConfig c = load(o);
  const std::string csv = cmd_linkbudget(c).to_string();
  if (!o.out.empty()) write_file_atomic(c.output_dir / "linkbudget.csv", csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int run_simulate(const Options& o) {
  const ExperimentConfig c = load(o);
  const RunManifest m = cmd_simulate(c, c.output_dir);
  std::uint64_t records = 0;
  for (const auto& e : m.entries) records += e.records;
  std::printf("wrote %zu settings, %llu tags to %s (config %s)\n", m.entries.size(),
              static_cast<unsigned long long>(records), c.output_dir.string().c_str(), m.config_hash.c_str());
  return 0;
}

int run_analyze(const Options& o) {
  const ExperimentConfig c = load(o);
  const fs::path run_dir = o.in.empty() ? c.output_dir : fs::path(o.in);
  const fs::path out_dir = o.out.empty() ? run_dir / "analysis" : c.output_dir;
  return finish(cmd_analyze(c, run_dir, out_dir), out_dir);
}

int run_chsh(const Options& o) {
  const ExperimentConfig c = load(o);
  const RunBundle bundle = simulate_run(c.plan, c.workers);
  return finish(analyze_and_write(bundle, c, c.output_dir), c.output_dir);
}

int run_range(const Options& o) {
  if (o.delay_ps) {
    const RangeEstimate r = range_from_delay(*o.delay_ps, kAirGroupIndex, o.delay_offset_ps);
    std::printf("delay_ps = %.1f\nobject_distance_m = %.6f\n", *o.delay_ps, r.object_distance_m);
    return 0;
  }
  const ExperimentConfig c = load(o);
  const fs::path run_dir = o.in.empty() ? c.output_dir : fs::path(o.in);
  const fs::path out_dir = o.out.empty() ? run_dir / "analysis" : c.output_dir;
  const AnalyzeOutcome outcome = cmd_analyze(c, run_dir, out_dir);
  if (const auto& r = outcome.result.range) {
    std::printf("peak_delay_ps = %.1f\nobject_distance_m = %.6f\nsignificance = %.2f\n", r->peak_delay_ps,
                r->object_distance_m, r->significance);
  } else {
    std::printf("no peak\n");
  }
  return static_cast<int>(outcome.exit_code);
}

int run_sweep(const Options& o) {
  const ExperimentConfig c = load(o);
  const std::string csv = cmd_sweep(c).to_string();
  write_file_atomic(c.output_dir / "sweep.csv", csv);
  std::fputs(csv.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qillum: entangled-photon object detection simulator and analyzer"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "YAML experiment configuration");
    sub->add_option("--seed", o.seed, "Override the configured seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--workers", o.workers, "Worker threads");
    sub->add_option("--bin-width", o.bin_width, "Histogram bin width with unit, e.g. \"1 ns\"");
    sub->add_option("--k-sigma", o.k_sigma, "Detection threshold in standard deviations above S = 2");
  };

  auto* lb = app.add_subcommand("linkbudget", "Stagewise link budget over the distance sweep");
  auto* sim = app.add_subcommand("simulate", "Simulate all analyzer settings and write QTT1 tag files");
  auto* an = app.add_subcommand("analyze", "Analyze a simulated or recorded run directory");
  auto* ch = app.add_subcommand("chsh", "Simulate and analyze in one step");
  auto* rg = app.add_subcommand("range", "Range from a run directory or a single delay");
  auto* sw = app.add_subcommand("sweep", "Simulate and analyze each sweep distance");
  for (auto* s : {lb, sim, an, ch, rg, sw}) common(s);
  an->add_option("--in", o.in, "Run directory written by simulate");
  rg->add_option("--in", o.in, "Run directory written by simulate");
  rg->add_option("--delay-ps", o.delay_ps, "Convert one probe-idler delay in ps");
  rg->add_option("--delay-offset-ps", o.delay_offset_ps, "Fixed delay subtracted before conversion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config_error);
  }

  try {
    if (*lb) return run_linkbudget(o);
    if (*sim) return run_simulate(o);
    if (*an) return run_analyze(o);
    if (*ch) return run_chsh(o);
    if (*rg) return run_range(o);
    if (*sw) return run_sweep(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "qillum: configuration error: %s\n", e.what());
    return static_cast<int>(ExitCode::config_error);
  } catch (const TagFormatError& e) {
    std::fprintf(stderr, "qillum: tag file error: %s\n", e.what());
    return static_cast<int>(ExitCode::tag_format_error);
  } catch (const UndefinedCorrelationError& e) {
    std::fprintf(stderr, "qillum: %s\n", e.what());
    return static_cast<int>(ExitCode::undefined_correlation);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qillum: %s\n", e.what());
    return static_cast<int>(ExitCode::failure);
  }
  return static_cast<int>(ExitCode::failure);
}
