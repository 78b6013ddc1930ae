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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "qillum/errors.hpp"
#include "qillum/fileio.hpp"
#include "qillum/runner.hpp"
#include "support.hpp"

using namespace qillum;
using namespace qillum::testing;
namespace fs = std::filesystem;

namespace {

fs::path config_path(const std::string& name) { return fs::path(QILLUM_SOURCE_DIR) / "configs" / name; }

ExperimentConfig quick_mirror(double duration = 0.25) {
  ExperimentConfig c = load_config(config_path("mirror_500m.yaml"));
  c.plan.duration_per_setting_s = duration;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + QILLUM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& from,
                         const std::string& to) {
  std::string text = read_file(config_path("mirror_500m.yaml"));
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos);
  text.replace(pos, from.size(), to);
  write_file_atomic(dir / name, text);
  return (dir / name).string();
}

}  // namespace

TEST(LinkBudgetCommand, SweepRowsAndColumns) {
  ExperimentConfig c = load_config(config_path("sweep.yaml"));
  c.sweep_distances_m = {0.0, 10.0, 20.0, 150.0, 500.0};
  c.plan.link.pointing_rms = 0.0;
  const CsvTable t = cmd_linkbudget(c);
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.header.front(), "distance_m");
  EXPECT_EQ(t.header.back(), "predicted_rate");
  EXPECT_DOUBLE_EQ(t.number(0, "launched_rate"), 166e3);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    EXPECT_LE(t.number(i, "total_transmission"), t.number(i - 1, "total_transmission"));
    EXPECT_GE(t.number(i, "beam_diameter_object_mm"), t.number(i - 1, "beam_diameter_object_mm"));
  }
  // Waist term plus a divergence term linear in path length.
  const double d0 = t.number(0, "beam_diameter_object_mm");
  EXPECT_NEAR(t.number(0, "beam_diameter_receiver_mm"), d0, 1e-12);
  EXPECT_NEAR(t.number(4, "beam_diameter_receiver_mm") - d0, 2 * (t.number(4, "beam_diameter_object_mm") - d0), 1e-9);
  EXPECT_NEAR(t.number(4, "beam_diameter_object_mm"), 47.04, 0.03 * 47.04);
  EXPECT_NEAR(t.number(4, "total_transmission"), 0.033584780955453274, 1e-12);
  EXPECT_NEAR(t.number(4, "predicted_rate"), t.number(4, "launched_rate") * t.number(4, "total_transmission"),
              1e-9 * t.number(4, "predicted_rate"));
}

TEST(LinkBudgetCommand, SingleDistanceWithoutSweep) {
  const CsvTable t = cmd_linkbudget(quick_mirror());
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.number(0, "total_transmission"), 0.033584780955453274, 1e-12);
  EXPECT_NEAR(t.number(0, "predicted_rate"), 166e3 * 0.033584780955453274, 1e-6);
}

TEST(Manifest, RoundTripAndErrors) {
  RunManifest m;
  m.config_hash = std::string(64, 'a');
  m.seed = 12;
  m.duration_per_setting_s = 0.125;
  m.ports = "both_ports";
  m.entries = {{{0, 67.5}, 99, 3, "tags/setting_00.qtt1"}, {{45, 22.5}, 100, 0, "tags/setting_01.qtt1"}};
  const RunManifest back = RunManifest::parse(m.to_text());
  EXPECT_EQ(back.to_text(), m.to_text());
  EXPECT_EQ(back.entries[1].setting.beta_deg, 22.5);
  EXPECT_EQ(back.entries[0].records, 3u);
  EXPECT_THROW(RunManifest::parse("format = 2\n"), ConfigError);
  std::string text = m.to_text();
  text += "colour = blue\n";
  EXPECT_THROW(RunManifest::parse(text), ConfigError);
}

TEST(Simulate, ByteIdenticalAcrossRunsAndWorkers) {
  ExperimentConfig c = quick_mirror(0.02);
  const fs::path a = scratch_dir("sim-a"), b = scratch_dir("sim-b");
  const RunManifest ma = cmd_simulate(c, a);
  c.workers = 3;
  const RunManifest mb = cmd_simulate(c, b);
  EXPECT_EQ(ma.config_hash, config_hash(c));
  ASSERT_EQ(ma.entries.size(), 16u);
  EXPECT_EQ(read_file(a / kManifestName), read_file(b / kManifestName));
  for (const auto& e : ma.entries) {
    EXPECT_EQ(read_file(a / e.file), read_file(b / e.file)) << e.file;
    EXPECT_EQ(fs::file_size(a / e.file), kQtt1HeaderSize + e.records * kQtt1RecordSize);
  }
}

TEST(Simulate, ZeroDurationWritesHeaderOnlyFiles) {
  const fs::path dir = scratch_dir("sim-zero");
  const RunManifest m = cmd_simulate(quick_mirror(0.0), dir);
  for (const auto& e : m.entries) EXPECT_EQ(fs::file_size(dir / e.file), 12u);
  EXPECT_EQ(load_run(dir).runs.size(), 16u);
}

TEST(Analyze, MatchesInMemoryProtocolExactly) {
  const ExperimentConfig c = quick_mirror();
  const fs::path run = scratch_dir("an-run");
  cmd_simulate(c, run);
  const AnalyzeOutcome out = cmd_analyze(c, run, run / "analysis");
  const ProtocolResult direct = run_chsh_protocol(c.plan, c.analysis);
  ASSERT_EQ(out.exit_code, ExitCode::ok) << out.message;
  ASSERT_TRUE(out.result.probe && direct.probe);
  EXPECT_EQ(out.result.probe->s_value, direct.probe->s_value);
  EXPECT_EQ(out.result.reference.s_value, direct.reference.s_value);
  EXPECT_EQ(out.result.range->peak_delay_ps, direct.range->peak_delay_ps);
  EXPECT_EQ(out.result.probe_histogram.counts, direct.probe_histogram.counts);

  EXPECT_NEAR(out.result.range->object_distance_m, 500.0, 0.5);
  EXPECT_GT(out.result.probe->s_value, 2.6);
  EXPECT_TRUE(out.result.probe->detected);
  const double target = analytic_s(noisy_state(c.plan.source));
  EXPECT_NEAR(out.result.reference.s_value, target, 3 * out.result.reference.s_uncertainty);

  for (const char* f : {"probe_idler_histogram.csv", "reference_idler_histogram.csv", "chsh_reference.csv",
                        "chsh_probe.csv", "counts.csv", "range.txt", "report.txt"})
    EXPECT_TRUE(fs::exists(run / "analysis" / f)) << f;
  const auto hist = CoincidenceHistogram::from_csv(read_file(run / "analysis" / "probe_idler_histogram.csv"));
  EXPECT_EQ(hist.counts, direct.probe_histogram.counts);
  const auto chsh = chsh_from_csv(read_file(run / "analysis" / "chsh_probe.csv"));
  EXPECT_EQ(chsh.s_value, direct.probe->s_value);
  EXPECT_NE(read_file(run / "analysis" / "range.txt").find("status = peak"), std::string::npos);

  // Re-analysis reproduces the output tree byte for byte.
  cmd_analyze(c, run, run / "again");
  for (const auto& entry : fs::directory_iterator(run / "analysis"))
    EXPECT_EQ(read_file(entry.path()), read_file(run / "again" / entry.path().filename()));
}

TEST(Analyze, NoObjectReportsNoPeak) {
  ExperimentConfig c = load_config(config_path("no_object.yaml"));
  c.plan.duration_per_setting_s = 0.25;
  const fs::path run = scratch_dir("an-none");
  cmd_simulate(c, run);
  const AnalyzeOutcome out = cmd_analyze(c, run, run / "analysis");
  EXPECT_EQ(out.exit_code, ExitCode::no_peak);
  EXPECT_FALSE(out.result.range);
  EXPECT_FALSE(out.result.probe);
  EXPECT_NE(read_file(run / "analysis" / "range.txt").find("no_peak"), std::string::npos);
  EXPECT_FALSE(fs::exists(run / "analysis" / "chsh_probe.csv"));
}

TEST(Analyze, ConfigMismatchIsNoted) {
  ExperimentConfig c = quick_mirror(0.05);
  const fs::path run = scratch_dir("an-mismatch");
  cmd_simulate(c, run);
  c.analysis.k_sigma = 2.0;
  const AnalyzeOutcome out = cmd_analyze(c, run, run / "analysis");
  EXPECT_NE(out.message.find("differs"), std::string::npos);
}

TEST(Analyze, CorruptTagFileIsTagFormatError) {
  const ExperimentConfig c = quick_mirror(0.01);
  const fs::path run = scratch_dir("an-corrupt");
  const RunManifest m = cmd_simulate(c, run);
  const fs::path victim = run / m.entries[3].file;
  const std::string bytes = read_file(victim);
  write_file_atomic(victim, bytes.substr(0, bytes.size() - 7));
  try {
    load_run(run);
    FAIL();
  } catch (const TagFormatError& e) {
    EXPECT_EQ(e.byte_offset(), bytes.size() - 7);
  }
  write_file_atomic(victim, bytes.substr(0, bytes.size() - 16));
  EXPECT_THROW(load_run(run), TagFormatError);
}

TEST(Sweep, RatesFallWithDistanceAndReferenceStaysFlat) {
  ExperimentConfig c = load_config(config_path("sweep.yaml"));
  c.plan.duration_per_setting_s = 0.1;
  c.workers = 2;
  const CsvTable t = cmd_sweep(c);
  ASSERT_EQ(t.rows.size(), c.sweep_distances_m.size());
  const double target = analytic_s(noisy_state(c.plan.source));
  const double total_time = 0.1 * 16;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double predicted = t.number(i, "predicted_received_rate");
    const double simulated = t.number(i, "simulated_received_rate");
    EXPECT_LE(simulated, predicted + 3 * std::sqrt(predicted / total_time)) << i;
    EXPECT_NEAR(t.number(i, "s_reference"), target, 4 * t.number(i, "ds_reference")) << i;
    // Points share a seed, so their reference values are correlated; compare the spread instead.
    EXPECT_NEAR(t.number(i, "s_reference"), t.number(0, "s_reference"), 4 * t.number(0, "ds_reference")) << i;
    EXPECT_NEAR(t.number(i, "transmitted_rate"), 166e3, 5 * std::sqrt(166e3 / total_time));
    if (i > 0) {
      EXPECT_LT(predicted, t.number(i - 1, "predicted_received_rate"));
      EXPECT_LT(simulated, t.number(i - 1, "simulated_received_rate"));
    }
  }
  // Workers change nothing.
  c.workers = 1;
  EXPECT_EQ(cmd_sweep(c).to_string(), t.to_string());
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  const std::string mirror = write_config(dir, "m.yaml", "duration_per_setting: 1 s", "duration_per_setting: 0.1 s");
  EXPECT_EQ(run_cli("linkbudget --config " + mirror), 0);
  EXPECT_EQ(run_cli("range --delay-ps 3370000"), 0);
  EXPECT_EQ(run_cli("simulate --config " + mirror + " --out " + (dir / "run").string()), 0);
  EXPECT_EQ(run_cli("analyze --config " + mirror + " --in " + (dir / "run").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "analysis" / "report.txt"));
  EXPECT_EQ(run_cli("range --config " + mirror + " --in " + (dir / "run").string()), 0);

  EXPECT_EQ(run_cli("linkbudget"), 2);
  EXPECT_EQ(run_cli("bogus"), 2);
  EXPECT_EQ(run_cli("linkbudget --config " + (dir / "absent.yaml").string()), 2);
  EXPECT_EQ(run_cli("analyze --config " + mirror + " --in " + (dir / "run").string() + " --bin-width 1"), 2);
  const std::string typo = write_config(dir, "typo.yaml", "reflectivity: 0.96", "reflectivty: 0.96");
  EXPECT_EQ(run_cli("linkbudget --config " + typo), 2);

  const std::string none =
      write_config(dir, "none.yaml", "reflectivity: 0.96", "reflectivity: 0");
  EXPECT_EQ(run_cli("chsh --config " + none + " --out " + (dir / "none").string()), 3);

  const std::string dark = write_config(dir, "forced.yaml", "  k_sigma: 3\n", "  k_sigma: 3\n  probe_center: 3 us\n");
  ExperimentConfig forced = load_config(dark);
  forced.plan.link.object_reflectivity = 0.0;
  forced.plan.detectors.probe.dark_count_rate = 0.0;
  cmd_simulate(forced, dir / "forced");
  EXPECT_EQ(run_cli("analyze --config " + dark + " --in " + (dir / "forced").string()), 4);

  const auto victim = dir / "run" / "tags" / "setting_00.qtt1";
  std::ofstream(victim, std::ios::binary | std::ios::app) << "xyz";
  EXPECT_EQ(run_cli("analyze --config " + mirror + " --in " + (dir / "run").string()), 5);
}
