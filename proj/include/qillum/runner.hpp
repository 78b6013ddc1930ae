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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qillum/config.hpp"
#include "qillum/csv.hpp"
#include "qillum/protocol.hpp"

namespace qillum {

/// Process exit codes. no_peak and undefined_correlation mean the analysis
/// ran to completion but found no object / could not form a correlation.
enum class ExitCode : int {
  ok = 0,
  failure = 1,
  config_error = 2,
  no_peak = 3,
  undefined_correlation = 4,
  tag_format_error = 5,
};

struct ManifestEntry {
  AnalyzerSetting setting;
  std::uint64_t seed = 0;
  std::uint64_t records = 0;
  std::string file;  ///< Relative to the run directory.
};

/// Plain-text "key = value" manifest written next to the tag files.
struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  double duration_per_setting_s = 0.0;
  std::string ports;
  std::vector<ManifestEntry> entries;

  std::string to_text() const;
  static RunManifest parse(std::string_view text);
};

inline constexpr const char* kManifestName = "manifest.txt";

/// Link budget over the sweep distances (or the configured distance).
/// Columns: distance_m, beam diameters, one column per loss stage,
/// total_transmission, launched_rate, predicted_rate.
CsvTable cmd_linkbudget(const ExperimentConfig& config);

/// Simulates and writes <out>/tags/setting_NN.qtt1 plus <out>/manifest.txt.
RunManifest cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Reads a run directory written by cmd_simulate (or any QTT1 set with a manifest).
RunBundle load_run(const std::filesystem::path& run_dir, RunManifest* manifest = nullptr);

struct AnalyzeOutcome {
  ProtocolResult result;
  ExitCode exit_code = ExitCode::ok;
  std::string message;
};

/// Analyzes a run directory and writes histogram CSVs, CHSH CSVs, a range
/// report and a summary report into out_dir.
AnalyzeOutcome cmd_analyze(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                           const std::filesystem::path& out_dir);

/// Analyzes an in-memory bundle and writes the same outputs as cmd_analyze.
AnalyzeOutcome analyze_and_write(const RunBundle& bundle, const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

/// One row per sweep distance: rates, coincidence rate, S values, recovered
/// distance and reflectivity estimate. Points run on config.workers threads.
CsvTable cmd_sweep(const ExperimentConfig& config);

}  // namespace qillum
