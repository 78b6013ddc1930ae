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
#include <string>
#include <string_view>
#include <vector>

#include "qillum/event_engine.hpp"
#include "qillum/protocol.hpp"

namespace qillum {

/// Complete declarative description of a run: plan (source, link, detectors,
/// settings, seed), analysis parameters, sweep axis, and output location.
struct ExperimentConfig {
  ExperimentPlan plan;
  AnalysisParams analysis;
  std::vector<double> sweep_distances_m;
  std::filesystem::path output_dir = "qillum-out";
  unsigned workers = 1;

  /// Re-derives plan.settings and plan.record_reflected_ports from the
  /// analysis angles and port convention.
  void sync_settings();
};

/// Parses YAML text. Every physical quantity carries a unit ("5 um", "1 ns").
/// Unknown keys, missing required keys and malformed values raise
/// ConfigError with a "line N: key" prefix.
ExperimentConfig parse_config(std::string_view yaml_text, std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stable text rendering of every parsed value; input to config_hash.
std::string canonical_config_text(const ExperimentConfig& config);

/// SHA-256 hex digest of canonical_config_text.
std::string config_hash(const ExperimentConfig& config);

}  // namespace qillum
