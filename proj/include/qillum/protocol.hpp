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

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "qillum/chsh.hpp"
#include "qillum/event_engine.hpp"
#include "qillum/tagproc.hpp"

namespace qillum {

/// How the four outcome counts of a setting are collected.
///  - transmitted_only: one detector per path at the transmitted PBS port;
///    orthogonal outcomes come from separate runs at alpha + 90 / beta + 90.
///  - both_ports: reflected ports are recorded too, so one run per
///    canonical setting yields all four counts.
enum class PortConvention { transmitted_only, both_ports };

struct AnalysisParams {
  ChshAngles angles;
  std::int64_t bin_width_ps = 1000;
  DelaySpan span{-10'000, 10'000'000};
  std::int64_t coincidence_half_width_ps = 1000;
  /// Probe-idler window center; located from the summed histogram peak when unset.
  std::optional<std::int64_t> probe_center_ps;
  /// Reference-idler window center; taken from the plan's fiber delays when unset.
  std::optional<std::int64_t> reference_center_ps;
  double k_sigma = 3.0;
  PeakOptions peak;
  bool subtract_accidentals = false;
  PortConvention ports = PortConvention::transmitted_only;
};

struct ProtocolResult {
  /// Unset when no probe-idler peak was found (object absent).
  std::optional<ChshResult> probe;
  ChshResult reference;
  std::array<SettingCounts, 4> probe_counts{};
  std::array<SettingCounts, 4> reference_counts{};
  CoincidenceHistogram probe_histogram;      ///< Idler to probe delays, all settings summed.
  CoincidenceHistogram reference_histogram;  ///< Idler to reference delays, all settings summed.
  std::optional<RangeEstimate> range;
  std::optional<std::int64_t> probe_center_ps;
  std::int64_t reference_center_ps = 0;
};

/// Analyzes simulated or recorded streams. Reference-idler counts are taken
/// at the fixed fiber-delay window; probe-idler counts at the ranging peak.
/// Throws ConfigError when a required setting is missing from the bundle and
/// UndefinedCorrelationError when a canonical setting has no coincidences.
ProtocolResult analyze_bundle(const RunBundle& bundle, const ExperimentPlan& plan, const AnalysisParams& params);

/// Simulates the plan and analyzes it in process.
ProtocolResult run_chsh_protocol(const ExperimentPlan& plan, const AnalysisParams& params, unsigned workers = 1);

/// Human-readable multi-line summary.
std::string protocol_report(const ProtocolResult& result);

}  // namespace qillum
