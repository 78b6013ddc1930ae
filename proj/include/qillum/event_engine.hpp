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

#include <cstdint>
#include <span>
#include <vector>

#include "qillum/link_budget.hpp"
#include "qillum/polarization.hpp"
#include "qillum/time_tags.hpp"

namespace qillum {

class RandomSource;

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kAirGroupIndex = 1.00027;

/// Single-photon detector. Times in picoseconds; dead_time 0 disables it.
struct DetectorModel {
  double efficiency = 1.0;
  double dark_count_rate = 100.0;  // counts/s
  double timing_jitter_rms_ps = 350.0;
  double dead_time_ps = 0.0;

  void validate() const;
};

struct DetectorSet {
  DetectorModel probe;
  DetectorModel reference;
  DetectorModel idler;

  const DetectorModel& operator[](Channel c) const;
};

/// Fixed fiber and electronics delays added to each path, picoseconds.
struct PathDelays {
  std::int64_t idler_ps = 0;
  std::int64_t reference_ps = 0;
  std::int64_t probe_ps = 0;  ///< Added on top of the free-space round trip.
};

struct ExperimentPlan {
  double duration_per_setting_s = 1.0;
  std::vector<AnalyzerSetting> settings;
  std::uint64_t seed = 0;
  SourceModel source;
  LinkModel link;
  DetectorSet detectors;
  double bs_probe_fraction = 0.5;
  PathDelays delays;
  double n_air = kAirGroupIndex;

  /// Also detect photons at the reflected PBS ports (flag bit 0 set). When
  /// false only the transmitted ports D1-D3 exist.
  bool record_reflected_ports = false;

  /// Pointing offsets are redrawn every coherence interval when
  /// link.pointing_rms > 0; otherwise the aligned budget applies throughout.
  double pointing_coherence_time_s = 0.01;

  /// Keep emission times of probe-routed pairs in SettingRun::probe_emissions_ps.
  bool record_ground_truth = false;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  double duration_ps() const { return duration_per_setting_s * 1e12; }
};

/// Monte-Carlo bookkeeping that is not visible in the tag stream.
struct RunStats {
  std::uint64_t pairs_emitted = 0;
  std::uint64_t probe_launched = 0;   ///< Signal photons routed to the probe path.
  std::uint64_t probe_returned = 0;   ///< Probe photons surviving the link up to the detector.
  std::uint64_t reference_arrived = 0;
  std::uint64_t dark_counts = 0;
  std::uint64_t dead_time_losses = 0;
};

struct SettingRun {
  AnalyzerSetting setting;
  std::uint64_t seed = 0;  ///< Derived per-setting seed.
  TimeTagStream tags;
  RunStats stats;
  std::vector<std::uint64_t> probe_emissions_ps;
};

struct RunBundle {
  double duration_per_setting_s = 0.0;
  std::vector<SettingRun> runs;
};

/// Free-space round-trip delay 2 d n_air / c, rounded to integer picoseconds.
std::int64_t roundtrip_delay_ps(double object_distance_m, double n_air = kAirGroupIndex);

/// Simulates every setting of the plan. Settings are independent and may be
/// spread across `workers` threads; results are identical for any worker count.
RunBundle simulate_run(const ExperimentPlan& plan, unsigned workers = 1);

/// Simulates plan.settings[index] only.
SettingRun simulate_setting(const ExperimentPlan& plan, std::size_t index);

/// Draws one joint outcome from the probabilities.
Outcome sample_outcome(const OutcomeProbabilities& probabilities, RandomSource& rng);

double singles_rate(std::size_t count, double duration_s);
double singles_rate(std::span<const std::uint64_t> stream, double duration_s);

}  // namespace qillum
