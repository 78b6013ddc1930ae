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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qillum/chsh.hpp"
#include "qillum/event_engine.hpp"
#include "qillum/link_budget.hpp"
#include "qillum/polarization.hpp"
#include "qillum/random.hpp"
#include "qillum/tagproc.hpp"

namespace qillum::testing {

// 500 m mirror link with the bench optics.
inline LinkModel bench_mirror_link(double distance = 500.0) {
  LinkModel link;
  link.sender = {5e-6, 0.08, 0.0425, 0.745};
  link.receiver = {5e-6, 0.08, 0.042, 1.0};
  link.receiver_pbs_aperture_diameter = 0.02032;
  link.object_distance = distance;
  link.object_diameter = 0.0508;
  link.object_reflectivity = 0.96;
  link.attenuation_coefficient = 0.1 / (10.0 * std::log10(std::exp(1.0))) / 1000.0;
  link.wavelength = 808.049e-9;
  return link;
}

// Lossless link: huge apertures, unit coupling and reflectivity, no absorption.
inline LinkModel identity_link(double distance = 0.0) {
  LinkModel link;
  link.sender = {5e-6, 0.08, 1e3, 1.0};
  link.receiver = {5e-6, 0.08, 1e3, 1.0};
  link.receiver_pbs_aperture_diameter = 1e3;
  link.object_distance = distance;
  link.object_diameter = 1e3;
  link.object_reflectivity = 1.0;
  link.attenuation_coefficient = 0.0;
  return link;
}

inline DetectorModel ideal_detector() { return {1.0, 0.0, 0.0, 0.0}; }

// Ideal detectors, lossless link, both PBS ports, canonical settings only.
inline ExperimentPlan ideal_plan(double pair_rate, double duration_s, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.duration_per_setting_s = duration_s;
  const auto canonical = ChshAngles{}.canonical_settings();
  plan.settings.assign(canonical.begin(), canonical.end());
  plan.seed = seed;
  plan.source = {pair_rate, 1.0, 1.0, 1.0};
  plan.link = identity_link(10.0);
  plan.detectors = {ideal_detector(), ideal_detector(), ideal_detector()};
  plan.record_reflected_ports = true;
  return plan;
}

// O(n*m) pairing: every (a, b) with b - a in [lo, hi') lands in bin floor((d - lo) / w),
// hi' being hi rounded up to a whole bin.
inline std::vector<std::uint64_t> brute_force_histogram(const std::vector<std::uint64_t>& a,
                                                        const std::vector<std::uint64_t>& b, std::int64_t w,
                                                        DelaySpan span) {
  const auto n_bins = static_cast<std::size_t>((span.hi_ps - span.lo_ps + w - 1) / w);
  std::vector<std::uint64_t> counts(n_bins, 0);
  for (auto ta : a) {
    for (auto tb : b) {
      const std::int64_t d = static_cast<std::int64_t>(tb) - static_cast<std::int64_t>(ta);
      if (d < span.lo_ps) continue;
      const auto k = static_cast<std::size_t>((d - span.lo_ps) / w);
      if (k < n_bins) ++counts[k];
    }
  }
  return counts;
}

inline std::uint64_t brute_force_window(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                        std::int64_t center, std::int64_t half_width) {
  std::uint64_t n = 0;
  for (auto ta : a)
    for (auto tb : b) {
      const std::int64_t d = static_cast<std::int64_t>(tb) - static_cast<std::int64_t>(ta);
      if (d >= center - half_width && d <= center + half_width) ++n;
    }
  return n;
}

inline std::vector<std::uint64_t> random_sorted_stream(std::mt19937_64& gen, std::size_t n, std::uint64_t t_max) {
  std::uniform_int_distribution<std::uint64_t> dist(0, t_max);
  std::vector<std::uint64_t> s(n);
  for (auto& t : s) t = dist(gen);
  std::sort(s.begin(), s.end());
  return s;
}

// Multinomial counts of the four joint outcomes at one setting, sampled
// independently of the event engine.
inline SettingCounts sample_counts(const TwoQubitPolarizationState& state, const AnalyzerSetting& setting,
                                   std::uint64_t n, std::mt19937_64& gen) {
  const auto p = coincidence_probabilities(state, setting);
  std::discrete_distribution<int> dist({p.hh(), p.hv(), p.vh(), p.vv()});
  std::uint64_t c[4] = {0, 0, 0, 0};
  for (std::uint64_t i = 0; i < n; ++i) ++c[dist(gen)];
  SettingCounts out;
  out.setting = setting;
  out.n_ab = c[0];
  out.n_ab_perp = c[1];
  out.n_aperp_b = c[2];
  out.n_aperp_bperp = c[3];
  return out;
}

inline ChshResult sample_chsh(const TwoQubitPolarizationState& state, std::uint64_t n_per_setting,
                              std::mt19937_64& gen, const ChshAngles& angles = {}) {
  std::array<CorrelationEstimate, 4> est{};
  const auto settings = angles.canonical_settings();
  for (std::size_t i = 0; i < 4; ++i)
    est[i] = correlation_from_counts(sample_counts(state, settings[i], n_per_setting, gen));
  return chsh_s(est, angles);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qillum-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace qillum::testing
