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
#include <string>
#include <string_view>
#include <vector>

#include "qillum/polarization.hpp"

namespace qillum {

/// The four analyzer angles of a CHSH test, degrees. The defaults maximize
/// S for |Psi+>, whose correlation is -cos 2(alpha + beta).
struct ChshAngles {
  double alpha = 0.0;
  double alpha_prime = 45.0;
  double beta = 67.5;
  double beta_prime = 22.5;

  /// (alpha, beta), (alpha, beta'), (alpha', beta), (alpha', beta'); S uses
  /// them with signs +, -, +, +.
  std::array<AnalyzerSetting, 4> canonical_settings() const;

  /// The 16 measurement settings: for each canonical (a, b), in order
  /// (a, b), (a, b+90), (a+90, b), (a+90, b+90).
  std::vector<AnalyzerSetting> measurement_settings() const;
};

/// Coincidence counts of the four outcome combinations at one setting.
struct SettingCounts {
  AnalyzerSetting setting;
  std::uint64_t n_ab = 0;
  std::uint64_t n_ab_perp = 0;
  std::uint64_t n_aperp_b = 0;
  std::uint64_t n_aperp_bperp = 0;

  std::uint64_t total() const { return n_ab + n_ab_perp + n_aperp_b + n_aperp_bperp; }
};

struct CorrelationEstimate {
  AnalyzerSetting setting;
  double e = 0.0;
  double de = 0.0;
};

struct ChshResult {
  ChshAngles angles;
  std::array<CorrelationEstimate, 4> e_values{};
  double s_value = 0.0;
  double s_uncertainty = 0.0;
  double k_sigma = 3.0;
  bool detected = false;
  double sigma_above_2 = 0.0;  ///< (S - 2) / dS; infinite when dS = 0 and S != 2.
};

struct DetectionVerdict {
  bool detected = false;
  double lower_bound = 0.0;  ///< S - k dS
  double k_sigma = 3.0;
  std::string summary;
};

/// E = (N_ab + N_a'b' - N_a'b - N_ab') / total, with first-order Poisson
/// uncertainty dE = sqrt((1 - E^2) / total). Throws UndefinedCorrelationError
/// when total is zero.
CorrelationEstimate correlation_from_counts(const SettingCounts& counts);

/// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')| with dS the root-sum-square
/// of the four dE. estimates must follow ChshAngles::canonical_settings order.
ChshResult chsh_s(const std::array<CorrelationEstimate, 4>& estimates, const ChshAngles& angles = {},
                  double k_sigma = 3.0);

/// detected = S - k dS > 2.
DetectionVerdict detect_object(const ChshResult& result, double k_sigma = 3.0);

/// Exact S of a state at the given angles.
double analytic_s(const TwoQubitPolarizationState& state, const ChshAngles& angles = {});

/// CSV: "setting,alpha_deg,beta_deg,E,dE" rows, then a "summary,S,dS,detected"
/// header and one summary row.
std::string chsh_to_csv(const ChshResult& result);
ChshResult chsh_from_csv(std::string_view text);

}  // namespace qillum
