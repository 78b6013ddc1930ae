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
#include <complex>

#include <Eigen/Dense>

namespace qillum {

/// Two-photon polarization basis ordering: signal qubit first, idler second.
/// "H" is the transmitted port of an analyzer, "V" the reflected one.
enum class Outcome : int { HH = 0, HV = 1, VH = 2, VV = 3 };

using DensityMatrix = Eigen::Matrix4cd;

/// Analyzer angles in degrees from horizontal. The half-wave plate in each
/// arm sits at half the angle (theta_s = alpha / 2, theta_i = beta / 2), and
/// the polarizing beam splitter after it transmits polarization at `alpha`.
/// Angles are axis-like: alpha and alpha + 180 describe the same analyzer.
struct AnalyzerSetting {
  double alpha_deg = 0.0;
  double beta_deg = 0.0;

  double signal_hwp_deg() const { return alpha_deg / 2.0; }
  double idler_hwp_deg() const { return beta_deg / 2.0; }

  AnalyzerSetting with_signal_orthogonal() const { return {alpha_deg + 90.0, beta_deg}; }
  AnalyzerSetting with_idler_orthogonal() const { return {alpha_deg, beta_deg + 90.0}; }

  /// True when both angles agree modulo 180 degrees.
  bool equivalent_to(const AnalyzerSetting& other, double tol_deg = 1e-9) const;
};

/// Source characterization: pair emission rate (pairs/s) and the two
/// measured fringe visibilities. Heralding efficiency is carried for
/// detector-efficiency defaults.
struct SourceModel {
  double pair_rate = 0.0;
  double visibility_hv = 1.0;
  double visibility_ad = 1.0;
  double heralding_efficiency = 1.0;

  void validate() const;
};

/// Validated two-qubit density operator over {HH, HV, VH, VV}.
class TwoQubitPolarizationState {
 public:
  /// Throws std::invalid_argument unless rho is Hermitian, unit-trace and
  /// positive semidefinite (all within 1e-12).
  static TwoQubitPolarizationState from_density(const DensityMatrix& rho);

  const DensityMatrix& density() const { return rho_; }
  std::complex<double> operator()(Outcome row, Outcome col) const {
    return rho_(static_cast<int>(row), static_cast<int>(col));
  }

  double trace() const { return rho_.trace().real(); }
  double purity() const { return (rho_ * rho_).trace().real(); }

 private:
  explicit TwoQubitPolarizationState(const DensityMatrix& rho) : rho_(rho) {}

  DensityMatrix rho_;
};

/// Joint outcome probabilities indexed by Outcome.
struct OutcomeProbabilities {
  std::array<double, 4> p{};

  double operator[](Outcome o) const { return p[static_cast<std::size_t>(o)]; }
  double hh() const { return p[0]; }
  double hv() const { return p[1]; }
  double vh() const { return p[2]; }
  double vv() const { return p[3]; }
  double sum() const { return p[0] + p[1] + p[2] + p[3]; }
};

struct Visibilities {
  double hv = 0.0;
  double ad = 0.0;
};

/// |Psi+> = (|HV> + |VH>) / sqrt(2) as a pure density operator.
TwoQubitPolarizationState bell_state_psi_plus();

/// Maximally mixed state I/4.
TwoQubitPolarizationState maximally_mixed_state();

/// White-noise plus dephasing mixture reproducing the given H/V and A/D
/// fringe visibilities:
///   rho = eps I/4 + (1 - eps) [p |Psi+><Psi+| + (1 - p) (|HV><HV| + |VH><VH|) / 2]
/// with eps = 1 - visibility_hv and p = visibility_ad / visibility_hv.
/// Requires 0 <= visibility_ad <= visibility_hv <= 1.
TwoQubitPolarizationState noisy_state(double visibility_hv, double visibility_ad);
TwoQubitPolarizationState noisy_state(const SourceModel& source);

/// Probabilities of the four joint PBS outcomes after the signal analyzer at
/// alpha and the idler analyzer at beta. Exact; sums to 1 within 1e-12.
OutcomeProbabilities coincidence_probabilities(const TwoQubitPolarizationState& state,
                                               const AnalyzerSetting& setting);

/// E = P_HH + P_VV - P_HV - P_VH.
double ideal_correlation(const TwoQubitPolarizationState& state, const AnalyzerSetting& setting);

/// Tr(rho sigma(alpha) (x) sigma(beta)), where sigma(x) is the +/-1 analyzer
/// observable. Independent of coincidence_probabilities; equals
/// ideal_correlation for every state and setting.
double product_observable_expectation(const TwoQubitPolarizationState& state,
                                      const AnalyzerSetting& setting);

/// Fringe visibilities read off coincidence_probabilities: H/V with the
/// idler analyzer at 0 deg, A/D with it at 45 deg.
Visibilities measure_visibilities(const TwoQubitPolarizationState& state);

}  // namespace qillum
