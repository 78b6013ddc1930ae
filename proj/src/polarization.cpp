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

#include "qillum/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace qillum {

namespace {

constexpr double kStateTolerance = 1e-12;

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

double wrap_axis_deg(double deg) {
  double r = std::fmod(deg, 180.0);
  if (r < 0) r += 180.0;
  return r;
}

// Transmitted and reflected analyzer eigenvectors for polarization angle x.
Eigen::Vector2cd transmitted(double x) { return {std::cos(x), std::sin(x)}; }
Eigen::Vector2cd reflected(double x) { return {-std::sin(x), std::cos(x)}; }

Eigen::Vector4cd kron(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b) {
  return {a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1)};
}

Eigen::Matrix2cd analyzer_observable(double x) {
  Eigen::Matrix2cd s;
  s << std::cos(2 * x), std::sin(2 * x), std::sin(2 * x), -std::cos(2 * x);
  return s;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

}  // namespace

bool AnalyzerSetting::equivalent_to(const AnalyzerSetting& other, double tol_deg) const {
  auto close = [tol_deg](double a, double b) {
    const double d = std::abs(wrap_axis_deg(a) - wrap_axis_deg(b));
    return std::min(d, 180.0 - d) <= tol_deg;
  };
  return close(alpha_deg, other.alpha_deg) && close(beta_deg, other.beta_deg);
}

void SourceModel::validate() const {
  if (!(pair_rate >= 0) || !std::isfinite(pair_rate))
    throw std::invalid_argument("source pair_rate must be finite and non-negative");
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument(std::string("source ") + name + " must lie in [0, 1]");
  };
  unit(visibility_hv, "visibility_hv");
  unit(visibility_ad, "visibility_ad");
  unit(heralding_efficiency, "heralding_efficiency");
  if (visibility_ad > visibility_hv)
    throw std::invalid_argument("visibility_ad must not exceed visibility_hv");
}

TwoQubitPolarizationState TwoQubitPolarizationState::from_density(const DensityMatrix& rho) {
  if (!rho.allFinite()) throw std::invalid_argument("density operator has non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kStateTolerance)
    throw std::invalid_argument("density operator is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > kStateTolerance)
    throw std::invalid_argument("density operator trace differs from 1");
  Eigen::SelfAdjointEigenSolver<DensityMatrix> solver(rho, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kStateTolerance)
    throw std::invalid_argument("density operator has a negative eigenvalue");
  return TwoQubitPolarizationState(rho);
}

TwoQubitPolarizationState bell_state_psi_plus() {
  DensityMatrix rho = DensityMatrix::Zero();
  const int hv = static_cast<int>(Outcome::HV);
  const int vh = static_cast<int>(Outcome::VH);
  rho(hv, hv) = rho(vh, vh) = rho(hv, vh) = rho(vh, hv) = 0.5;
  return TwoQubitPolarizationState::from_density(rho);
}

TwoQubitPolarizationState maximally_mixed_state() {
  return TwoQubitPolarizationState::from_density(DensityMatrix::Identity() / 4.0);
}

TwoQubitPolarizationState noisy_state(double visibility_hv, double visibility_ad) {
  if (!(visibility_hv >= 0.0 && visibility_hv <= 1.0) || !(visibility_ad >= 0.0))
    throw std::invalid_argument("visibilities must lie in [0, 1]");
  if (visibility_ad > visibility_hv)
    throw std::invalid_argument(
        "visibility_ad > visibility_hv cannot be represented by the white-noise/dephasing model");

  const double white = 1.0 - visibility_hv;
  const double coherent = visibility_hv > 0.0 ? visibility_ad / visibility_hv : 0.0;

  DensityMatrix dephased = DensityMatrix::Zero();
  dephased(1, 1) = dephased(2, 2) = 0.5;

  const DensityMatrix rho = white * DensityMatrix::Identity() / 4.0 +
                            (1.0 - white) * (coherent * bell_state_psi_plus().density() +
                                             (1.0 - coherent) * dephased);
  return TwoQubitPolarizationState::from_density(rho);
}

TwoQubitPolarizationState noisy_state(const SourceModel& source) {
  return noisy_state(source.visibility_hv, source.visibility_ad);
}

OutcomeProbabilities coincidence_probabilities(const TwoQubitPolarizationState& state,
                                               const AnalyzerSetting& setting) {
  const double a = deg_to_rad(setting.alpha_deg);
  const double b = deg_to_rad(setting.beta_deg);
  const std::array<Eigen::Vector2cd, 2> signal{transmitted(a), reflected(a)};
  const std::array<Eigen::Vector2cd, 2> idler{transmitted(b), reflected(b)};

  OutcomeProbabilities out;
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 2; ++i) {
      const Eigen::Vector4cd v = kron(signal[s], idler[i]);
      const double p = (v.adjoint() * state.density() * v)(0, 0).real();
      out.p[2 * s + i] = std::clamp(p, 0.0, 1.0);
    }
  }
  return out;
}

double ideal_correlation(const TwoQubitPolarizationState& state, const AnalyzerSetting& setting) {
  const auto p = coincidence_probabilities(state, setting);
  return p.hh() + p.vv() - p.hv() - p.vh();
}

double product_observable_expectation(const TwoQubitPolarizationState& state,
                                      const AnalyzerSetting& setting) {
  const Eigen::Matrix4cd obs = kron(analyzer_observable(deg_to_rad(setting.alpha_deg)),
                                    analyzer_observable(deg_to_rad(setting.beta_deg)));
  return (state.density() * obs).trace().real();
}

Visibilities measure_visibilities(const TwoQubitPolarizationState& state) {
  // P_HH(alpha) = A + B cos 2alpha + C sin 2alpha, so three samples fix the fringe.
  auto fringe_visibility = [&state](double beta) {
    const double p0 = coincidence_probabilities(state, {0.0, beta}).hh();
    const double p45 = coincidence_probabilities(state, {45.0, beta}).hh();
    const double p90 = coincidence_probabilities(state, {90.0, beta}).hh();
    const double mean = 0.5 * (p0 + p90);
    const double b = 0.5 * (p0 - p90);
    const double c = p45 - mean;
    return mean > 0.0 ? std::hypot(b, c) / mean : 0.0;
  };
  return {fringe_visibility(0.0), fringe_visibility(45.0)};
}

}  // namespace qillum
