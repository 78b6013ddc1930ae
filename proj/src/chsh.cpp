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

#include "qillum/chsh.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "qillum/errors.hpp"

namespace qillum {

std::array<AnalyzerSetting, 4> ChshAngles::canonical_settings() const {
  return {AnalyzerSetting{alpha, beta}, AnalyzerSetting{alpha, beta_prime}, AnalyzerSetting{alpha_prime, beta},
          AnalyzerSetting{alpha_prime, beta_prime}};
}

std::vector<AnalyzerSetting> ChshAngles::measurement_settings() const {
  std::vector<AnalyzerSetting> out;
  for (const auto& s : canonical_settings()) {
    out.push_back(s);
    out.push_back(s.with_idler_orthogonal());
    out.push_back(s.with_signal_orthogonal());
    out.push_back(s.with_signal_orthogonal().with_idler_orthogonal());
  }
  return out;
}

CorrelationEstimate correlation_from_counts(const SettingCounts& c) {
  const std::uint64_t total = c.total();
  if (total == 0)
    throw UndefinedCorrelationError(fmt::format("no coincidences at setting (alpha={} deg, beta={} deg)",
                                                c.setting.alpha_deg, c.setting.beta_deg),
                                    c.setting.alpha_deg, c.setting.beta_deg);
  const double same = static_cast<double>(c.n_ab + c.n_aperp_bperp);
  const double diff = static_cast<double>(c.n_aperp_b + c.n_ab_perp);
  const double t = static_cast<double>(total);
  CorrelationEstimate out;
  out.setting = c.setting;
  out.e = (same - diff) / t;
  // Var(E) = 4 same diff / t^3 for independent Poisson counts.
  out.de = 2.0 * std::sqrt(same * diff / (t * t * t));
  return out;
}

ChshResult chsh_s(const std::array<CorrelationEstimate, 4>& est, const ChshAngles& angles, double k_sigma) {
  ChshResult r;
  r.angles = angles;
  r.e_values = est;
  r.k_sigma = k_sigma;
  r.s_value = std::abs(est[0].e - est[1].e + est[2].e + est[3].e);
  double var = 0.0;
  for (const auto& e : est) var += e.de * e.de;
  r.s_uncertainty = std::sqrt(var);
  if (r.s_uncertainty > 0)
    r.sigma_above_2 = (r.s_value - 2.0) / r.s_uncertainty;
  else
    r.sigma_above_2 = r.s_value == 2.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.s_value - 2.0);
  r.detected = r.s_value - k_sigma * r.s_uncertainty > 2.0;
  return r;
}

DetectionVerdict detect_object(const ChshResult& result, double k_sigma) {
  DetectionVerdict v;
  v.k_sigma = k_sigma;
  v.lower_bound = result.s_value - k_sigma * result.s_uncertainty;
  v.detected = v.lower_bound > 2.0;
  v.summary = fmt::format("S = {:.4f} +/- {:.4f}; S - {}*dS = {:.4f} {} 2 -> {}", result.s_value,
                          result.s_uncertainty, k_sigma, v.lower_bound, v.detected ? ">" : "<=",
                          v.detected ? "object present" : "no object detected");
  return v;
}

double analytic_s(const TwoQubitPolarizationState& state, const ChshAngles& angles) {
  const auto s = angles.canonical_settings();
  return std::abs(ideal_correlation(state, s[0]) - ideal_correlation(state, s[1]) +
                  ideal_correlation(state, s[2]) + ideal_correlation(state, s[3]));
}

std::string chsh_to_csv(const ChshResult& r) {
  std::string out = "setting,alpha_deg,beta_deg,E,dE\n";
  for (std::size_t i = 0; i < r.e_values.size(); ++i) {
    const auto& e = r.e_values[i];
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", i, e.setting.alpha_deg, e.setting.beta_deg, e.e, e.de);
  }
  out += "summary,S,dS,detected\n";
  out += fmt::format("summary,{:.17g},{:.17g},{}\n", r.s_value, r.s_uncertainty, r.detected ? "true" : "false");
  return out;
}

ChshResult chsh_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "setting,alpha_deg,beta_deg,E,dE")
    throw std::invalid_argument("CHSH CSV must start with 'setting,alpha_deg,beta_deg,E,dE'");
  ChshResult r;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::getline(in, line)) throw std::invalid_argument("CHSH CSV has fewer than four setting rows");
    std::istringstream row(line);
    std::string cell[5];
    for (auto& c : cell) std::getline(row, c, ',');
    if (std::stoul(cell[0]) != i) throw std::invalid_argument("CHSH CSV setting rows out of order");
    r.e_values[i] = {{std::stod(cell[1]), std::stod(cell[2])}, std::stod(cell[3]), std::stod(cell[4])};
  }
  if (!std::getline(in, line) || line != "summary,S,dS,detected")
    throw std::invalid_argument("CHSH CSV lacks the summary header");
  if (!std::getline(in, line)) throw std::invalid_argument("CHSH CSV lacks the summary row");
  std::istringstream row(line);
  std::string cell[4];
  for (auto& c : cell) std::getline(row, c, ',');
  if (cell[0] != "summary" || (cell[3] != "true" && cell[3] != "false"))
    throw std::invalid_argument("malformed CHSH summary row: " + line);
  r.s_value = std::stod(cell[1]);
  r.s_uncertainty = std::stod(cell[2]);
  r.detected = cell[3] == "true";
  r.angles = {r.e_values[0].setting.alpha_deg, r.e_values[2].setting.alpha_deg, r.e_values[0].setting.beta_deg,
              r.e_values[1].setting.beta_deg};
  r.sigma_above_2 = r.s_uncertainty > 0 ? (r.s_value - 2.0) / r.s_uncertainty : 0.0;
  return r;
}

}  // namespace qillum
