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

#include "qillum/link_budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <fmt/format.h>

#include "qillum/random.hpp"

namespace qillum {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void CollimatorSpec::validate() const {
  require(mode_field_diameter > 0 && focal_length > 0 && clear_aperture_diameter > 0,
          "collimator dimensions must be strictly positive");
  require(coupling_transmission > 0 && coupling_transmission <= 1,
          "collimator coupling_transmission must lie in (0, 1]");
}

void LinkModel::validate() const {
  sender.validate();
  receiver.validate();
  require(receiver_pbs_aperture_diameter > 0 && object_diameter > 0 && wavelength > 0,
          "link diameters and wavelength must be strictly positive");
  require(object_distance >= 0 && std::isfinite(object_distance),
          "object_distance must be finite and non-negative");
  require(object_reflectivity >= 0 && object_reflectivity <= 1,
          "object_reflectivity must lie in [0, 1]");
  require(attenuation_coefficient >= 0, "attenuation_coefficient must be non-negative");
  require(pointing_rms >= 0, "pointing_rms must be non-negative");
}

double LossBreakdown::factor(std::string_view name) const {
  for (const auto& s : stages)
    if (s.name == name) return s.factor;
  throw std::out_of_range(fmt::format("no loss stage named '{}'", name));
}

double LossBreakdown::total_excluding(std::string_view name) const {
  double product = 1.0;
  bool found = false;
  for (const auto& s : stages) {
    if (s.name == name && !found) {
      found = true;
      continue;
    }
    product *= s.factor;
  }
  if (!found) throw std::out_of_range(fmt::format("no loss stage named '{}'", name));
  return product;
}

std::string LossBreakdown::to_csv() const {
  std::string out = "stage,factor\n";
  for (const auto& s : stages) out += fmt::format("{},{:.17g}\n", s.name, s.factor);
  return out;
}

LossBreakdown LossBreakdown::from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "stage,factor")
    throw std::invalid_argument("loss breakdown CSV must start with 'stage,factor'");
  LossBreakdown out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("malformed loss breakdown row: " + line);
    const double f = std::stod(line.substr(comma + 1));
    out.stages.push_back({line.substr(0, comma), f});
    out.total *= f;
  }
  return out;
}

double divergence_full_angle(const CollimatorSpec& c) { return c.mode_field_diameter / c.focal_length; }

double divergence_full_angle_deg(const CollimatorSpec& c) {
  return divergence_full_angle(c) * 180.0 / std::numbers::pi;
}

double beam_diameter_at(const CollimatorSpec& c, double wavelength, double distance) {
  require(distance >= 0, "beam_diameter_at: distance must be non-negative");
  const double waist_diameter = 4.0 * wavelength * c.focal_length / (std::numbers::pi * c.mode_field_diameter);
  return waist_diameter + 2.0 * distance * std::tan(divergence_full_angle(c) / 2.0);
}

double gaussian_clip_fraction(double beam_diameter, double aperture_diameter, double center_offset) {
  require(beam_diameter > 0, "gaussian_clip_fraction: beam_diameter must be positive");
  require(aperture_diameter >= 0, "gaussian_clip_fraction: aperture_diameter must be non-negative");
  require(center_offset >= 0, "gaussian_clip_fraction: center_offset must be non-negative");
  if (aperture_diameter == 0) return 0.0;
  if (std::isinf(aperture_diameter)) return 1.0;

  // Intensity exp(-2 r^2 / w^2) is a 2-D normal with per-axis sigma = D / 4,
  // so |r|^2 / sigma^2 is non-central chi-square with 2 degrees of freedom.
  const double ratio = aperture_diameter / beam_diameter;
  if (center_offset == 0) return -std::expm1(-2.0 * ratio * ratio);

  const double sigma = beam_diameter / 4.0;
  const double x = (aperture_diameter / 2.0) * (aperture_diameter / 2.0) / (sigma * sigma);
  const double lambda = center_offset * center_offset / (sigma * sigma);
  if (x > 1e6) return 1.0;
  boost::math::non_central_chi_squared_distribution<double> dist(2.0, lambda);
  return std::clamp(boost::math::cdf(dist, x), 0.0, 1.0);
}

double atmospheric_transmission(double a, double length) {
  require(a >= 0 && length >= 0, "atmospheric_transmission: a and L must be non-negative");
  return std::exp(-a * length);
}

double attenuation_from_db_per_km(double db_per_km) {
  return db_per_km * std::numbers::ln10 / 10.0 / 1000.0;
}

LossBreakdown end_to_end_transmission(const LinkModel& link) {
  return end_to_end_transmission(link, {link.pointing_rms, link.pointing_rms});
}

LossBreakdown end_to_end_transmission(const LinkModel& link, const PointingOffsets& offsets) {
  link.validate();
  const double at_sender = beam_diameter_at(link.sender, link.wavelength, 0.0);
  const double at_object = beam_diameter_at(link.sender, link.wavelength, link.object_distance);
  // The object is a plane reflector, so the beam keeps diverging over the full round trip.
  const double at_receiver = beam_diameter_at(link.sender, link.wavelength, link.roundtrip_length());

  LossBreakdown out;
  auto add = [&out](std::string_view name, double f) {
    out.stages.push_back({std::string(name), f});
    out.total *= f;
  };
  add(stage::kSenderCoupling, link.sender.coupling_transmission);
  add(stage::kSenderAperture, gaussian_clip_fraction(at_sender, link.sender.clear_aperture_diameter, 0.0));
  add(stage::kObjectClip, gaussian_clip_fraction(at_object, link.object_diameter, offsets.object));
  add(stage::kReflectivity, link.object_reflectivity);
  add(stage::kAtmosphere, atmospheric_transmission(link.attenuation_coefficient, link.roundtrip_length()));
  add(stage::kReceiverPbsClip,
      gaussian_clip_fraction(at_receiver, link.receiver_pbs_aperture_diameter, offsets.receiver));
  add(stage::kReceiverApertureClip,
      gaussian_clip_fraction(at_receiver, link.receiver.clear_aperture_diameter, offsets.receiver));
  add(stage::kReceiverCoupling, link.receiver.coupling_transmission);
  return out;
}

PointingOffsets sample_pointing(const LinkModel& link, RandomSource& rng) {
  const double sigma = link.pointing_rms / std::numbers::sqrt2;
  auto draw = [&] {
    const double x = sigma * rng.normal();
    const double y = sigma * rng.normal();
    return std::hypot(x, y);
  };
  PointingOffsets out;
  out.object = draw();
  out.receiver = draw();
  return out;
}

double predict_received_rate(double launched_rate, const LinkModel& link) {
  require(launched_rate >= 0, "predict_received_rate: launched_rate must be non-negative");
  return launched_rate * end_to_end_transmission(link).total;
}

ReflectivityEstimate infer_reflectivity(double measured_rate, double launched_rate,
                                        const LinkModel& link_without_r) {
  require(launched_rate > 0, "infer_reflectivity: launched_rate must be positive");
  require(measured_rate >= 0, "infer_reflectivity: measured_rate must be non-negative");
  LinkModel unit_r = link_without_r;
  unit_r.object_reflectivity = 1.0;
  const double residual = end_to_end_transmission(unit_r).total;
  require(residual > 0, "infer_reflectivity: link transmission excluding R is zero");

  ReflectivityEstimate out;
  out.unclamped = measured_rate / (launched_rate * residual);
  out.clamped = out.unclamped > 1.0;
  out.reflectivity = out.clamped ? 1.0 : out.unclamped;
  return out;
}

}  // namespace qillum
