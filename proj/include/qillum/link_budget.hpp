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

#include <string>
#include <string_view>
#include <vector>

namespace qillum {

class RandomSource;

/// Fiber collimator (sending or receiving telescope). Lengths in meters.
struct CollimatorSpec {
  double mode_field_diameter = 5e-6;
  double focal_length = 0.08;
  double clear_aperture_diameter = 0.0425;
  double coupling_transmission = 0.745;

  void validate() const;
};

/// Probe-path geometry and channel. Lengths in meters, attenuation in 1/m.
/// pointing_rms is the rms transverse beam-center offset at a clipping plane.
struct LinkModel {
  CollimatorSpec sender;
  CollimatorSpec receiver;
  double receiver_pbs_aperture_diameter = 0.02032;
  double object_distance = 0.0;
  double object_diameter = 0.0508;
  double object_reflectivity = 1.0;
  double attenuation_coefficient = 0.0;
  double wavelength = 808.049e-9;
  double pointing_rms = 0.0;

  void validate() const;
  double roundtrip_length() const { return 2.0 * object_distance; }
};

struct LossStage {
  std::string name;
  double factor = 1.0;
};

/// Stage-by-stage transmissions, in propagation order. total is their product.
struct LossBreakdown {
  std::vector<LossStage> stages;
  double total = 1.0;

  /// Throws std::out_of_range for an unknown stage name.
  double factor(std::string_view stage) const;

  /// Product of every stage except the named one.
  double total_excluding(std::string_view stage) const;

  /// "stage,factor" rows with a header line.
  std::string to_csv() const;
  static LossBreakdown from_csv(std::string_view text);
};

/// Transverse beam-center offsets (meters) at the object plane and at the
/// receiver plane. The receiver PBS and telescope share one offset since
/// they are stacked on the same axis.
struct PointingOffsets {
  double object = 0.0;
  double receiver = 0.0;
};

namespace stage {
inline constexpr std::string_view kSenderCoupling = "sender_coupling";
inline constexpr std::string_view kSenderAperture = "sender_aperture";
inline constexpr std::string_view kObjectClip = "object_clip";
inline constexpr std::string_view kReflectivity = "reflectivity";
inline constexpr std::string_view kAtmosphere = "atmosphere";
inline constexpr std::string_view kReceiverPbsClip = "receiver_pbs_clip";
inline constexpr std::string_view kReceiverApertureClip = "receiver_aperture_clip";
inline constexpr std::string_view kReceiverCoupling = "receiver_coupling";
}  // namespace stage

/// Full-angle divergence MFD / f in radians.
double divergence_full_angle(const CollimatorSpec& collimator);
double divergence_full_angle_deg(const CollimatorSpec& collimator);

/// 1/e^2 beam diameter at distance d from the collimator's front focal plane:
///   D = 4 lambda f / (pi MFD) + 2 d tan(theta / 2)
double beam_diameter_at(const CollimatorSpec& collimator, double wavelength, double distance);

/// Fraction of a Gaussian beam (1/e^2 diameter beam_diameter) passing a
/// circular aperture whose center is displaced by center_offset.
double gaussian_clip_fraction(double beam_diameter, double aperture_diameter, double center_offset);

/// Beer-Lambert transmission exp(-a L).
double atmospheric_transmission(double attenuation_coefficient, double roundtrip_length);

/// Converts dB/km to an exponential attenuation coefficient in 1/m.
double attenuation_from_db_per_km(double db_per_km);

/// Loss chain with link.pointing_rms applied as a static offset at every
/// clipping plane. With pointing_rms = 0 this is the perfectly aligned budget.
LossBreakdown end_to_end_transmission(const LinkModel& link);

/// Loss chain for explicit pointing offsets (link.pointing_rms is ignored).
LossBreakdown end_to_end_transmission(const LinkModel& link, const PointingOffsets& offsets);

/// One random draw of pointing offsets: circular Gaussian in the transverse
/// plane with radial rms link.pointing_rms, independently per plane.
PointingOffsets sample_pointing(const LinkModel& link, RandomSource& rng);

double predict_received_rate(double launched_rate, const LinkModel& link);

struct ReflectivityEstimate {
  double reflectivity = 0.0;  ///< Clamped to [0, 1].
  double unclamped = 0.0;
  bool clamped = false;       ///< Estimate exceeded 1; likely miscalibrated link.
};

/// Inverts the forward model for R. The reflectivity of link_without_r is
/// ignored. Throws std::invalid_argument when launched_rate or the residual
/// transmission is not strictly positive, or measured_rate is negative.
ReflectivityEstimate infer_reflectivity(double measured_rate, double launched_rate,
                                        const LinkModel& link_without_r);

}  // namespace qillum
