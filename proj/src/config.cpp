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

#include "qillum/config.hpp"

#include <cmath>
#include <optional>
#include <set>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "qillum/errors.hpp"
#include "qillum/fileio.hpp"
#include "qillum/units.hpp"

namespace qillum {

namespace {

// Defaults that stand in for values the source characterization does not pin down.
constexpr double kDefaultAttenuationDbPerKm = 0.1;
constexpr double kDefaultSenderCoupling = 0.745;
constexpr double kDefaultReceiverCoupling = 1.0;
constexpr double kDefaultSignalEfficiency = 0.92;

class Section {
 public:
  Section(YAML::Node node, std::string path, std::string_view origin)
      : node_(std::move(node)), path_(std::move(path)), origin_(origin) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, path_, "expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  double quantity(const std::string& key, Quantity q) {
    const YAML::Node n = get(key);
    try {
      return parse_quantity(n.as<std::string>(), q);
    } catch (const std::exception& e) {
      fail(n, key, e.what());
    }
  }

  double quantity_or(const std::string& key, Quantity q, double fallback) {
    return has(key) ? quantity(key, q) : fallback;
  }

  std::vector<double> quantity_list(const std::string& key, Quantity q) {
    const YAML::Node n = get(key);
    if (!n.IsSequence()) fail(n, key, "expected a list");
    std::vector<double> out;
    for (const auto& item : n) {
      try {
        out.push_back(parse_quantity(item.as<std::string>(), q));
      } catch (const std::exception& e) {
        fail(item, key, e.what());
      }
    }
    return out;
  }

  std::uint64_t integer(const std::string& key) {
    const YAML::Node n = get(key);
    try {
      return n.as<std::uint64_t>();
    } catch (const std::exception&) {
      fail(n, key, "expected a non-negative integer");
    }
  }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const YAML::Node n = get(key);
    try {
      return n.as<bool>();
    } catch (const std::exception&) {
      fail(n, key, "expected true or false");
    }
  }

  std::string text(const std::string& key) {
    const YAML::Node n = get(key);
    if (!n.IsScalar()) fail(n, key, "expected a scalar");
    return n.as<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  Section child(const std::string& key) { return Section(get(key), join(key), origin_); }

  Section child_or_empty(const std::string& key) {
    if (!has(key)) return Section(YAML::Node(), join(key), origin_);
    return child(key);
  }

  /// Rejects keys that were never read.
  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, key, "unknown key");
    }
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& key, const std::string& message) const {
    const int line = at.Mark().line >= 0 ? at.Mark().line + 1 : 0;
    throw ConfigError(fmt::format("{}:{}: {}: {}", origin_, line, join(key), message));
  }

 private:
  YAML::Node get(const std::string& key) {
    if (!has(key)) {
      throw ConfigError(fmt::format("{}:{}: {}: required key is missing", origin_,
                                    node_ && node_.Mark().line >= 0 ? node_.Mark().line + 1 : 0, join(key)));
    }
    used_.insert(key);
    return node_[key];
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::string origin_;
  std::set<std::string> used_;
};

CollimatorSpec parse_collimator(Section s, const CollimatorSpec* fallback, double default_coupling) {
  CollimatorSpec c;
  if (fallback) {
    c.mode_field_diameter = s.quantity_or("mode_field_diameter", Quantity::length, fallback->mode_field_diameter);
    c.focal_length = s.quantity_or("focal_length", Quantity::length, fallback->focal_length);
  } else {
    c.mode_field_diameter = s.quantity("mode_field_diameter", Quantity::length);
    c.focal_length = s.quantity("focal_length", Quantity::length);
  }
  c.clear_aperture_diameter = s.quantity("clear_aperture", Quantity::length);
  c.coupling_transmission = s.quantity_or("coupling", Quantity::dimensionless, default_coupling);
  s.finish();
  return c;
}

DetectorModel parse_detector(Section s, double default_efficiency) {
  DetectorModel d;
  d.efficiency = s.quantity_or("efficiency", Quantity::dimensionless, default_efficiency);
  d.dark_count_rate = s.quantity_or("dark_count_rate", Quantity::rate, 100.0);
  d.timing_jitter_rms_ps = s.quantity_or("timing_jitter", Quantity::time, 350e-12) * 1e12;
  d.dead_time_ps = s.quantity_or("dead_time", Quantity::time, 0.0) * 1e12;
  s.finish();
  return d;
}

std::int64_t to_ps(double seconds) { return std::llround(seconds * 1e12); }

}  // namespace

void ExperimentConfig::sync_settings() {
  if (analysis.ports == PortConvention::both_ports) {
    const auto canonical = analysis.angles.canonical_settings();
    plan.settings.assign(canonical.begin(), canonical.end());
    plan.record_reflected_ports = true;
  } else {
    plan.settings = analysis.angles.measurement_settings();
    plan.record_reflected_ports = false;
  }
}

ExperimentConfig parse_config(std::string_view yaml_text, std::string_view origin) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}:{}: YAML syntax error: {}", origin, e.mark.line + 1, e.msg));
  }
  Section top(root, "", origin);
  ExperimentConfig cfg;
  ExperimentPlan& plan = cfg.plan;

  plan.seed = top.integer("seed");
  cfg.workers = top.has("workers") ? static_cast<unsigned>(top.integer("workers")) : 1u;
  cfg.output_dir = top.text_or("output", cfg.output_dir.string());

  {
    Section s = top.child("source");
    plan.source.pair_rate = s.quantity("pair_rate", Quantity::rate);
    plan.source.visibility_hv = s.quantity("visibility_hv", Quantity::dimensionless);
    plan.source.visibility_ad = s.quantity("visibility_ad", Quantity::dimensionless);
    plan.source.heralding_efficiency = s.quantity("heralding_efficiency", Quantity::dimensionless);
    s.finish();
  }
  {
    Section s = top.child("link");
    LinkModel& link = plan.link;
    link.wavelength = s.quantity("wavelength", Quantity::length);
    link.sender = parse_collimator(s.child("sender"), nullptr, kDefaultSenderCoupling);
    link.receiver = parse_collimator(s.child("receiver"), &link.sender, kDefaultReceiverCoupling);
    link.receiver_pbs_aperture_diameter = s.quantity("pbs_aperture", Quantity::length);
    link.object_distance = s.quantity("object_distance", Quantity::length);
    link.object_diameter = s.quantity("object_diameter", Quantity::length);
    link.object_reflectivity = s.quantity("reflectivity", Quantity::dimensionless);
    link.attenuation_coefficient = s.quantity_or("attenuation", Quantity::attenuation,
                                                 attenuation_from_db_per_km(kDefaultAttenuationDbPerKm));
    link.pointing_rms = s.quantity_or("pointing_rms", Quantity::length, 0.0);
    s.finish();
  }
  {
    Section s = top.child_or_empty("detectors");
    plan.detectors.probe = parse_detector(s.child_or_empty("probe"), kDefaultSignalEfficiency);
    plan.detectors.reference = parse_detector(s.child_or_empty("reference"), kDefaultSignalEfficiency);
    plan.detectors.idler = parse_detector(s.child_or_empty("idler"), plan.source.heralding_efficiency);
    s.finish();
  }
  {
    Section s = top.child("plan");
    plan.duration_per_setting_s = s.quantity("duration_per_setting", Quantity::time);
    plan.bs_probe_fraction = s.quantity_or("bs_probe_fraction", Quantity::dimensionless, 0.5);
    plan.n_air = s.quantity_or("n_air", Quantity::dimensionless, kAirGroupIndex);
    plan.pointing_coherence_time_s = s.quantity_or("pointing_coherence_time", Quantity::time, 0.01);
    Section angles = s.child_or_empty("angles");
    ChshAngles& a = cfg.analysis.angles;
    a.alpha = angles.quantity_or("alpha", Quantity::angle, a.alpha);
    a.alpha_prime = angles.quantity_or("alpha_prime", Quantity::angle, a.alpha_prime);
    a.beta = angles.quantity_or("beta", Quantity::angle, a.beta);
    a.beta_prime = angles.quantity_or("beta_prime", Quantity::angle, a.beta_prime);
    angles.finish();
    const std::string ports = s.text_or("ports", "transmitted_only");
    if (ports == "transmitted_only")
      cfg.analysis.ports = PortConvention::transmitted_only;
    else if (ports == "both_ports")
      cfg.analysis.ports = PortConvention::both_ports;
    else
      throw ConfigError(fmt::format("{}: plan.ports: expected transmitted_only or both_ports, got '{}'", origin, ports));
    Section delays = s.child_or_empty("delays");
    plan.delays.idler_ps = to_ps(delays.quantity_or("idler", Quantity::time, 0.0));
    plan.delays.reference_ps = to_ps(delays.quantity_or("reference", Quantity::time, 0.0));
    plan.delays.probe_ps = to_ps(delays.quantity_or("probe", Quantity::time, 0.0));
    delays.finish();
    s.finish();
  }
  {
    Section s = top.child_or_empty("analysis");
    AnalysisParams& p = cfg.analysis;
    p.bin_width_ps = to_ps(s.quantity_or("bin_width", Quantity::time, 1e-9));
    if (s.has("span")) {
      const auto span = s.quantity_list("span", Quantity::time);
      if (span.size() != 2) throw ConfigError(fmt::format("{}: analysis.span: expected [lo, hi]", origin));
      p.span = {to_ps(span[0]), to_ps(span[1])};
    }
    p.coincidence_half_width_ps = to_ps(s.quantity_or("coincidence_half_width", Quantity::time, 1e-9));
    if (s.has("probe_center")) p.probe_center_ps = to_ps(s.quantity("probe_center", Quantity::time));
    if (s.has("reference_center")) p.reference_center_ps = to_ps(s.quantity("reference_center", Quantity::time));
    p.k_sigma = s.quantity_or("k_sigma", Quantity::dimensionless, 3.0);
    p.peak.min_significance = s.quantity_or("min_significance", Quantity::dimensionless, 5.0);
    p.peak.guard_bins = static_cast<int>(s.quantity_or("guard_bins", Quantity::dimensionless, 3.0));
    p.peak.centroid = s.boolean_or("centroid", false);
    p.peak.delay_offset_ps = s.quantity_or("delay_offset", Quantity::time, 0.0) * 1e12;
    p.subtract_accidentals = s.boolean_or("subtract_accidentals", false);
    s.finish();
    if (p.bin_width_ps <= 0) throw ConfigError(fmt::format("{}: analysis.bin_width must be positive", origin));
    if (p.span.hi_ps <= p.span.lo_ps) throw ConfigError(fmt::format("{}: analysis.span must be non-empty", origin));
  }
  {
    Section s = top.child_or_empty("sweep");
    if (s.has("object_distances")) cfg.sweep_distances_m = s.quantity_list("object_distances", Quantity::length);
    s.finish();
  }
  top.finish();

  cfg.analysis.peak.n_air = plan.n_air;
  cfg.sync_settings();
  plan.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.string());
}

std::string canonical_config_text(const ExperimentConfig& c) {
  const ExperimentPlan& p = c.plan;
  const LinkModel& l = p.link;
  std::string out;
  auto line = [&out](std::string_view key, auto value) { out += fmt::format("{}={}\n", key, value); };
  auto num = [&line](std::string_view key, double v) { line(key, fmt::format("{:.17g}", v)); };

  line("seed", p.seed);
  num("source.pair_rate", p.source.pair_rate);
  num("source.visibility_hv", p.source.visibility_hv);
  num("source.visibility_ad", p.source.visibility_ad);
  num("source.heralding_efficiency", p.source.heralding_efficiency);
  num("link.wavelength", l.wavelength);
  for (const auto& [name, col] : {std::pair{"sender", &l.sender}, std::pair{"receiver", &l.receiver}}) {
    num(fmt::format("link.{}.mode_field_diameter", name), col->mode_field_diameter);
    num(fmt::format("link.{}.focal_length", name), col->focal_length);
    num(fmt::format("link.{}.clear_aperture", name), col->clear_aperture_diameter);
    num(fmt::format("link.{}.coupling", name), col->coupling_transmission);
  }
  num("link.pbs_aperture", l.receiver_pbs_aperture_diameter);
  num("link.object_distance", l.object_distance);
  num("link.object_diameter", l.object_diameter);
  num("link.reflectivity", l.object_reflectivity);
  num("link.attenuation", l.attenuation_coefficient);
  num("link.pointing_rms", l.pointing_rms);
  for (const auto& [name, det] : {std::pair{"probe", &p.detectors.probe}, std::pair{"reference", &p.detectors.reference},
                                  std::pair{"idler", &p.detectors.idler}}) {
    num(fmt::format("detectors.{}.efficiency", name), det->efficiency);
    num(fmt::format("detectors.{}.dark_count_rate", name), det->dark_count_rate);
    num(fmt::format("detectors.{}.timing_jitter_ps", name), det->timing_jitter_rms_ps);
    num(fmt::format("detectors.{}.dead_time_ps", name), det->dead_time_ps);
  }
  num("plan.duration_per_setting", p.duration_per_setting_s);
  num("plan.bs_probe_fraction", p.bs_probe_fraction);
  num("plan.n_air", p.n_air);
  num("plan.pointing_coherence_time", p.pointing_coherence_time_s);
  line("plan.delays.idler_ps", p.delays.idler_ps);
  line("plan.delays.reference_ps", p.delays.reference_ps);
  line("plan.delays.probe_ps", p.delays.probe_ps);
  line("plan.record_reflected_ports", p.record_reflected_ports);
  for (std::size_t i = 0; i < p.settings.size(); ++i)
    line(fmt::format("plan.settings.{}", i), fmt::format("{:.17g},{:.17g}", p.settings[i].alpha_deg, p.settings[i].beta_deg));

  const AnalysisParams& a = c.analysis;
  line("analysis.bin_width_ps", a.bin_width_ps);
  line("analysis.span_ps", fmt::format("{},{}", a.span.lo_ps, a.span.hi_ps));
  line("analysis.coincidence_half_width_ps", a.coincidence_half_width_ps);
  line("analysis.probe_center_ps", a.probe_center_ps ? std::to_string(*a.probe_center_ps) : "auto");
  line("analysis.reference_center_ps", a.reference_center_ps ? std::to_string(*a.reference_center_ps) : "auto");
  num("analysis.k_sigma", a.k_sigma);
  num("analysis.min_significance", a.peak.min_significance);
  line("analysis.guard_bins", a.peak.guard_bins);
  line("analysis.centroid", a.peak.centroid);
  num("analysis.delay_offset_ps", a.peak.delay_offset_ps);
  line("analysis.subtract_accidentals", a.subtract_accidentals);
  line("analysis.ports", a.ports == PortConvention::both_ports ? "both_ports" : "transmitted_only");
  for (std::size_t i = 0; i < c.sweep_distances_m.size(); ++i) num(fmt::format("sweep.object_distances.{}", i), c.sweep_distances_m[i]);
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = canonical_config_text(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace qillum
