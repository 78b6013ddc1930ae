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

#include "qillum/protocol.hpp"

#include <cmath>

#include <fmt/format.h>

#include "qillum/errors.hpp"

namespace qillum {

namespace {

struct PathStreams {
  std::vector<std::uint64_t> idler[2];
  std::vector<std::uint64_t> signal[2];
};

PathStreams split_streams(const TimeTagStream& tags, Channel signal_channel) {
  PathStreams s;
  for (int port = 0; port < 2; ++port) {
    const auto p = port == 0 ? PbsPort::transmitted : PbsPort::reflected;
    s.idler[port] = channel_timestamps(tags, Channel::idler, p);
    s.signal[port] = channel_timestamps(tags, signal_channel, p);
  }
  return s;
}

std::vector<std::uint64_t> merged(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

const SettingRun& find_run(const RunBundle& bundle, const AnalyzerSetting& s) {
  for (const auto& run : bundle.runs)
    if (run.setting.equivalent_to(s)) return run;
  throw ConfigError(fmt::format("run has no measurement at setting (alpha={} deg, beta={} deg)", s.alpha_deg,
                                s.beta_deg));
}

// Accidental pairs expected inside a window, from the histogram sidebands.
double accidentals_in_window(const CoincidenceHistogram& h, std::int64_t center, std::int64_t half_width,
                             int guard_bins) {
  if (h.counts.empty()) return 0.0;
  const double k = std::floor(static_cast<double>(center - h.delay_offset_ps) / static_cast<double>(h.bin_width_ps));
  const auto peak_bin = static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(h.counts.size() - 1)));
  const int guard = guard_bins + static_cast<int>(half_width / h.bin_width_ps) + 1;
  return sideband_mean(h, peak_bin, guard) * static_cast<double>(2 * half_width + 1) /
         static_cast<double>(h.bin_width_ps);
}

// Per-run streams of one signal path, plus each run's own histogram.
struct RunData {
  const SettingRun* run;
  PathStreams streams;
  CoincidenceHistogram histogram;
};

// The setting histogram merges both ports of each arm; accidentals scale with the singles of the
// port pair being counted.
std::uint64_t window_count(const std::vector<std::uint64_t>& idler, const std::vector<std::uint64_t>& signal,
                           std::int64_t center, const AnalysisParams& p, const RunData& d) {
  const auto raw = coincidences_in_window(idler, signal, center, p.coincidence_half_width_ps);
  if (!p.subtract_accidentals) return raw;
  const double ni = static_cast<double>(d.streams.idler[0].size() + d.streams.idler[1].size());
  const double ns = static_cast<double>(d.streams.signal[0].size() + d.streams.signal[1].size());
  if (ni == 0 || ns == 0) return raw;
  const double share = static_cast<double>(idler.size()) / ni * static_cast<double>(signal.size()) / ns;
  const double acc =
      share * accidentals_in_window(d.histogram, center, p.coincidence_half_width_ps, p.peak.guard_bins);
  return static_cast<std::uint64_t>(std::max(0.0, std::round(static_cast<double>(raw) - acc)));
}

struct PathAnalysis {
  std::array<SettingCounts, 4> counts{};
};

std::vector<RunData> prepare(const RunBundle& bundle, Channel signal_channel, const AnalysisParams& p) {
  std::vector<RunData> out;
  for (const auto& run : bundle.runs) {
    RunData d{&run, split_streams(run.tags, signal_channel), {}};
    d.histogram = coincidence_histogram(merged(d.streams.idler[0], d.streams.idler[1]),
                                        merged(d.streams.signal[0], d.streams.signal[1]), p.bin_width_ps, p.span);
    d.histogram.channel_pair = {static_cast<std::uint32_t>(Channel::idler), static_cast<std::uint32_t>(signal_channel)};
    d.histogram.integration_time_s = bundle.duration_per_setting_s;
    out.push_back(std::move(d));
  }
  return out;
}

const RunData& find_data(const std::vector<RunData>& data, const AnalyzerSetting& s) {
  for (const auto& d : data)
    if (d.run->setting.equivalent_to(s)) return d;
  throw ConfigError(fmt::format("run has no measurement at setting (alpha={} deg, beta={} deg)", s.alpha_deg,
                                s.beta_deg));
}

PathAnalysis count_path(const std::vector<RunData>& data, std::int64_t center, const AnalysisParams& p) {
  PathAnalysis out;
  const auto canonical = p.angles.canonical_settings();
  for (std::size_t i = 0; i < 4; ++i) {
    SettingCounts& c = out.counts[i];
    c.setting = canonical[i];
    if (p.ports == PortConvention::transmitted_only) {
      const AnalyzerSetting ab = canonical[i];
      auto count_at = [&](const AnalyzerSetting& s) {
        const RunData& d = find_data(data, s);
        return window_count(d.streams.idler[0], d.streams.signal[0], center, p, d);
      };
      c.n_ab = count_at(ab);
      c.n_ab_perp = count_at(ab.with_idler_orthogonal());
      c.n_aperp_b = count_at(ab.with_signal_orthogonal());
      c.n_aperp_bperp = count_at(ab.with_signal_orthogonal().with_idler_orthogonal());
    } else {
      const RunData& d = find_data(data, canonical[i]);
      // signal port index 1 is the alpha-perp outcome, idler port 1 the beta-perp one.
      c.n_ab = window_count(d.streams.idler[0], d.streams.signal[0], center, p, d);
      c.n_ab_perp = window_count(d.streams.idler[1], d.streams.signal[0], center, p, d);
      c.n_aperp_b = window_count(d.streams.idler[0], d.streams.signal[1], center, p, d);
      c.n_aperp_bperp = window_count(d.streams.idler[1], d.streams.signal[1], center, p, d);
    }
  }
  return out;
}

ChshResult estimate(const std::array<SettingCounts, 4>& counts, const AnalysisParams& p) {
  std::array<CorrelationEstimate, 4> est{};
  for (std::size_t i = 0; i < 4; ++i) est[i] = correlation_from_counts(counts[i]);
  return chsh_s(est, p.angles, p.k_sigma);
}

CoincidenceHistogram summed(const std::vector<RunData>& data) {
  CoincidenceHistogram h;
  for (const auto& d : data) h.accumulate(d.histogram);
  return h;
}

}  // namespace

ProtocolResult analyze_bundle(const RunBundle& bundle, const ExperimentPlan& plan, const AnalysisParams& p) {
  if (bundle.runs.empty()) throw ConfigError("no runs to analyze");
  for (const auto& s : p.angles.canonical_settings()) find_run(bundle, s);

  ProtocolResult result;

  const auto reference = prepare(bundle, Channel::reference, p);
  result.reference_histogram = summed(reference);
  result.reference_center_ps = p.reference_center_ps.value_or(plan.delays.reference_ps - plan.delays.idler_ps);
  result.reference_counts = count_path(reference, result.reference_center_ps, p).counts;
  result.reference = estimate(result.reference_counts, p);

  const auto probe = prepare(bundle, Channel::probe, p);
  result.probe_histogram = summed(probe);
  PeakOptions peak = p.peak;
  peak.n_air = plan.n_air;
  result.range = find_peak(result.probe_histogram, peak);
  if (p.probe_center_ps)
    result.probe_center_ps = p.probe_center_ps;
  else if (result.range)
    result.probe_center_ps = std::llround(result.range->peak_delay_ps);

  if (result.probe_center_ps) {
    result.probe_counts = count_path(probe, *result.probe_center_ps, p).counts;
    result.probe = estimate(result.probe_counts, p);
  }
  return result;
}

ProtocolResult run_chsh_protocol(const ExperimentPlan& plan, const AnalysisParams& params, unsigned workers) {
  return analyze_bundle(simulate_run(plan, workers), plan, params);
}

std::string protocol_report(const ProtocolResult& r) {
  std::string out;
  auto section = [&out](const char* name, const ChshResult& c, bool probe) {
    out += fmt::format("[{}]\n", name);
    for (const auto& e : c.e_values)
      out += fmt::format("E({:g}, {:g}) = {:+.5f} +/- {:.5f}\n", e.setting.alpha_deg, e.setting.beta_deg, e.e, e.de);
    out += fmt::format("S = {:.5f} +/- {:.5f}\n", c.s_value, c.s_uncertainty);
    out += fmt::format("sigma_above_2 = {:.3f}\n", c.sigma_above_2);
    if (probe) {
      out += detect_object(c, c.k_sigma).summary + "\n";
    } else {
      out += fmt::format("source check: S - {}*dS = {:.4f} ({})\n", c.k_sigma, c.s_value - c.k_sigma * c.s_uncertainty,
                         c.detected ? "violates S <= 2" : "no violation");
    }
  };
  section("reference-idler", r.reference, false);
  if (r.probe) {
    section("probe-idler", *r.probe, true);
  } else {
    out += "[probe-idler]\nno coincidence peak found; object absent\n";
  }
  if (r.range) {
    out += fmt::format("[range]\npeak_delay_ps = {:.1f}\nobject_distance_m = {:.4f}\npeak_counts = {}\n"
                       "background_mean = {:.4f}\nsignificance = {:.2f}\n",
                       r.range->peak_delay_ps, r.range->object_distance_m, r.range->peak_counts,
                       r.range->background_mean, r.range->significance);
  }
  out += "note: uncertainties are first-order Poisson propagation of independent counts\n";
  return out;
}

}  // namespace qillum
