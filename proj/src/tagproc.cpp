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

#include "qillum/tagproc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "qillum/errors.hpp"

namespace qillum {

namespace {

void require_sorted(std::span<const std::uint64_t> s, const char* name) {
  if (!std::is_sorted(s.begin(), s.end()))
    throw UnsortedStreamError(fmt::format("{} is not sorted by timestamp", name));
}

std::int64_t signed_delay(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a);
}

}  // namespace

std::uint64_t CoincidenceHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void CoincidenceHistogram::accumulate(const CoincidenceHistogram& other) {
  if (counts.empty() && integration_time_s == 0.0) {
    *this = other;
    return;
  }
  if (other.bin_width_ps != bin_width_ps || other.delay_offset_ps != delay_offset_ps ||
      other.counts.size() != counts.size())
    throw std::invalid_argument("cannot accumulate histograms with different binning");
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  integration_time_s += other.integration_time_s;
}

std::string CoincidenceHistogram::to_csv() const {
  std::string out = "delay_ps,counts\n";
  for (std::size_t k = 0; k < counts.size(); ++k) out += fmt::format("{:.17g},{}\n", bin_center_ps(k), counts[k]);
  return out;
}

CoincidenceHistogram CoincidenceHistogram::from_csv(std::string_view text, std::int64_t bin_width_ps) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "delay_ps,counts")
    throw std::invalid_argument("histogram CSV must start with 'delay_ps,counts'");
  std::vector<double> centers;
  CoincidenceHistogram h;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("malformed histogram row: " + line);
    centers.push_back(std::stod(line.substr(0, comma)));
    h.counts.push_back(std::stoull(line.substr(comma + 1)));
  }
  if (bin_width_ps <= 0) {
    if (centers.size() < 2) throw std::invalid_argument("histogram CSV needs two rows to infer the bin width");
    bin_width_ps = std::llround(centers[1] - centers[0]);
  }
  h.bin_width_ps = bin_width_ps;
  if (!centers.empty()) h.delay_offset_ps = std::llround(centers.front() - 0.5 * static_cast<double>(bin_width_ps));
  return h;
}

CoincidenceHistogram coincidence_histogram(std::span<const std::uint64_t> stream_a,
                                           std::span<const std::uint64_t> stream_b, std::int64_t bin_width_ps,
                                           DelaySpan span) {
  if (bin_width_ps <= 0) throw std::invalid_argument("bin_width must be positive");
  if (span.hi_ps <= span.lo_ps) throw std::invalid_argument("delay span must be non-empty");
  require_sorted(stream_a, "stream_a");
  require_sorted(stream_b, "stream_b");

  CoincidenceHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.delay_offset_ps = span.lo_ps;
  const auto n_bins = static_cast<std::size_t>((span.hi_ps - span.lo_ps + bin_width_ps - 1) / bin_width_ps);
  h.counts.assign(n_bins, 0);
  const std::int64_t hi = span.lo_ps + static_cast<std::int64_t>(n_bins) * bin_width_ps;

  std::size_t first = 0;
  for (const auto a : stream_a) {
    while (first < stream_b.size() && signed_delay(a, stream_b[first]) < span.lo_ps) ++first;
    for (std::size_t j = first; j < stream_b.size(); ++j) {
      const std::int64_t d = signed_delay(a, stream_b[j]);
      if (d >= hi) break;
      ++h.counts[static_cast<std::size_t>((d - span.lo_ps) / bin_width_ps)];
    }
  }
  return h;
}

std::uint64_t coincidences_in_window(std::span<const std::uint64_t> stream_a,
                                     std::span<const std::uint64_t> stream_b, std::int64_t center_ps,
                                     std::int64_t half_width_ps) {
  if (half_width_ps < 0) throw std::invalid_argument("half_width must be non-negative");
  require_sorted(stream_a, "stream_a");
  require_sorted(stream_b, "stream_b");
  const std::int64_t lo = center_ps - half_width_ps;
  const std::int64_t hi = center_ps + half_width_ps;

  std::uint64_t n = 0;
  std::size_t first = 0;
  for (const auto a : stream_a) {
    while (first < stream_b.size() && signed_delay(a, stream_b[first]) < lo) ++first;
    for (std::size_t j = first; j < stream_b.size() && signed_delay(a, stream_b[j]) <= hi; ++j) ++n;
  }
  return n;
}

RangeEstimate range_from_delay(double delay_ps, double n_air, double delay_offset_ps) {
  RangeEstimate r;
  r.peak_delay_ps = delay_ps;
  r.roundtrip_length_m = (delay_ps - delay_offset_ps) * 1e-12 * kSpeedOfLight / n_air;
  r.object_distance_m = r.roundtrip_length_m / 2.0;
  return r;
}

double sideband_mean(const CoincidenceHistogram& h, std::size_t peak_bin, int guard_bins) {
  double sum = 0.0;
  std::size_t n = 0;
  const auto guard = static_cast<std::int64_t>(guard_bins);
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (std::abs(static_cast<std::int64_t>(k) - static_cast<std::int64_t>(peak_bin)) <= guard) continue;
    sum += static_cast<double>(h.counts[k]);
    ++n;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

std::optional<RangeEstimate> find_peak(const CoincidenceHistogram& h, const PeakOptions& opts) {
  if (h.counts.empty()) return std::nullopt;
  const auto it = std::max_element(h.counts.begin(), h.counts.end());
  const auto peak = static_cast<std::size_t>(it - h.counts.begin());

  const double mean = sideband_mean(h, peak, opts.guard_bins);
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    if (std::abs(static_cast<std::int64_t>(k) - static_cast<std::int64_t>(peak)) <= opts.guard_bins) continue;
    const double d = static_cast<double>(h.counts[k]) - mean;
    sq += d * d;
    ++n;
  }

  const double significance =
      std::max(0.0, (static_cast<double>(*it) - mean) / std::max(std::sqrt(mean), 1.0));
  if (significance < opts.min_significance || *it == 0) return std::nullopt;

  double delay = h.bin_center_ps(peak);
  if (opts.centroid) {
    double w = 0.0, wx = 0.0;
    for (std::size_t k = peak > 0 ? peak - 1 : 0; k <= std::min(peak + 1, h.counts.size() - 1); ++k) {
      w += static_cast<double>(h.counts[k]);
      wx += static_cast<double>(h.counts[k]) * h.bin_center_ps(k);
    }
    delay = wx / w;
  }

  RangeEstimate r = range_from_delay(delay, opts.n_air, opts.delay_offset_ps);
  r.peak_counts = *it;
  r.peak_bin = peak;
  r.background_mean = mean;
  r.background_std = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
  r.significance = significance;
  return r;
}

}  // namespace qillum
