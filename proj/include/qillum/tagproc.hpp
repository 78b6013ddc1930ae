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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qillum/event_engine.hpp"

namespace qillum {

/// Half-open delay range [lo_ps, hi_ps) of (b - a) to histogram.
struct DelaySpan {
  std::int64_t lo_ps = 0;
  std::int64_t hi_ps = 0;
};

/// Counts of tag pairs per delay bin. Bin k covers
/// [delay_offset + k w, delay_offset + (k + 1) w).
struct CoincidenceHistogram {
  std::int64_t bin_width_ps = 1000;
  std::int64_t delay_offset_ps = 0;
  std::vector<std::uint64_t> counts;
  std::pair<std::uint32_t, std::uint32_t> channel_pair{0, 0};
  double integration_time_s = 0.0;

  double bin_center_ps(std::size_t k) const {
    return static_cast<double>(delay_offset_ps) + (static_cast<double>(k) + 0.5) * static_cast<double>(bin_width_ps);
  }
  std::uint64_t total() const;

  /// Adds another histogram with identical binning; integration times add.
  void accumulate(const CoincidenceHistogram& other);

  /// "delay_ps,counts" with bin centers.
  std::string to_csv() const;

  /// Parses to_csv output. Bin width is inferred from consecutive centers, so
  /// at least two rows are needed unless bin_width_ps is supplied.
  static CoincidenceHistogram from_csv(std::string_view text, std::int64_t bin_width_ps = 0);
};

/// Delays t_b - t_a binned over span by a two-pointer sweep, O(n + m + pairs).
/// Bin k covers [lo + k w, lo + (k + 1) w); a span that is not a whole number
/// of bins is extended upward to the next bin edge.
/// Both streams must be sorted non-decreasing; throws UnsortedStreamError otherwise.
CoincidenceHistogram coincidence_histogram(std::span<const std::uint64_t> stream_a,
                                           std::span<const std::uint64_t> stream_b,
                                           std::int64_t bin_width_ps, DelaySpan span);

/// Pairs with center - half_width <= t_b - t_a <= center + half_width.
std::uint64_t coincidences_in_window(std::span<const std::uint64_t> stream_a,
                                     std::span<const std::uint64_t> stream_b, std::int64_t center_ps,
                                     std::int64_t half_width_ps);

struct PeakOptions {
  double min_significance = 5.0;
  int guard_bins = 3;
  bool centroid = false;            ///< Refine with the count-weighted centroid of peak +/- 1 bins.
  double delay_offset_ps = 0.0;     ///< Constant fiber/electronics delay subtracted before ranging.
  double n_air = kAirGroupIndex;
};

struct RangeEstimate {
  double peak_delay_ps = 0.0;
  double roundtrip_length_m = 0.0;
  double object_distance_m = 0.0;
  std::uint64_t peak_counts = 0;
  std::size_t peak_bin = 0;
  double background_mean = 0.0;
  double background_std = 0.0;
  double significance = 0.0;
};

/// Distance implied by a probe-idler delay: L = (delay - offset) c / n_air, d = L / 2.
RangeEstimate range_from_delay(double delay_ps, double n_air = kAirGroupIndex, double delay_offset_ps = 0.0);

/// Largest bin scored against the background outside peak +/- guard_bins:
/// significance = (peak - mean) / max(sqrt(mean), 1). Returns nullopt when
/// the significance is below opts.min_significance or the histogram is empty.
std::optional<RangeEstimate> find_peak(const CoincidenceHistogram& histogram, const PeakOptions& opts = {});

/// Mean counts per bin outside peak +/- guard_bins; the accidental-coincidence
/// level used for sideband subtraction.
double sideband_mean(const CoincidenceHistogram& histogram, std::size_t peak_bin, int guard_bins);

}  // namespace qillum
