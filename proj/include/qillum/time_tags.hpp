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
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace qillum {

/// Detector channels: D1 probe, D2 reference, D3 idler.
enum class Channel : std::uint32_t { probe = 1, reference = 2, idler = 3 };

/// flags bit 0: set when the photon left the reflected (orthogonal) PBS port.
inline constexpr std::uint32_t kReflectedPortFlag = 0x1u;

struct TimeTag {
  std::uint32_t channel = 0;
  std::uint32_t flags = 0;
  std::uint64_t timestamp_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

/// Detection record of one run, ordered by (timestamp, channel, flags).
using TimeTagStream = std::vector<TimeTag>;

enum class PbsPort { transmitted, reflected };

inline std::uint32_t port_flags(PbsPort port) {
  return port == PbsPort::reflected ? kReflectedPortFlag : 0u;
}

/// Timestamps of one detector (channel and PBS port), in stream order.
std::vector<std::uint64_t> channel_timestamps(std::span<const TimeTag> stream, Channel channel,
                                              PbsPort port = PbsPort::transmitted);

/// Number of tags on a channel counting both PBS ports.
std::size_t channel_count(std::span<const TimeTag> stream, Channel channel);

bool is_sorted_stream(std::span<const TimeTag> stream);

// QTT1 binary layout, all little-endian:
//   "QTT1" | u64 record count | count x (u32 channel, u32 flags, u64 timestamp_ps)
inline constexpr std::string_view kQtt1Magic = "QTT1";
inline constexpr std::size_t kQtt1HeaderSize = 12;
inline constexpr std::size_t kQtt1RecordSize = 16;

void write_qtt1(std::ostream& out, std::span<const TimeTag> tags);

/// Throws TagFormatError carrying the byte offset of the defect.
TimeTagStream read_qtt1(std::istream& in);

void write_qtt1_file(const std::filesystem::path& path, std::span<const TimeTag> tags);
TimeTagStream read_qtt1_file(const std::filesystem::path& path);

/// Plain-text export: header "channel,flags,timestamp_ps", one tag per row.
void write_tag_csv(std::ostream& out, std::span<const TimeTag> tags);
TimeTagStream read_tag_csv(std::istream& in);

}  // namespace qillum
