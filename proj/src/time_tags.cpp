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

#include "qillum/time_tags.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "qillum/errors.hpp"
#include "qillum/fileio.hpp"

namespace qillum {

namespace {

template <typename T>
void put_le(std::string& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

bool tag_less(const TimeTag& a, const TimeTag& b) {
  if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
  if (a.channel != b.channel) return a.channel < b.channel;
  return a.flags < b.flags;
}

}  // namespace

std::vector<std::uint64_t> channel_timestamps(std::span<const TimeTag> stream, Channel channel,
                                              PbsPort port) {
  const auto id = static_cast<std::uint32_t>(channel);
  const auto flag = port_flags(port);
  std::vector<std::uint64_t> out;
  for (const auto& t : stream)
    if (t.channel == id && (t.flags & kReflectedPortFlag) == flag) out.push_back(t.timestamp_ps);
  return out;
}

std::size_t channel_count(std::span<const TimeTag> stream, Channel channel) {
  const auto id = static_cast<std::uint32_t>(channel);
  return static_cast<std::size_t>(
      std::count_if(stream.begin(), stream.end(), [id](const TimeTag& t) { return t.channel == id; }));
}

bool is_sorted_stream(std::span<const TimeTag> stream) {
  return std::is_sorted(stream.begin(), stream.end(), tag_less);
}

void write_qtt1(std::ostream& out, std::span<const TimeTag> tags) {
  std::string buf;
  buf.reserve(kQtt1HeaderSize + kQtt1RecordSize * tags.size());
  buf.append(kQtt1Magic);
  put_le<std::uint64_t>(buf, tags.size());
  for (const auto& t : tags) {
    put_le<std::uint32_t>(buf, t.channel);
    put_le<std::uint32_t>(buf, t.flags);
    put_le<std::uint64_t>(buf, t.timestamp_ps);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

TimeTagStream read_qtt1(std::istream& in) {
  std::array<unsigned char, kQtt1HeaderSize> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got < kQtt1Magic.size() || std::memcmp(header.data(), kQtt1Magic.data(), kQtt1Magic.size()) != 0) {
    std::size_t bad = 0;
    while (bad < got && bad < kQtt1Magic.size() && header[bad] == kQtt1Magic[bad]) ++bad;
    throw TagFormatError("missing QTT1 magic", bad);
  }
  if (got < kQtt1HeaderSize) throw TagFormatError("truncated QTT1 header", got);

  const auto count = get_le<std::uint64_t>(header.data() + 4);
  TimeTagStream tags;
  std::array<unsigned char, kQtt1RecordSize> rec{};
  for (std::uint64_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(rec.data()), rec.size());
    const auto n = static_cast<std::size_t>(in.gcount());
    if (n != kQtt1RecordSize)
      throw TagFormatError("truncated record " + std::to_string(i) + " of " + std::to_string(count),
                           kQtt1HeaderSize + i * kQtt1RecordSize + n);
    tags.push_back({get_le<std::uint32_t>(rec.data()), get_le<std::uint32_t>(rec.data() + 4),
                    get_le<std::uint64_t>(rec.data() + 8)});
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw TagFormatError("trailing bytes after declared records", kQtt1HeaderSize + count * kQtt1RecordSize);
  return tags;
}

void write_qtt1_file(const std::filesystem::path& path, std::span<const TimeTag> tags) {
  std::ostringstream out;
  write_qtt1(out, tags);
  write_file_atomic(path, out.str());
}

TimeTagStream read_qtt1_file(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  return read_qtt1(in);
}

void write_tag_csv(std::ostream& out, std::span<const TimeTag> tags) {
  out << "channel,flags,timestamp_ps\n";
  for (const auto& t : tags) out << t.channel << ',' << t.flags << ',' << t.timestamp_ps << '\n';
}

TimeTagStream read_tag_csv(std::istream& in) {
  std::string line;
  std::uint64_t offset = 0;
  if (!std::getline(in, line) || line != "channel,flags,timestamp_ps")
    throw TagFormatError("tag CSV header must be 'channel,flags,timestamp_ps'", 0);
  offset += line.size() + 1;
  TimeTagStream tags;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      std::istringstream row(line);
      TimeTag t;
      char c1 = 0, c2 = 0;
      if (!(row >> t.channel >> c1 >> t.flags >> c2 >> t.timestamp_ps) || c1 != ',' || c2 != ',' ||
          !(row >> std::ws).eof())
        throw TagFormatError("malformed tag CSV row '" + line + "'", offset);
      tags.push_back(t);
    }
    offset += line.size() + 1;
  }
  return tags;
}

}  // namespace qillum
