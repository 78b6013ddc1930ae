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

#include "qillum/units.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qillum {

namespace {

using UnitTable = std::vector<std::pair<std::string_view, double>>;

const UnitTable& units_for(Quantity q) {
  static const UnitTable length{{"m", 1.0}, {"km", 1e3}, {"cm", 1e-2}, {"mm", 1e-3},
                                {"um", 1e-6}, {"µm", 1e-6}, {"nm", 1e-9}};
  static const UnitTable time{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  static const UnitTable rate{{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"cps", 1.0}, {"/s", 1.0}, {"1/s", 1.0}};
  static const UnitTable angle{{"deg", 1.0}, {"rad", 180.0 / std::numbers::pi}};
  static const UnitTable attenuation{{"1/m", 1.0}, {"1/km", 1e-3},
                                     {"dB/km", std::numbers::ln10 / 10.0 / 1e3},
                                     {"dB/m", std::numbers::ln10 / 10.0}};
  static const UnitTable dimensionless{{"", 1.0}, {"%", 1e-2}};
  switch (q) {
    case Quantity::length: return length;
    case Quantity::time: return time;
    case Quantity::rate: return rate;
    case Quantity::angle: return angle;
    case Quantity::attenuation: return attenuation;
    case Quantity::dimensionless: return dimensionless;
  }
  return dimensionless;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string accepted(const UnitTable& table) {
  std::string out;
  for (const auto& [name, _] : table) {
    if (name.empty()) continue;
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

}  // namespace

double parse_quantity(std::string_view text, Quantity q) {
  const std::string_view s = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || !std::isfinite(value))
    throw std::invalid_argument("expected a number in '" + std::string(text) + "'");
  const std::string_view unit = trim(s.substr(static_cast<std::size_t>(end - s.data())));
  for (const auto& [name, scale] : units_for(q))
    if (unit == name) return value * scale;
  if (unit.empty())
    throw std::invalid_argument("missing unit in '" + std::string(text) + "' (expected one of " +
                                accepted(units_for(q)) + ")");
  throw std::invalid_argument("unknown unit '" + std::string(unit) + "' (expected one of " +
                              accepted(units_for(q)) + ")");
}

}  // namespace qillum
