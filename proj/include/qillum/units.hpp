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

#include <string_view>

namespace qillum {

enum class Quantity { length, time, rate, angle, attenuation, dimensionless };

/// Parses "<number> <unit>" into SI (meters, seconds, 1/s, degrees for
/// angles, 1/m for attenuation). Dimensionful quantities require a unit;
/// dimensionless ones accept a bare number or a "%" suffix.
/// Throws std::invalid_argument with a message naming the accepted units.
double parse_quantity(std::string_view text, Quantity quantity);

}  // namespace qillum
