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
#include <stdexcept>
#include <string>

namespace qillum {

/// Invalid experiment configuration or model parameters. Raised before any
/// sampling or analysis takes place.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A correlation parameter was requested from a setting with no coincidences.
class UndefinedCorrelationError : public std::runtime_error {
 public:
  UndefinedCorrelationError(const std::string& what, double alpha_deg, double beta_deg)
      : std::runtime_error(what), alpha_deg_(alpha_deg), beta_deg_(beta_deg) {}

  double alpha_deg() const { return alpha_deg_; }
  double beta_deg() const { return beta_deg_; }

 private:
  double alpha_deg_;
  double beta_deg_;
};

/// Time-tag input that violates the sortedness precondition.
class UnsortedStreamError : public std::invalid_argument {
 public:
  explicit UnsortedStreamError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed binary or CSV tag file; byte_offset points at the first bad byte.
class TagFormatError : public std::runtime_error {
 public:
  TagFormatError(const std::string& what, std::uint64_t byte_offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::uint64_t byte_offset() const { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

}  // namespace qillum
