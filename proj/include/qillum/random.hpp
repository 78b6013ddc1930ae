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
#include <random>

namespace qillum {

/// Seedable random source with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions below are written out by hand because the
/// std:: distribution objects are implementation-defined and would make
/// simulated streams differ between standard libraries.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  /// Independent sub-stream derived from (seed, stream) through std::seed_seq.
  RandomSource(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }

  double exponential(double mean);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a seed and a stream index into a new 64-bit seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace qillum
