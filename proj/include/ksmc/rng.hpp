/*
 * Copyright 2026 The ksmc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "ksmc/error.hpp"

namespace ksmc {

/// Deterministic, splittable run seeding: run i draws from an mt19937_64
/// seeded by splitmix64 over (master seed, i). Outcomes depend only on the
/// pair, never on scheduling, so serial and parallel estimation agree
/// bit-for-bit. Distribution sampling is implemented here (not via
/// std::*_distribution) to keep the streams identical across standard
/// library implementations.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_run_seed(std::uint64_t master,
                                     std::uint64_t run_index) {
  std::uint64_t s = master;
  const std::uint64_t a = splitmix64(s);
  s ^= run_index * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull;
  const std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x6a09e667f3bcc909ull);
}

class RunRng {
 public:
  explicit RunRng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 significant bits.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential(double rate) {
    return -std::log1p(-uniform01()) / rate;
  }

  std::uint64_t bits() { return gen_(); }

  /// Uniform integer in [0, n).
  std::size_t pick(std::size_t n) {
    return static_cast<std::size_t>(gen_() % n);
  }

 private:
  std::mt19937_64 gen_;
};

/// Delay sampling for the race semantics: uniform over a bounded enabled
/// window, degenerate when the window is a point, shifted exponential when
/// no invariant bounds the wait.
inline double sample_delay(double lower, std::optional<double> upper,
                           RunRng& rng, double exp_rate = 1.0) {
  if (upper) {
    if (*upper < lower)
      throw DomainError("sample_delay requires lower <= upper");
    if (*upper == lower) return lower;
    return rng.uniform(lower, *upper);
  }
  if (!(exp_rate > 0.0))
    throw DomainError("exponential delay rate must be positive");
  return lower + rng.exponential(exp_rate);
}

}  // namespace ksmc
