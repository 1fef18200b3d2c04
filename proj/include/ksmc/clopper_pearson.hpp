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
#include <vector>

#include "ksmc/error.hpp"

namespace ksmc {

/// Exact Clopper-Pearson confidence interval for a binomial proportion.
/// The edge cases use the closed forms lo = (alpha/2)^(1/n) for k = n and
/// hi = 1 - (alpha/2)^(1/n) for k = 0; interior bounds come from bisection
/// on the binomial CDF, resolved well below 1e-9.

struct CpInterval {
  double lo = 0.0;
  double hi = 1.0;
};

namespace detail {

/// log(x!) with a memoized table for the small arguments the estimator
/// recomputes constantly.
inline double log_factorial(int64_t x) {
  constexpr int64_t kTable = 4096;
  static const std::vector<double> table = [] {
    std::vector<double> t(static_cast<std::size_t>(kTable));
    t[0] = 0.0;
    for (int64_t i = 1; i < kTable; ++i)
      t[static_cast<std::size_t>(i)] =
          t[static_cast<std::size_t>(i - 1)] + std::log(static_cast<double>(i));
    return t;
  }();
  if (x < kTable) return table[static_cast<std::size_t>(x)];
  return std::lgamma(static_cast<double>(x) + 1.0);
}

}  // namespace detail

/// P(X <= m) for X ~ Binomial(n, p), summed in log space.
inline double binomial_cdf(int64_t m, int64_t n, double p) {
  if (m < 0) return 0.0;
  if (m >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lg_n = detail::log_factorial(n);
  double sum = 0.0;
  for (int64_t j = 0; j <= m; ++j) {
    const double lterm = lg_n - detail::log_factorial(j) -
                         detail::log_factorial(n - j) +
                         static_cast<double>(j) * lp +
                         static_cast<double>(n - j) * lq;
    sum += std::exp(lterm);
  }
  return sum < 1.0 ? sum : 1.0;
}

inline CpInterval clopper_pearson(int64_t k, int64_t n, double alpha) {
  if (n < 1) throw DomainError("clopper_pearson requires n >= 1");
  if (k < 0 || k > n)
    throw DomainError("clopper_pearson requires 0 <= k <= n");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw DomainError("clopper_pearson requires alpha in (0, 1)");

  const double half = alpha / 2.0;
  CpInterval ci;

  if (k == 0) {
    ci.lo = 0.0;
  } else if (k == n) {
    ci.lo = std::pow(half, 1.0 / static_cast<double>(n));
  } else {
    // largest p with P(X >= k | p) <= alpha/2; the tail is increasing in p
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double upper_tail = 1.0 - binomial_cdf(k - 1, n, mid);
      (upper_tail < half ? lo : hi) = mid;
    }
    ci.lo = 0.5 * (lo + hi);
  }

  if (k == n) {
    ci.hi = 1.0;
  } else if (k == 0) {
    ci.hi = 1.0 - std::pow(half, 1.0 / static_cast<double>(n));
  } else {
    // smallest p with P(X <= k | p) <= alpha/2; the cdf is decreasing in p
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (binomial_cdf(k, n, mid) > half ? lo : hi) = mid;
    }
    ci.hi = 0.5 * (lo + hi);
  }
  return ci;
}

}  // namespace ksmc
