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
#include "ksmc/smc.hpp"

#include <cmath>

#include <doctest.h>

#include "ksmc/cfl.hpp"
#include "ksmc/clopper_pearson.hpp"
#include "ksmc/query.hpp"

using namespace ksmc;

namespace {

/// Independent Clopper-Pearson oracle: binomial CDF by the multiplicative
/// pmf recurrence carried in log space (no gamma functions), bisected for
/// both bounds.
double oracle_cdf(int64_t m, int64_t n, double p) {
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return m >= n ? 1.0 : 0.0;
  double log_pmf = static_cast<double>(n) * std::log1p(-p);
  const double lratio = std::log(p) - std::log1p(-p);
  double sum = std::exp(log_pmf);
  for (int64_t j = 0; j < m; ++j) {
    log_pmf += std::log(static_cast<double>(n - j)) -
               std::log(static_cast<double>(j + 1)) + lratio;
    sum += std::exp(log_pmf);
  }
  return sum;
}

CpInterval oracle_cp(int64_t k, int64_t n, double alpha) {
  CpInterval ci;
  if (k == 0) {
    ci.lo = 0.0;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (1.0 - oracle_cdf(k - 1, n, mid) < alpha / 2 ? lo : hi) = mid;
    }
    ci.lo = 0.5 * (lo + hi);
  }
  if (k == n) {
    ci.hi = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (oracle_cdf(k, n, mid) > alpha / 2 ? lo : hi) = mid;
    }
    ci.hi = 0.5 * (lo + hi);
  }
  return ci;
}

ExprPtr server_send_goal(const Network& net) {
  return bind_query_expr(make_dot("server", "send"), net);
}

}  // namespace

TEST_CASE("clopper_pearson reproduces the 72/72 interval") {
  const CpInterval ci = clopper_pearson(72, 72, 0.05);
  CHECK(ci.hi == 1.0);
  CHECK(ci.lo == doctest::Approx(0.9500559157).epsilon(1e-9));
  // lower bound is the closed form (alpha/2)^(1/n)
  CHECK(ci.lo == std::pow(0.025, 1.0 / 72.0));

  const CpInterval none = clopper_pearson(0, 72, 0.05);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == doctest::Approx(0.0499440843).epsilon(1e-9));

  const CpInterval half = clopper_pearson(1, 2, 0.05);
  CHECK(half.lo < 0.5);
  CHECK(half.hi > 0.5);
  const CpInterval oracle = oracle_cp(1, 2, 0.05);
  CHECK(half.lo == doctest::Approx(oracle.lo).epsilon(1e-9));
  CHECK(half.hi == doctest::Approx(oracle.hi).epsilon(1e-9));

  CHECK_THROWS_AS(clopper_pearson(1, 0, 0.05), DomainError);
  CHECK_THROWS_AS(clopper_pearson(3, 2, 0.05), DomainError);
  CHECK_THROWS_AS(clopper_pearson(-1, 2, 0.05), DomainError);
  CHECK_THROWS_AS(clopper_pearson(1, 2, 0.0), DomainError);
}

TEST_CASE("clopper_pearson agrees with the brute-force oracle for n <= 50") {
  for (int64_t n = 1; n <= 50; ++n) {
    for (int64_t k = 0; k <= n; ++k) {
      const CpInterval got = clopper_pearson(k, n, 0.05);
      const CpInterval want = oracle_cp(k, n, 0.05);
      CAPTURE(k);
      CAPTURE(n);
      CHECK(std::abs(got.lo - want.lo) <= 1e-9);
      CHECK(std::abs(got.hi - want.hi) <= 1e-9);
      const double phat =
          static_cast<double>(k) / static_cast<double>(n);
      CHECK(got.lo <= phat + 1e-12);
      CHECK(got.hi >= phat - 1e-12);
    }
  }
}

TEST_CASE("closed-form edges match bisection for n up to 200") {
  for (int64_t n = 1; n <= 200; ++n) {
    const CpInterval full = clopper_pearson(n, n, 0.05);
    const CpInterval empty = clopper_pearson(0, n, 0.05);
    const double closed = std::pow(0.025, 1.0 / static_cast<double>(n));
    CHECK(std::abs(full.lo - closed) <= 1e-12);
    CHECK(full.hi == 1.0);
    CHECK(empty.lo == 0.0);
    CHECK(std::abs(empty.hi - (1.0 - closed)) <= 1e-12);
    // bisection route (oracle) agrees with the closed form
    const CpInterval o = oracle_cp(n, n, 0.05);
    CHECK(std::abs(o.lo - closed) <= 1e-9);
  }
}

TEST_CASE("sample_delay distributions") {
  RunRng rng(7);
  CHECK(sample_delay(0.5, 0.5, rng) == 0.5);

  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += sample_delay(0.0, 1.0, rng);
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.02));

  sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += sample_delay(2.0, std::nullopt, rng);
  CHECK(sum / 100000.0 == doctest::Approx(3.0).epsilon(0.01));

  sum = 0.0;
  for (int i = 0; i < 100000; ++i)
    sum += sample_delay(0.0, std::nullopt, rng, 2.0);
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.02));

  CHECK_THROWS_AS(sample_delay(1.0, 0.5, rng), DomainError);
}

TEST_CASE("the all-success stream stops at exactly 72 runs") {
  // width at n=71 is above the target, at n=72 at or below it
  const CpInterval at71 = clopper_pearson(71, 71, 0.05);
  const CpInterval at72 = clopper_pearson(72, 72, 0.05);
  CHECK(at71.hi - at71.lo == doctest::Approx(0.0506294).epsilon(1e-5));
  CHECK(at71.hi - at71.lo > 0.05);
  CHECK(at72.hi - at72.lo <= 0.05);

  EstimateOptions opt;
  opt.alpha = 0.05;
  opt.target_width = 0.05;
  opt.max_runs = 1000;
  const CiEstimate all = estimate_bernoulli([](std::int64_t) { return true; },
                                            opt);
  CHECK(all.runs == 72);
  CHECK(all.successes == 72);
  CHECK(all.stopping_reason == "width");
  CHECK(all.lo == doctest::Approx(0.9500559157).epsilon(1e-9));
  CHECK(all.hi == 1.0);

  // all-failure stream stops symmetrically with the mirrored interval
  const CiEstimate none = estimate_bernoulli([](std::int64_t) { return false; },
                                             opt);
  CHECK(none.runs == 72);
  CHECK(none.successes == 0);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == doctest::Approx(0.0499440843).epsilon(1e-9));
}

TEST_CASE("estimator stopping corner cases") {
  EstimateOptions wide;
  wide.target_width = 1.0;
  const CiEstimate one = estimate_bernoulli([](std::int64_t) { return true; },
                                            wide);
  CHECK(one.runs == 1);
  CHECK(one.stopping_reason == "width");

  EstimateOptions tight;
  tight.target_width = 0.01;
  tight.max_runs = 10;
  const CiEstimate budget = estimate_bernoulli(
      [](std::int64_t) { return true; }, tight);
  CHECK(budget.runs == 10);
  CHECK(budget.stopping_reason == "budget");

  EstimateOptions bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(estimate_bernoulli([](std::int64_t) { return true; }, bad),
                  DomainError);
}

TEST_CASE("default scenario hits server.send at t = 2 in every run") {
  const Network net = stochastic_cfl(default_scenario());
  const ExprPtr goal = server_send_goal(net);

  RunConfig cfg;
  cfg.bound = 3.0;
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    cfg.seed = seed;
    for (std::uint64_t run = 0; run < 3; ++run) {
      const auto hit = simulate_run(net, goal, cfg, run);
      REQUIRE(hit.has_value());
      CHECK(*hit == doctest::Approx(2.0).epsilon(1e-6));
    }
  }

  // the server only reaches send at 2T, so a 1.5 bound never hits
  cfg.bound = 1.5;
  cfg.seed = 1;
  for (std::uint64_t run = 0; run < 5; ++run)
    CHECK_FALSE(simulate_run(net, goal, cfg, run).has_value());
}

TEST_CASE("a 1.5 bound yields the mirrored all-failure interval") {
  const Network net = stochastic_cfl(default_scenario());
  const ExprPtr goal = server_send_goal(net);
  EstimateOptions opt;
  opt.max_runs = 200;
  const CiEstimate est = estimate_probability(net, goal, 1.5, opt);
  CHECK(est.successes == 0);
  CHECK(est.runs == 72);  // symmetric stopping on the all-failure stream
  CHECK(est.lo == 0.0);
  CHECK(est.hi == doctest::Approx(0.049944).epsilon(1e-5));
}

TEST_CASE("estimate_probability reproduces the 72/72 reference interval") {
  const Network net = stochastic_cfl(default_scenario());
  const ExprPtr goal = server_send_goal(net);
  EstimateOptions opt;
  opt.alpha = 0.05;
  opt.target_width = 0.05;
  opt.max_runs = 200;
  opt.seed = 42;
  const CiEstimate est = estimate_probability(net, goal, 3.0, opt);
  CHECK(est.runs == 72);
  CHECK(est.successes == 72);
  CHECK(est.lo == doctest::Approx(0.950056).epsilon(1e-6));
  CHECK(est.hi == 1.0);
  CHECK(est.stopping_reason == "width");
}

TEST_CASE("parallel estimation is bit-identical to serial") {
  const Network net = stochastic_cfl(default_scenario());
  const ExprPtr goal = server_send_goal(net);
  EstimateOptions opt;
  opt.target_width = 0.2;  // stops after 17 all-success runs
  opt.max_runs = 64;
  opt.seed = 7;

  opt.workers = 1;
  const CiEstimate serial = estimate_probability(net, goal, 3.0, opt);
  opt.workers = 8;
  const CiEstimate parallel = estimate_probability(net, goal, 3.0, opt);

  CHECK(serial.runs == parallel.runs);
  CHECK(serial.successes == parallel.successes);
  CHECK(serial.lo == parallel.lo);
  CHECK(serial.hi == parallel.hi);
  CHECK(serial.stopping_reason == parallel.stopping_reason);
}

TEST_CASE("sequential CP intervals cover an injected Bernoulli(0.7)") {
  // budget-stopped estimation at n = 150 over 500 independent estimator
  // invocations; the 95% interval must contain 0.7 in at least 93%.
  int covered = 0;
  for (int invocation = 0; invocation < 500; ++invocation) {
    EstimateOptions opt;
    opt.alpha = 0.05;
    opt.target_width = 0.01;  // unreachable at this budget
    opt.max_runs = 150;
    const std::uint64_t base =
        derive_run_seed(0xB00Full, static_cast<std::uint64_t>(invocation));
    const CiEstimate est = estimate_bernoulli(
        [&](std::int64_t run) {
          RunRng rng(derive_run_seed(base, static_cast<std::uint64_t>(run)));
          return rng.uniform01() < 0.7;
        },
        opt);
    CHECK(est.stopping_reason == "budget");
    if (est.lo <= 0.7 && 0.7 <= est.hi) ++covered;
  }
  CHECK(covered >= 465);  // 93% of 500
}

TEST_CASE("trace rows are strictly increasing and flag events") {
  const Network net = stochastic_cfl(default_scenario());
  std::vector<ExprPtr> obs = {
      bind_query_expr(make_name("nus", make_num(0)), net),
      bind_query_expr(make_name("nus", make_num(1)), net),
      bind_query_expr(make_dot("server", "loc"), net)};
  RunConfig cfg;
  cfg.seed = 5;
  const auto rows = trace(net, 1.2, obs, cfg);
  REQUIRE(rows.size() > 100);
  CHECK(rows.front().t == 0.0);
  CHECK(rows.front().values[0] == doctest::Approx(std::numbers::pi));
  CHECK(rows.front().values[1] == 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].t > rows[i - 1].t);

  // identical config and seed reproduce the trace bit for bit
  const auto again = trace(net, 1.2, obs, cfg);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].t == rows[i].t);
    CHECK(again[i].values == rows[i].values);
    CHECK(again[i].event == rows[i].event);
  }

  // the t=0 row carries the urgent role-branch events, t=0.5 the first
  // periapsis broadcast plus the forwarded task
  CHECK(rows.front().event.find("server") != std::string::npos);
  bool saw_reset0 = false;
  for (const auto& row : rows) {
    if (row.event.find("reset[0]") != std::string::npos) {
      saw_reset0 = true;
      CHECK(row.t == doctest::Approx(0.5).epsilon(1e-6));
      CHECK(row.event.find("ch2client[0]") != std::string::npos);
    }
  }
  CHECK(saw_reset0);
}
