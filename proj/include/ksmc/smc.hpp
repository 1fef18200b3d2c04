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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ksmc/clopper_pearson.hpp"
#include "ksmc/rng.hpp"
#include "ksmc/semantics.hpp"

namespace ksmc {

/// Statistical model checking over the hybrid network semantics. Each run
/// races the components: every instance that could initiate an edge inside
/// the invariant-bounded window samples a delay (uniform over its enabled
/// window, exponential when unbounded), the minimum wins, the flow advances
/// and the winning edge fires together with all enabled broadcast receivers.
/// Runs are deterministic functions of (master seed, run index).
///
/// Each race scans forward at most to the remaining query horizon. An
/// invariant bound lying beyond it is treated as absent for that race (the
/// wait samples exponentially); an enabled window whose bound sits past the
/// horizon is an approximation of the truncated uniform the full scan would
/// give, and can only occur when the binding invariant is farther away than
/// the whole remaining run.

struct RunConfig {
  double bound = 0.0;   // time horizon of the query
  double step = 0.0;    // integration step; 0 picks the default
  std::uint64_t seed = 1;
};

/// Events landing within this tolerance past the bound still fire, so that
/// landmarks scheduled exactly at the horizon survive boundary rounding.
inline constexpr double kBoundTol = 1e-9;

/// Default integration step: T*1e-4 of the fastest orbit, 1e-4 without
/// orbits.
inline double effective_step(const Network& net, const RunConfig& cfg) {
  if (cfg.step > 0.0) return cfg.step;
  double t_min = 0.0;
  for (const auto& o : net.orbits)
    if (t_min == 0.0 || o.T < t_min) t_min = o.T;
  return t_min > 0.0 ? t_min * 1e-4 : 1e-4;
}

struct TraceSample {
  double t = 0.0;
  std::vector<double> values;
  std::string event;  // fired channel(s), ';'-joined; empty between events
};

struct CiEstimate {
  std::int64_t successes = 0;
  std::int64_t runs = 0;
  double alpha = 0.05;
  double lo = 0.0;
  double hi = 1.0;
  std::string stopping_reason;  // "width" or "budget"
};

struct EstimateOptions {
  double alpha = 0.05;
  double target_width = 0.05;
  std::int64_t max_runs = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
};

namespace detail {

struct RaceScan {
  std::optional<double> bound_delay;  // invariant bound within the horizon
  std::vector<std::optional<double>> first_enable;  // per instance
};

/// True iff some internal or emit edge of the instance is enabled.
inline bool instance_can_initiate(const Network& net, const HybridState& base,
                                  std::size_t inst,
                                  const std::vector<double>& cont) {
  HybridState probe = base;  // locations/discrete fixed during a flow
  probe.cont = cont;
  const EvalCtx ctx = make_ctx(net, probe);
  const RtInstance& instance = net.instances[inst];
  for (const RtEdge& e : instance.edges) {
    if (e.src != base.loc[inst]) continue;
    if (e.has_sync() && !e.emit) continue;
    if (e.guard && !eval_bool(*e.guard, ctx)) continue;
    return true;
  }
  return false;
}

/// One forward scan computing the invariant-bounded maximal delay (capped at
/// `horizon`) and, per instance, the earliest time an initiating edge
/// becomes enabled. Enable times and the invariant boundary are refined by
/// bisection to kBoundaryTol.
inline RaceScan scan_race(const Network& net, const HybridState& s,
                          double step, double horizon) {
  RaceScan scan;
  const std::size_t n = net.instances.size();
  scan.first_enable.assign(n, std::nullopt);

  bool constrained = false;
  for (std::size_t i = 0; i < n; ++i) {
    const RtLocation& loc =
        net.instances[i].locs[static_cast<std::size_t>(s.loc[i])];
    if (loc.invariant && loc.invariant_on_cont) constrained = true;
  }

  std::size_t pending = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (instance_can_initiate(net, s, i, s.cont))
      scan.first_enable[i] = 0.0;
    else
      ++pending;
  }

  bool any_rate = false;
  for (std::size_t i = 0; i < n; ++i)
    if (!net.instances[i]
             .locs[static_cast<std::size_t>(s.loc[i])]
             .rates.empty())
      any_rate = true;
  // Static continuous state: nothing can change along the flow, so the
  // t = 0 evaluation already tells the whole story.
  if (!any_rate) return scan;
  if (!constrained && pending == 0) return scan;

  auto refine_enable = [&](std::size_t inst, double lo_t,
                           const std::vector<double>& lo_cont, double hi_t,
                           const std::vector<double>& hi_cont) {
    double lo = lo_t, hi = hi_t;
    std::vector<double> base = lo_cont;
    (void)hi_cont;
    while (hi - lo > kBoundaryTol) {
      const double mid = 0.5 * (lo + hi);
      std::vector<double> probe = cont_after(net, s, base, mid - lo, step);
      if (instance_can_initiate(net, s, inst, probe)) {
        hi = mid;
      } else {
        lo = mid;
        base = std::move(probe);
      }
    }
    scan.first_enable[inst] = hi;
  };

  double t = 0.0;
  std::vector<double> cont = s.cont;
  std::vector<double> prev = cont;
  while (t < horizon) {
    const double h = std::min(step, horizon - t);
    rk4_step(net, s, cont, h);
    const double t_next = t + h;

    if (constrained && !invariants_hold_at(net, s, cont)) {
      // Locate the boundary, then give pending instances a chance to enable
      // exactly at it.
      double lo = t, hi = t_next;
      std::vector<double> lo_cont = prev;
      while (hi - lo > kBoundaryTol) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> probe =
            cont_after(net, s, lo_cont, mid - lo, step);
        if (invariants_hold_at(net, s, probe)) {
          lo = mid;
          lo_cont = std::move(probe);
        } else {
          hi = mid;
        }
      }
      scan.bound_delay = lo;
      if (pending > 0) {
        for (std::size_t i = 0; i < n; ++i) {
          if (scan.first_enable[i]) continue;
          if (instance_can_initiate(net, s, i, lo_cont))
            refine_enable(i, t, prev, lo, lo_cont);
        }
      }
      return scan;
    }

    if (pending > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (scan.first_enable[i]) continue;
        if (instance_can_initiate(net, s, i, cont)) {
          refine_enable(i, t, prev, t_next, cont);
          --pending;
        }
      }
      if (!constrained && pending == 0) return scan;
    }
    prev = cont;
    t = t_next;
  }
  return scan;  // no invariant bound within the horizon
}

}  // namespace detail

/// Callback invoked at every integration step and after every fired event.
/// `event` is empty for plain flow samples.
using RunObserver =
    std::function<void(double t, const HybridState&, const std::string& event)>;

namespace detail {

inline std::string event_label(const Network& net, const Choice& c,
                               const HybridState& at) {
  const RtEdge& edge = net.instances[static_cast<std::size_t>(c.instance)]
                           .edges[static_cast<std::size_t>(c.edge)];
  if (!edge.has_sync())
    return net.instances[static_cast<std::size_t>(c.instance)].name;
  const ChannelInfo& ch = net.channels[static_cast<std::size_t>(edge.channel)];
  if (!edge.chan_index) return ch.name;
  const double idx = eval_num(*edge.chan_index, make_ctx(net, at));
  return ch.name + "[" + num_to_string(idx) + "]";
}

}  // namespace detail

/// Simulates one stochastic run. Returns the first time the goal held (the
/// goal is checked at t = 0, after every fired event and at every
/// integration step), or nullopt if the bound elapsed first. Deterministic
/// in (config.seed, run_index).
inline std::optional<double> simulate_run(const Network& net,
                                          const ExprPtr& goal,
                                          const RunConfig& cfg,
                                          std::uint64_t run_index,
                                          const RunObserver& observe = {}) {
  if (!(cfg.bound > 0.0)) throw DomainError("run bound must be positive");
  const double step = effective_step(net, cfg);
  RunRng rng(derive_run_seed(cfg.seed, run_index));

  HybridState state = initial_state(net);
  auto goal_holds = [&](const HybridState& s) {
    return goal && eval_bool(*goal, detail::make_ctx(net, s));
  };
  if (observe) observe(0.0, state, "");
  if (goal_holds(state)) return 0.0;

  // Flow d ahead with per-step observation and goal checks; returns a goal
  // hit time if the goal became true strictly inside the interval.
  auto flow_observed = [&](double d) -> std::optional<double> {
    double remaining = d;
    while (remaining > 0.0) {
      const double h = std::min(step, remaining);
      detail::rk4_step(net, state, state.cont, h);
      state.time += h;
      remaining -= h;
      if (observe) observe(state.time, state, "");
      if (goal_holds(state)) return state.time;
    }
    return std::nullopt;
  };

  int stall_guard = 0;
  while (true) {
    const double remaining = cfg.bound + kBoundTol - state.time;
    if (remaining < 0.0) return std::nullopt;

    const detail::RaceScan scan =
        detail::scan_race(net, state, step, remaining + step);

    struct Candidate {
      std::size_t instance;
      double delay;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < net.instances.size(); ++i) {
      if (!scan.first_enable[i]) continue;
      const RtLocation& loc =
          net.instances[i].locs[static_cast<std::size_t>(state.loc[i])];
      const double d = sample_delay(*scan.first_enable[i], scan.bound_delay,
                                    rng, loc.exp_rate);
      candidates.push_back({i, d});
    }

    if (candidates.empty()) {
      // Nobody can move inside the window: drift to the bound or to the
      // invariant boundary. A zero-width boundary with no mover is a
      // timelock.
      if (remaining <= 0.0) return std::nullopt;
      const double drift =
          scan.bound_delay ? std::min(*scan.bound_delay, remaining)
                           : remaining;
      if (drift <= 0.0) {
        if (scan.bound_delay && *scan.bound_delay <= 0.0)
          throw InternalError("timelock: invariant bound reached with no "
                              "enabled transition at t = " +
                              detail::num_to_string(state.time));
        return std::nullopt;
      }
      if (auto hit = flow_observed(drift)) return hit;
      if (!scan.bound_delay) return std::nullopt;
      continue;
    }

    double best = candidates.front().delay;
    for (const auto& c : candidates) best = std::min(best, c.delay);
    std::vector<std::size_t> winners;
    for (const auto& c : candidates)
      if (c.delay == best) winners.push_back(c.instance);
    const std::size_t winner =
        winners.size() == 1 ? winners.front()
                            : winners[rng.pick(winners.size())];

    if (state.time + best > cfg.bound + kBoundTol) {
      if (auto hit = flow_observed(remaining)) return hit;
      return std::nullopt;
    }

    if (best > 0.0) {
      if (auto hit = flow_observed(best)) return hit;
      if (!detail::invariants_hold(net, state))
        throw InternalError(
            "step failed to bracket an invariant boundary at t = " +
            detail::num_to_string(state.time));
      stall_guard = 0;
    } else if (++stall_guard > 10000) {
      throw InternalError("no progress in the race at t = " +
                          detail::num_to_string(state.time));
    }

    // Fire one enabled initiating edge of the winner (re-evaluated after the
    // flow; a guard may have closed, in which case the race is rerun).
    std::vector<Choice> all = enabled_edges(net, state);
    std::vector<Choice> mine;
    for (auto& c : all)
      if (static_cast<std::size_t>(c.instance) == winner)
        mine.push_back(std::move(c));
    if (mine.empty()) continue;
    const Choice& choice =
        mine.size() == 1 ? mine.front() : mine[rng.pick(mine.size())];
    state = fire(net, state, choice);
    if (observe) observe(state.time, state, detail::event_label(net, choice, state));
    if (goal_holds(state)) return state.time;
  }
}

/// One run's observable samples at every integration step and every event
/// instant. Rows are strictly increasing in t; simultaneous events merge
/// into one row with ';'-joined labels and post-event values.
inline std::vector<TraceSample> trace(const Network& net, double bound,
                                      const std::vector<ExprPtr>& observables,
                                      const RunConfig& cfg,
                                      std::uint64_t run_index = 0) {
  std::vector<TraceSample> rows;
  RunConfig run_cfg = cfg;
  run_cfg.bound = bound;
  const RunObserver observer = [&](double t, const HybridState& s,
                                   const std::string& event) {
    TraceSample row;
    row.t = t;
    const EvalCtx ctx = detail::make_ctx(net, s);
    row.values.reserve(observables.size());
    for (const auto& obs : observables)
      row.values.push_back(eval_num(*obs, ctx));
    row.event = event;
    if (!rows.empty() && rows.back().t == t) {
      std::string merged = rows.back().event;
      if (!event.empty())
        merged = merged.empty() ? event : merged + ";" + event;
      row.event = std::move(merged);
      rows.back() = std::move(row);
    } else {
      rows.push_back(std::move(row));
    }
  };
  simulate_run(net, nullptr, run_cfg, run_index, observer);
  return rows;
}

/// Sequential Clopper-Pearson estimation over an arbitrary per-run success
/// function: after each run (aggregated strictly in run-index order,
/// whatever the worker count) the interval is recomputed; the first n whose
/// width reaches target_width stops, else the run budget does.
inline CiEstimate estimate_bernoulli(
    const std::function<bool(std::int64_t)>& run_success,
    const EstimateOptions& opt) {
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0))
    throw DomainError("alpha must lie in (0, 1)");
  if (!(opt.target_width > 0.0 && opt.target_width <= 1.0))
    throw DomainError("target width must lie in (0, 1]");
  if (opt.max_runs < 1) throw DomainError("max_runs must be at least 1");

  const int workers = std::max(1, opt.workers);
  CiEstimate est;
  est.alpha = opt.alpha;

  std::int64_t done = 0;
  while (done < opt.max_runs) {
    const std::int64_t wave =
        std::min<std::int64_t>(opt.max_runs - done,
                               std::max<std::int64_t>(16, workers * 8));
    std::vector<char> outcome(static_cast<std::size_t>(wave), 0);
    if (workers == 1) {
      for (std::int64_t i = 0; i < wave; ++i)
        outcome[static_cast<std::size_t>(i)] = run_success(done + i) ? 1 : 0;
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(
          static_cast<std::size_t>(workers));
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::int64_t i = w; i < wave; i += workers)
              outcome[static_cast<std::size_t>(i)] =
                  run_success(done + i) ? 1 : 0;
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    }
    for (std::int64_t i = 0; i < wave; ++i) {
      est.successes += outcome[static_cast<std::size_t>(i)];
      est.runs += 1;
      const CpInterval ci =
          clopper_pearson(est.successes, est.runs, opt.alpha);
      est.lo = ci.lo;
      est.hi = ci.hi;
      if (ci.hi - ci.lo <= opt.target_width) {
        est.stopping_reason = "width";
        return est;
      }
    }
    done += wave;
  }
  est.stopping_reason = "budget";
  return est;
}

/// Probabilistic bounded reachability: Pr[<= bound](<> goal) estimated from
/// independent runs with Clopper-Pearson sequential stopping.
inline CiEstimate estimate_probability(const Network& net, const ExprPtr& goal,
                                       double bound,
                                       const EstimateOptions& opt,
                                       double step = 0.0) {
  RunConfig cfg;
  cfg.bound = bound;
  cfg.step = step;
  cfg.seed = opt.seed;
  const auto run = [&](std::int64_t index) {
    return simulate_run(net, goal, cfg, static_cast<std::uint64_t>(index))
        .has_value();
  };
  return estimate_bernoulli(run, opt);
}

}  // namespace ksmc
