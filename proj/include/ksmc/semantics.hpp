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
#include <string>
#include <utility>
#include <vector>

#include "ksmc/error.hpp"
#include "ksmc/expr.hpp"
#include "ksmc/network.hpp"

namespace ksmc {

/// Single-step operational semantics for networks of hybrid timed automata:
/// edge enabledness with broadcast receiver matching, edge firing, ODE flow
/// under the active locations' rate maps, and invariant-bounded maximal
/// delays. All operations take a state in and return a new state; the
/// Network is shared immutably.
///
/// Update ordering on a broadcast is total: the emitter's updates apply
/// first, then each receiver's in instance declaration order. Per-location
/// rate contributions to a shared continuous variable sum.

struct HybridState {
  std::vector<int32_t> loc;   // location index per instance
  std::vector<int64_t> disc;  // flattened discrete valuation
  std::vector<double> cont;   // flattened continuous valuation
  double time = 0.0;
};

/// One fireable transition: an internal or emit edge, plus the receiver set
/// that joins a broadcast (per receiving instance, the first enabled
/// matching edge in declaration order).
struct Choice {
  int instance = -1;
  int edge = -1;
  std::vector<std::pair<int, int>> receivers;  // (instance, edge)
};

/// Bisection width for locating invariant boundaries and guard enabling
/// times. Chosen so the induced anomaly error stays well below the model
/// guards' kAngleEps margin.
inline constexpr double kBoundaryTol = 1e-12;

namespace detail {

inline EvalCtx make_ctx(const Network& net, const HybridState& s) {
  return EvalCtx{std::span<const int32_t>(s.loc),
                 std::span<const int64_t>(s.disc),
                 std::span<const double>(s.cont), &net.orbits};
}

/// Index of the first instance whose current location invariant fails,
/// paired with the location; -1 when all invariants hold.
inline std::pair<int, int> first_invariant_violation(const Network& net,
                                                     const HybridState& s) {
  const EvalCtx ctx = make_ctx(net, s);
  for (std::size_t i = 0; i < net.instances.size(); ++i) {
    const RtLocation& loc =
        net.instances[i].locs[static_cast<std::size_t>(s.loc[i])];
    if (loc.invariant && !eval_bool(*loc.invariant, ctx))
      return {static_cast<int>(i), s.loc[i]};
  }
  return {-1, -1};
}

inline bool invariants_hold(const Network& net, const HybridState& s) {
  return first_invariant_violation(net, s).first < 0;
}

/// Time derivative of the continuous valuation under the active locations.
inline void derivatives(const Network& net, const HybridState& s,
                        const std::vector<double>& cont,
                        std::vector<double>& out) {
  out.assign(cont.size(), 0.0);
  EvalCtx ctx{std::span<const int32_t>(s.loc),
              std::span<const int64_t>(s.disc),
              std::span<const double>(cont), &net.orbits};
  for (std::size_t i = 0; i < net.instances.size(); ++i) {
    const RtLocation& loc =
        net.instances[i].locs[static_cast<std::size_t>(s.loc[i])];
    for (const auto& [slot, rate] : loc.rates)
      out[static_cast<std::size_t>(slot)] += eval_num(*rate, ctx);
  }
}

/// One classical RK4 step of size h applied in place.
inline void rk4_step(const Network& net, const HybridState& s,
                     std::vector<double>& cont, double h) {
  static thread_local std::vector<double> k1, k2, k3, k4, tmp;
  derivatives(net, s, cont, k1);
  tmp.resize(cont.size());
  for (std::size_t i = 0; i < cont.size(); ++i)
    tmp[i] = cont[i] + 0.5 * h * k1[i];
  derivatives(net, s, tmp, k2);
  for (std::size_t i = 0; i < cont.size(); ++i)
    tmp[i] = cont[i] + 0.5 * h * k2[i];
  derivatives(net, s, tmp, k3);
  for (std::size_t i = 0; i < cont.size(); ++i) tmp[i] = cont[i] + h * k3[i];
  derivatives(net, s, tmp, k4);
  for (std::size_t i = 0; i < cont.size(); ++i)
    cont[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Continuous valuation after flowing dt from `from` (single partial RK4
/// step when dt is below the step size). Used by the bisection refinements.
inline std::vector<double> cont_after(const Network& net,
                                      const HybridState& s,
                                      const std::vector<double>& from,
                                      double dt, double step) {
  std::vector<double> cont = from;
  double remaining = dt;
  while (remaining > 0.0) {
    const double h = remaining < step ? remaining : step;
    rk4_step(net, s, cont, h);
    remaining -= h;
  }
  return cont;
}

inline bool invariants_hold_at(const Network& net, const HybridState& s,
                               const std::vector<double>& cont) {
  HybridState probe = s;
  probe.cont = cont;
  return invariants_hold(net, probe);
}

}  // namespace detail

/// Initial state of a network: every instance at its initial location,
/// variables at their declared initial values, time zero. Rejects networks
/// without instances and initial valuations that violate an invariant.
inline HybridState initial_state(const Network& net) {
  if (net.instances.empty()) throw ValidationError("no instances");
  HybridState s;
  s.loc.reserve(net.instances.size());
  for (const auto& inst : net.instances)
    s.loc.push_back(static_cast<int32_t>(inst.init_loc));
  s.disc = net.disc_init;
  s.cont = net.cont_init;
  s.time = 0.0;
  const auto [bad_inst, bad_loc] = detail::first_invariant_violation(net, s);
  if (bad_inst >= 0)
    throw InvariantError(
        "initial state violates invariant '" +
            expr_to_string(net.instances[static_cast<std::size_t>(bad_inst)]
                               .locs[static_cast<std::size_t>(bad_loc)]
                               .invariant) +
            "' of instance '" +
            net.instances[static_cast<std::size_t>(bad_inst)].name + "'",
        net.instances[static_cast<std::size_t>(bad_inst)].name, 0.0);
  return s;
}

/// All currently fireable transitions. An edge is listed iff its guard holds
/// and it is internal or a broadcast emit; broadcast emits never block, so
/// they are listed even with an empty receiver set. Receive edges appear
/// only inside the receiver sets of matching emits.
inline std::vector<Choice> enabled_edges(const Network& net,
                                         const HybridState& s) {
  const EvalCtx ctx = detail::make_ctx(net, s);
  std::vector<Choice> out;

  auto chan_index_of = [&](const RtEdge& e) -> int {
    if (!e.chan_index) return -1;
    const double raw = eval_num(*e.chan_index, ctx);
    const double rounded = std::nearbyint(raw);
    if (std::abs(raw - rounded) > 1e-9)
      throw EvalError("non-integral channel index");
    const int idx = static_cast<int>(rounded);
    const auto& ch = net.channels[static_cast<std::size_t>(e.channel)];
    if (idx < 0 || (ch.arity && idx >= *ch.arity))
      throw EvalError("channel index " + std::to_string(idx) +
                      " out of range for '" + ch.name + "'");
    return idx;
  };

  for (std::size_t i = 0; i < net.instances.size(); ++i) {
    const RtInstance& inst = net.instances[i];
    for (std::size_t e = 0; e < inst.edges.size(); ++e) {
      const RtEdge& edge = inst.edges[e];
      if (edge.src != s.loc[i]) continue;
      if (edge.has_sync() && !edge.emit) continue;  // receivers never initiate
      if (edge.guard && !eval_bool(*edge.guard, ctx)) continue;
      Choice c;
      c.instance = static_cast<int>(i);
      c.edge = static_cast<int>(e);
      if (edge.has_sync() && edge.emit) {
        const int idx = chan_index_of(edge);
        for (std::size_t j = 0; j < net.instances.size(); ++j) {
          if (j == i) continue;
          const RtInstance& other = net.instances[j];
          for (std::size_t f = 0; f < other.edges.size(); ++f) {
            const RtEdge& rec = other.edges[f];
            if (rec.src != s.loc[j] || !rec.has_sync() || rec.emit ||
                rec.channel != edge.channel)
              continue;
            if (rec.chan_index && chan_index_of(rec) != idx) continue;
            if (rec.guard && !eval_bool(*rec.guard, ctx)) continue;
            c.receivers.emplace_back(static_cast<int>(j), static_cast<int>(f));
            break;  // one receive edge per instance, declaration order
          }
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

namespace detail {

inline void apply_updates(const Network& net, HybridState& s,
                          const RtEdge& edge) {
  for (const auto& up : edge.updates) {
    // Evaluate against the partially updated state: assignments are ordered.
    const EvalCtx ctx = make_ctx(net, s);
    int offset = 0;
    if (up.index) {
      const double raw = eval_num(*up.index, ctx);
      const double rounded = std::nearbyint(raw);
      if (std::abs(raw - rounded) > 1e-9 || rounded < 0.0 ||
          rounded >= static_cast<double>(up.size))
        throw EvalError("update index out of range for '" + up.display + "'");
      offset = static_cast<int>(rounded);
    }
    const double value = eval_num(*up.value, ctx);
    if (up.continuous) {
      s.cont[static_cast<std::size_t>(up.base + offset)] = value;
    } else {
      const double rounded = std::nearbyint(value);
      if (std::abs(value - rounded) > 1e-9)
        throw EvalError("non-integral value " + num_to_string(value) +
                        " assigned to discrete variable '" + up.display + "'");
      s.disc[static_cast<std::size_t>(up.base + offset)] =
          static_cast<int64_t>(rounded);
    }
  }
}

}  // namespace detail

/// Fires a choice previously obtained from enabled_edges on this state.
/// Emitter updates apply first, then each receiver's in instance order;
/// locations advance; time is unchanged. The resulting state must satisfy
/// all invariants, otherwise InvariantError names the offender.
inline HybridState fire(const Network& net, const HybridState& s,
                        const Choice& choice) {
  const RtInstance& inst =
      net.instances[static_cast<std::size_t>(choice.instance)];
  const RtEdge& edge = inst.edges[static_cast<std::size_t>(choice.edge)];
  {
    const EvalCtx ctx = detail::make_ctx(net, s);
    if (edge.src != s.loc[static_cast<std::size_t>(choice.instance)])
      throw Error("stale choice: instance '" + inst.name +
                  "' is no longer at the edge source");
    if (edge.guard && !eval_bool(*edge.guard, ctx))
      throw Error("stale choice: guard '" + expr_to_string(edge.guard) +
                  "' of instance '" + inst.name + "' is not enabled");
    for (const auto& [ri, re] : choice.receivers) {
      const RtEdge& rec = net.instances[static_cast<std::size_t>(ri)]
                              .edges[static_cast<std::size_t>(re)];
      if (rec.src != s.loc[static_cast<std::size_t>(ri)] ||
          (rec.guard && !eval_bool(*rec.guard, ctx)))
        throw Error("stale choice: receiver of instance '" +
                    net.instances[static_cast<std::size_t>(ri)].name +
                    "' is not enabled");
    }
  }

  HybridState next = s;
  detail::apply_updates(net, next, edge);
  next.loc[static_cast<std::size_t>(choice.instance)] =
      static_cast<int32_t>(edge.dst);
  for (const auto& [ri, re] : choice.receivers) {
    const RtEdge& rec = net.instances[static_cast<std::size_t>(ri)]
                            .edges[static_cast<std::size_t>(re)];
    detail::apply_updates(net, next, rec);
    next.loc[static_cast<std::size_t>(ri)] = static_cast<int32_t>(rec.dst);
  }

  const auto [bad_inst, bad_loc] = detail::first_invariant_violation(net, next);
  if (bad_inst >= 0) {
    const auto& bi = net.instances[static_cast<std::size_t>(bad_inst)];
    throw InvariantError(
        "invariant '" +
            expr_to_string(bi.locs[static_cast<std::size_t>(bad_loc)].invariant) +
            "' of instance '" + bi.name + "' violated by update",
        bi.name, 0.0);
  }
  return next;
}

/// Integrates the continuous variables forward by dt (fixed-step RK4 with a
/// final partial step), keeping discrete state fixed and advancing time.
/// If an invariant fails anywhere in (0, dt], throws InvariantError carrying
/// the bisection-refined violation boundary (absolute time).
inline HybridState flow(const Network& net, const HybridState& s, double dt,
                        double step) {
  if (dt < 0.0) throw DomainError("flow requires dt >= 0");
  if (!(step > 0.0)) throw DomainError("flow requires step > 0");
  HybridState next = s;
  if (dt == 0.0) return next;

  auto fail_at = [&](const std::vector<double>& last_ok, double t_ok,
                     double t_bad) -> void {
    // Shrink [t_ok, t_bad] around the boundary; report the violating side.
    double lo = t_ok, hi = t_bad;
    std::vector<double> lo_cont = last_ok;
    while (hi - lo > kBoundaryTol) {
      const double mid = 0.5 * (lo + hi);
      std::vector<double> probe =
          detail::cont_after(net, s, lo_cont, mid - lo, step);
      if (detail::invariants_hold_at(net, s, probe)) {
        lo = mid;
        lo_cont = std::move(probe);
      } else {
        hi = mid;
      }
    }
    HybridState bad = s;
    bad.cont = detail::cont_after(net, s, lo_cont, hi - lo, step);
    auto [bi, bl] = detail::first_invariant_violation(net, bad);
    if (bi < 0) bi = 0, bl = s.loc.empty() ? 0 : s.loc[0];
    const auto& inst = net.instances[static_cast<std::size_t>(bi)];
    throw InvariantError(
        "invariant '" +
            expr_to_string(inst.locs[static_cast<std::size_t>(bl)].invariant) +
            "' of instance '" + inst.name + "' violated at t = " +
            detail::num_to_string(s.time + hi),
        inst.name, s.time + hi);
  };

  if (!detail::invariants_hold(net, next))
    throw InvariantError("flow started from an invariant-violating state", "",
                         s.time);

  double done = 0.0;
  std::vector<double> prev = next.cont;
  while (done < dt) {
    const double h = (dt - done) < step ? (dt - done) : step;
    detail::rk4_step(net, next, next.cont, h);
    done += h;
    if (!detail::invariants_hold_at(net, next, next.cont))
      fail_at(prev, done - h, done);
    prev = next.cont;
  }
  next.time = s.time + dt;
  return next;
}

/// Supremum delay from this state that keeps every location invariant
/// satisfied, located by fixed-step scanning plus bisection; the returned
/// value is always a validated delay (flowing exactly that far succeeds).
/// Returns nullopt when no active invariant constrains time, or when no
/// bound was found within max_scan_steps integration steps.
inline std::optional<double> max_delay(const Network& net,
                                       const HybridState& s, double step,
                                       std::size_t max_scan_steps = 1000000) {
  if (!(step > 0.0)) throw DomainError("max_delay requires step > 0");
  bool constrained = false;
  for (std::size_t i = 0; i < net.instances.size(); ++i) {
    const RtLocation& loc =
        net.instances[i].locs[static_cast<std::size_t>(s.loc[i])];
    if (loc.invariant && loc.invariant_on_cont) constrained = true;
  }
  if (!constrained) return std::nullopt;

  std::vector<double> cont = s.cont;
  std::vector<double> prev = cont;
  double t = 0.0;
  for (std::size_t k = 0; k < max_scan_steps; ++k) {
    detail::rk4_step(net, s, cont, step);
    const double t_next = t + step;
    if (!detail::invariants_hold_at(net, s, cont)) {
      // Bisect (t, t_next]; keep the last point where invariants still hold.
      double lo = t, hi = t_next;
      std::vector<double> lo_cont = prev;
      while (hi - lo > kBoundaryTol) {
        const double mid = 0.5 * (lo + hi);
        std::vector<double> probe =
            detail::cont_after(net, s, lo_cont, mid - lo, step);
        if (detail::invariants_hold_at(net, s, probe)) {
          lo = mid;
          lo_cont = std::move(probe);
        } else {
          hi = mid;
        }
      }
      return lo;
    }
    prev = cont;
    t = t_next;
  }
  return std::nullopt;
}

}  // namespace ksmc
