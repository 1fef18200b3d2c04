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
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "ksmc/error.hpp"
#include "ksmc/semantics.hpp"

namespace ksmc {

/// Exhaustive explicit-state verification of the untimed fragment: breadth-
/// first reachability over broadcast-synchronized successors, deadlock
/// detection with accepting-terminal exemption, and liveness (every maximal
/// path reaches the goal) via cycle plus dead-end analysis on the goal-
/// absorbed graph.

struct DiscreteState {
  std::vector<int32_t> loc;
  std::vector<int64_t> disc;

  bool operator==(const DiscreteState& o) const {
    return loc == o.loc && disc == o.disc;
  }
};

struct DiscreteStateHash {
  std::size_t operator()(const DiscreteState& s) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (i * 8)) & 0xff;
        h *= 1099511628211ull;
      }
    };
    for (int32_t l : s.loc) mix(static_cast<std::uint64_t>(l));
    for (int64_t d : s.disc) mix(static_cast<std::uint64_t>(d));
    return static_cast<std::size_t>(h);
  }
};

struct Transition {
  Choice choice;
  int target = -1;
};

struct ReachGraph {
  std::vector<DiscreteState> states;  // index 0 is the initial state
  std::vector<std::vector<Transition>> succ;

  std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& t : succ) n += t.size();
    return n;
  }
};

struct ExploreOptions {
  std::size_t budget = 1000000;
  /// Test hook: permute successor expansion order. The reachable state set
  /// must not depend on it.
  std::optional<unsigned> shuffle_seed;
};

/// A check outcome with an optional violating trace. The witness replays
/// from initial_state via fire; for a lasso, lasso_start is the index (in
/// the visited-state sequence) that the trace re-enters.
struct Verdict {
  bool holds = true;
  std::vector<Choice> witness;
  int lasso_start = -1;
  std::string reason;
};

namespace detail {

inline HybridState untimed_state(const Network& net, const DiscreteState& d) {
  HybridState s;
  s.loc = d.loc;
  s.disc = d.disc;
  s.cont = net.cont_init;  // untimed fragment: constants at their initials
  s.time = 0.0;
  return s;
}

inline bool all_accepting(const Network& net, const DiscreteState& d) {
  for (std::size_t i = 0; i < net.instances.size(); ++i)
    if (!net.instances[i].locs[static_cast<std::size_t>(d.loc[i])].accepting)
      return false;
  return true;
}

}  // namespace detail

/// Explores the full reachable graph of an untimed network. Deterministic:
/// states are numbered in BFS discovery order with successors in declaration
/// order (unless the shuffle hook permutes them).
inline ReachGraph explore(const Network& net, ExploreOptions opt = {}) {
  if (!net.untimed())
    throw ValidationError("timed model requires estimate/simulate");

  ReachGraph g;
  std::unordered_map<DiscreteState, int, DiscreteStateHash> index;
  std::optional<std::mt19937> shuffle_rng;
  if (opt.shuffle_seed) shuffle_rng.emplace(*opt.shuffle_seed);

  const HybridState init = initial_state(net);
  DiscreteState d0{init.loc, init.disc};
  g.states.push_back(d0);
  g.succ.emplace_back();
  index.emplace(std::move(d0), 0);

  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    const int cur = frontier.front();
    frontier.pop_front();
    const HybridState h = detail::untimed_state(net, g.states[
        static_cast<std::size_t>(cur)]);
    std::vector<Choice> choices = enabled_edges(net, h);
    if (shuffle_rng)
      std::shuffle(choices.begin(), choices.end(), *shuffle_rng);
    for (const Choice& c : choices) {
      const HybridState next = fire(net, h, c);
      DiscreteState nd{next.loc, next.disc};
      auto [it, fresh] = index.try_emplace(nd, static_cast<int>(g.states.size()));
      if (fresh) {
        if (g.states.size() >= opt.budget)
          throw BudgetError("state budget of " + std::to_string(opt.budget) +
                                " states exceeded",
                            opt.budget);
        g.states.push_back(std::move(nd));
        g.succ.emplace_back();
        frontier.push_back(it->second);
      }
      g.succ[static_cast<std::size_t>(cur)].push_back(
          Transition{c, it->second});
    }
  }
  return g;
}

namespace detail {

/// Reconstructs the BFS-shortest choice path from state 0 to `target`.
inline std::vector<Choice> path_to(const ReachGraph& g, int target) {
  std::vector<int> parent(g.states.size(), -1);
  std::vector<const Transition*> via(g.states.size(), nullptr);
  std::deque<int> q{0};
  parent[0] = 0;
  while (!q.empty()) {
    const int cur = q.front();
    q.pop_front();
    if (cur == target) break;
    for (const Transition& t : g.succ[static_cast<std::size_t>(cur)]) {
      if (parent[static_cast<std::size_t>(t.target)] >= 0) continue;
      parent[static_cast<std::size_t>(t.target)] = cur;
      via[static_cast<std::size_t>(t.target)] = &t;
      q.push_back(t.target);
    }
  }
  std::vector<Choice> path;
  for (int at = target; at != 0; at = parent[static_cast<std::size_t>(at)])
    path.push_back(via[static_cast<std::size_t>(at)]->choice);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

/// A[] not deadlock: every reachable state either has at least one enabled
/// transition or is an accepting-complete protocol end (every instance at an
/// accepting location).
inline Verdict check_no_deadlock(const Network& net, ExploreOptions opt = {}) {
  const ReachGraph g = explore(net, opt);
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    if (!g.succ[i].empty()) continue;
    if (detail::all_accepting(net, g.states[i])) continue;
    Verdict v;
    v.holds = false;
    v.witness = detail::path_to(g, static_cast<int>(i));
    v.reason = "deadlocked state reached after " +
               std::to_string(v.witness.size()) + " step(s)";
    return v;
  }
  return Verdict{};
}

/// A<> goal: every maximal path from the initial state reaches a goal state.
/// Goal states are made absorbing; the property holds iff the goal-free
/// subgraph has no reachable cycle and no transition-less state.
inline Verdict check_eventually(const Network& net, const ExprPtr& goal,
                                ExploreOptions opt = {}) {
  if (infer_type(goal) != ExprType::kBool)
    throw ValidationError("liveness goal must be boolean");
  const ReachGraph g = explore(net, opt);

  std::vector<char> is_goal(g.states.size(), 0);
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    const HybridState h = detail::untimed_state(net, g.states[i]);
    is_goal[i] = eval_bool(*goal, detail::make_ctx(net, h)) ? 1 : 0;
  }

  if (is_goal[0]) return Verdict{};  // vacuously reached at the start

  // Dead ends among non-goal states.
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    if (is_goal[i] || !g.succ[i].empty()) continue;
    Verdict v;
    v.holds = false;
    v.witness = detail::path_to(g, static_cast<int>(i));
    v.reason = "stuck before reaching the goal";
    return v;
  }

  // Cycle search on the non-goal subgraph reachable from the initial state.
  enum : char { kWhite, kGray, kBlack };
  std::vector<char> color(g.states.size(), kWhite);
  struct Frame {
    int state;
    std::size_t next_edge;
  };
  std::vector<Frame> stack;
  std::vector<const Transition*> stack_via;  // edge taken into stack[k]
  stack.push_back({0, 0});
  stack_via.push_back(nullptr);
  color[0] = kGray;
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto& edges = g.succ[static_cast<std::size_t>(top.state)];
    if (top.next_edge >= edges.size()) {
      color[static_cast<std::size_t>(top.state)] = kBlack;
      stack.pop_back();
      stack_via.pop_back();
      continue;
    }
    const Transition& t = edges[top.next_edge++];
    const auto target = static_cast<std::size_t>(t.target);
    if (is_goal[target]) continue;  // absorbed
    if (color[target] == kGray) {
      // Lasso: stack prefix down to the re-entered state, then the back edge.
      Verdict v;
      v.holds = false;
      v.reason = "cycle avoiding the goal";
      std::size_t entry = 0;
      while (stack[entry].state != t.target) ++entry;
      v.lasso_start = static_cast<int>(entry);
      for (std::size_t k = entry + 1; k < stack.size(); ++k)
        v.witness.push_back(stack_via[k]->choice);
      // Path from the initial state to the cycle entry, then the loop body.
      std::vector<Choice> prefix;
      for (std::size_t k = 1; k <= entry; ++k)
        prefix.push_back(stack_via[k]->choice);
      v.witness.insert(v.witness.begin(), prefix.begin(), prefix.end());
      v.witness.push_back(t.choice);
      v.lasso_start = static_cast<int>(entry);
      return v;
    }
    if (color[target] == kWhite) {
      color[target] = kGray;
      stack.push_back({t.target, 0});
      stack_via.push_back(&t);
    }
  }
  return Verdict{};
}

}  // namespace ksmc
