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
#include "ksmc/semantics.hpp"

#include <cmath>
#include <numbers>

#include <doctest.h>

#include "ksmc/cfl.hpp"
#include "ksmc/network.hpp"
#include "ksmc/orbital.hpp"

using namespace ksmc;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ExprPtr num(double v) { return make_num(v); }
ExprPtr ref(const std::string& s) { return make_name(s); }
ExprPtr bin(ExprKind k, ExprPtr a, ExprPtr b) {
  return make_binary(k, std::move(a), std::move(b));
}

/// Fires all initial urgent branch edges of the stochastic model so the
/// server and clients reach their role locations at t = 0.
HybridState branch_roles(const Network& net, HybridState s) {
  for (int guard = 0; guard < 16; ++guard) {
    auto choices = enabled_edges(net, s);
    if (choices.empty()) break;
    s = fire(net, s, choices.front());
  }
  return s;
}

int loc_of(const Network& net, const HybridState& s, const std::string& inst) {
  return s.loc[static_cast<std::size_t>(net.instance_index(inst))];
}

int loc_index(const Network& net, const std::string& inst,
              const std::string& loc) {
  return net.instances[static_cast<std::size_t>(net.instance_index(inst))]
      .location_index(loc);
}

}  // namespace

TEST_CASE("build_network instantiates the bundled stochastic model") {
  const Network net = stochastic_cfl(default_scenario());
  REQUIRE(net.instances.size() == 5);
  CHECK(net.instances[0].name == "sv0");
  CHECK(net.instances[1].name == "sv1");
  CHECK(net.instances[2].name == "server");
  CHECK(net.instances[3].name == "client0");
  CHECK(net.instances[4].name == "client1");
  CHECK(net.orbits.size() == 1);
  CHECK(net.channels.size() == 3);
  CHECK(net.n_cont == 3);  // nus[2] + urg
  CHECK_FALSE(net.untimed());

  const Network conv = conventional_cfl(2);
  CHECK(conv.instances.size() == 3);
  CHECK(conv.n_cont == 0);
  CHECK(conv.untimed());
}

TEST_CASE("build_network rejects malformed templates") {
  ModelDef def;
  TemplateDecl t;
  t.name = "T";
  LocationAst a;
  a.name = "A";
  a.initial = true;
  LocationAst b;
  b.name = "B";
  b.initial = true;
  t.locations = {a, b};
  def.items.push_back(t);
  InstanceDecl i;
  i.name = "x";
  i.template_name = "T";
  def.items.push_back(i);
  CHECK_THROWS_WITH_AS(build_network(def),
                       doctest::Contains("multiple initial locations"),
                       ValidationError);

  ModelDef none;
  TemplateDecl t2;
  t2.name = "T";
  LocationAst c;
  c.name = "A";
  t2.locations = {c};
  none.items.push_back(t2);
  CHECK_THROWS_WITH_AS(build_network(none),
                       doctest::Contains("missing initial location"),
                       ValidationError);
}

TEST_CASE("build_network reports out-of-range and unknown references") {
  // guard referencing nus[7] in a model whose nus has two slots
  ModelDef def = stochastic_cfl_def(default_scenario());
  for (auto& item : def.items) {
    if (auto* t = std::get_if<TemplateDecl>(&item)) {
      if (t->name != "FlCentralized") continue;
      t->edges[0].guard = bin(ExprKind::kLe, make_name("nus", num(7)), num(1));
    }
  }
  try {
    build_network(def);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("out of range") != std::string::npos);
    CHECK(msg.find("start -> sphase1_t") != std::string::npos);
  }

  ModelDef unknown;
  TemplateDecl t;
  t.name = "T";
  LocationAst a;
  a.name = "A";
  a.initial = true;
  a.invariant = bin(ExprKind::kLe, ref("ghost"), num(1));
  t.locations = {a};
  unknown.items.push_back(t);
  InstanceDecl i;
  i.name = "x";
  i.template_name = "T";
  unknown.items.push_back(i);
  try {
    build_network(unknown);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unknown identifier 'ghost'") != std::string::npos);
    CHECK(msg.find("location 'A'") != std::string::npos);
  }
}

TEST_CASE("build_network rejects duplicates, bad syncs and bad divisions") {
  {
    ModelDef def;
    VarDeclAst v;
    v.name = "x";
    def.items.push_back(v);
    VarDeclAst w;
    w.name = "x";
    def.items.push_back(w);
    CHECK_THROWS_WITH_AS(build_network(def),
                         doctest::Contains("duplicate declaration 'x'"),
                         ValidationError);
  }
  {
    // indexed sync on a scalar channel
    ModelDef def;
    ChannelDecl ch;
    ch.name = "c";
    def.items.push_back(ch);
    TemplateDecl t;
    t.name = "T";
    LocationAst a;
    a.name = "A";
    a.initial = true;
    t.locations = {a};
    EdgeAst e;
    e.src = e.dst = "A";
    SyncAst s;
    s.channel = "c";
    s.index = num(0);
    s.emit = true;
    e.sync = s;
    t.edges.push_back(e);
    def.items.push_back(t);
    InstanceDecl i;
    i.name = "x";
    i.template_name = "T";
    def.items.push_back(i);
    CHECK_THROWS_WITH_AS(build_network(def), doctest::Contains("is scalar"),
                         ValidationError);
  }
  {
    // constant channel index out of the declared arity
    ModelDef def;
    ChannelDecl ch;
    ch.name = "c";
    ch.arity = 2;
    def.items.push_back(ch);
    TemplateDecl t;
    t.name = "T";
    LocationAst a;
    a.name = "A";
    a.initial = true;
    t.locations = {a};
    EdgeAst e;
    e.src = e.dst = "A";
    SyncAst s;
    s.channel = "c";
    s.index = num(2);
    s.emit = true;
    e.sync = s;
    t.edges.push_back(e);
    def.items.push_back(t);
    InstanceDecl i;
    i.name = "x";
    i.template_name = "T";
    def.items.push_back(i);
    CHECK_THROWS_WITH_AS(build_network(def),
                         doctest::Contains("out of range"), ValidationError);
  }
  {
    // division by a variable
    ModelDef def;
    VarDeclAst v;
    v.name = "x";
    v.init.push_back(num(1));
    def.items.push_back(v);
    TemplateDecl t;
    t.name = "T";
    LocationAst a;
    a.name = "A";
    a.initial = true;
    t.locations = {a};
    EdgeAst e;
    e.src = e.dst = "A";
    e.guard = bin(ExprKind::kLt, bin(ExprKind::kDiv, num(1), ref("x")), num(1));
    t.edges.push_back(e);
    def.items.push_back(t);
    InstanceDecl i;
    i.name = "inst";
    i.template_name = "T";
    def.items.push_back(i);
    CHECK_THROWS_WITH_AS(build_network(def),
                         doctest::Contains("division only by nonzero"),
                         ValidationError);
  }
  {
    // ill-typed guard
    ModelDef def;
    TemplateDecl t;
    t.name = "T";
    LocationAst a;
    a.name = "A";
    a.initial = true;
    t.locations = {a};
    EdgeAst e;
    e.src = e.dst = "A";
    e.guard = bin(ExprKind::kAdd, num(1), num(2));
    t.edges.push_back(e);
    def.items.push_back(t);
    InstanceDecl i;
    i.name = "inst";
    i.template_name = "T";
    def.items.push_back(i);
    CHECK_THROWS_WITH_AS(build_network(def),
                         doctest::Contains("ill-typed guard"),
                         ValidationError);
  }
}

TEST_CASE("initial_state places the default scenario at (pi, 0) and t = 0") {
  const Network net = stochastic_cfl(default_scenario());
  const HybridState s = initial_state(net);
  CHECK(s.time == 0.0);
  CHECK(s.cont[0] == kPi);
  CHECK(s.cont[1] == 0.0);
  for (std::size_t i = 0; i < net.instances.size(); ++i)
    CHECK(s.loc[i] == net.instances[i].init_loc);
}

TEST_CASE("initial_state rejects invariant-violating and empty networks") {
  ModelDef def;
  VarDeclAst nu;
  nu.continuous = true;
  nu.name = "nu";
  nu.init.push_back(num(3.0 * kPi));
  def.items.push_back(nu);
  TemplateDecl t;
  t.name = "T";
  LocationAst a;
  a.name = "A";
  a.initial = true;
  a.invariant = bin(ExprKind::kLe, ref("nu"), bin(ExprKind::kMul, num(2), make_pi()));
  t.locations = {a};
  def.items.push_back(t);
  InstanceDecl i;
  i.name = "x";
  i.template_name = "T";
  def.items.push_back(i);
  CHECK_THROWS_AS(initial_state(build_network(def)), InvariantError);

  CHECK_THROWS_WITH_AS(initial_state(build_network(ModelDef{})),
                       doctest::Contains("no instances"), ValidationError);
}

TEST_CASE("enabled_edges matches broadcast receivers at the boundary") {
  const Network net = stochastic_cfl(default_scenario());
  HybridState s = branch_roles(net, initial_state(net));
  CHECK(loc_of(net, s, "server") == loc_index(net, "server", "sphase1_t"));
  CHECK(loc_of(net, s, "client0") == loc_index(net, "client0", "cphase1"));

  // Nothing is fireable while both spacecraft are strictly inside a lap.
  CHECK(enabled_edges(net, s).empty());

  // Place spacecraft 0 at periapsis: its reset emit becomes enabled and the
  // server in sphase1_t is the only receiver.
  s.cont[0] = kTwoPi;
  auto choices = enabled_edges(net, s);
  REQUIRE(choices.size() == 1);
  CHECK(choices[0].instance == net.instance_index("sv0"));
  REQUIRE(choices[0].receivers.size() == 1);
  CHECK(choices[0].receivers[0].first == net.instance_index("server"));

  // With the server marked as having already handled client 0, the emit is
  // still listed (broadcast never blocks) with an empty receiver set.
  HybridState blocked = s;
  const VarInfo* handled = net.find_var("server.handled");
  REQUIRE(handled != nullptr);
  blocked.disc[static_cast<std::size_t>(handled->base)] = 1;
  auto still = enabled_edges(net, blocked);
  REQUIRE(still.size() == 1);
  CHECK(still[0].receivers.empty());
}

TEST_CASE("fire applies emitter updates, then receivers, atomically") {
  const Network net = stochastic_cfl(default_scenario());
  HybridState s = branch_roles(net, initial_state(net));
  s.cont[0] = kTwoPi;
  auto choices = enabled_edges(net, s);
  REQUIRE(choices.size() == 1);
  const HybridState next = fire(net, s, choices[0]);

  CHECK(next.time == s.time);                      // fire never advances time
  CHECK(next.cont[0] == doctest::Approx(0.0));     // wrapped by -2*pi
  CHECK(loc_of(net, next, "server") == loc_index(net, "server", "sphase1_s"));
  const VarInfo* cur = net.find_var("server.cur");
  const VarInfo* handled = net.find_var("server.handled");
  REQUIRE(cur != nullptr);
  REQUIRE(handled != nullptr);
  CHECK(next.disc[static_cast<std::size_t>(cur->base)] == 0);
  CHECK(next.disc[static_cast<std::size_t>(handled->base)] == 1);

  // determinism: firing the same choice from the same state is bit-identical
  const HybridState again = fire(net, s, choices[0]);
  CHECK(again.cont == next.cont);
  CHECK(again.disc == next.disc);
  CHECK(again.loc == next.loc);

  // the consumed choice is stale against the successor state
  CHECK_THROWS_AS(fire(net, next, choices[0]), Error);
}

TEST_CASE("broadcast emit never blocks and update order is total") {
  ModelDef def;
  ChannelDecl ch;
  ch.name = "c";
  def.items.push_back(ch);
  VarDeclAst x;
  x.name = "x";
  def.items.push_back(x);
  VarDeclAst gate;
  gate.name = "gate";
  def.items.push_back(gate);

  TemplateDecl emitter;
  emitter.name = "E";
  LocationAst ea;
  ea.name = "A";
  ea.initial = true;
  LocationAst eb;
  eb.name = "B";
  emitter.locations = {ea, eb};
  EdgeAst ee;
  ee.src = "A";
  ee.dst = "B";
  SyncAst es;
  es.channel = "c";
  es.emit = true;
  ee.sync = es;
  ee.updates.push_back({"x", nullptr, num(1), {}});
  emitter.edges.push_back(ee);
  def.items.push_back(emitter);

  TemplateDecl receiver;
  receiver.name = "R";
  receiver.params = {"mul", "add"};
  LocationAst ra;
  ra.name = "A";
  ra.initial = true;
  LocationAst rb;
  rb.name = "B";
  receiver.locations = {ra, rb};
  EdgeAst re;
  re.src = "A";
  re.dst = "B";
  re.guard = bin(ExprKind::kEq, ref("gate"), num(0));
  SyncAst rs;
  rs.channel = "c";
  rs.emit = false;
  re.sync = rs;
  re.updates.push_back(
      {"x", nullptr,
       bin(ExprKind::kAdd, bin(ExprKind::kMul, ref("x"), ref("mul")),
           ref("add")),
       {}});
  receiver.edges.push_back(re);
  def.items.push_back(receiver);

  InstanceDecl e1;
  e1.name = "emit";
  e1.template_name = "E";
  def.items.push_back(e1);
  InstanceDecl r1;
  r1.name = "r1";
  r1.template_name = "R";
  r1.args = {num(2), num(0)};  // x := x*2
  def.items.push_back(r1);
  InstanceDecl r2;
  r2.name = "r2";
  r2.template_name = "R";
  r2.args = {num(1), num(5)};  // x := x+5
  def.items.push_back(r2);

  const Network net = build_network(def);
  HybridState s = initial_state(net);

  auto choices = enabled_edges(net, s);
  REQUIRE(choices.size() == 1);
  CHECK(choices[0].receivers.size() == 2);
  // emitter: x=1; r1: x=2; r2: x=7 -- any other order gives a different x
  HybridState next = fire(net, s, choices[0]);
  CHECK(next.disc[0] == 7);

  // closing the receiver guards must not disable the emit
  HybridState gated = s;
  gated.disc[1] = 1;  // gate
  auto gated_choices = enabled_edges(net, gated);
  REQUIRE(gated_choices.size() == 1);
  CHECK(gated_choices[0].receivers.empty());
  HybridState lost = fire(net, gated, gated_choices[0]);
  CHECK(lost.disc[0] == 1);  // only the emitter update ran
}

TEST_CASE("flow integrates the anomaly ODE against the orbital oracle") {
  const Scenario sc = default_scenario();
  const Network net = stochastic_cfl(sc);
  HybridState s = branch_roles(net, initial_state(net));
  const double step = default_step(sc.orbits[0]);

  const HybridState after = flow(net, s, 0.25, step);
  CHECK(after.time == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(after.cont[1] ==
        doctest::Approx(propagate(sc.orbits[0], 0.0, 0.25, step)).epsilon(1e-9));
  CHECK(after.cont[0] ==
        doctest::Approx(propagate(sc.orbits[0], kPi, 0.25, step)).epsilon(1e-9));
  CHECK(after.disc == s.disc);  // flow never touches discrete state
  CHECK(after.loc == s.loc);

  const HybridState same = flow(net, s, 0.0, step);
  CHECK(same.cont == s.cont);
  CHECK(same.time == s.time);
}

TEST_CASE("flow reports the bisection-refined boundary on violation") {
  const Scenario sc = default_scenario();
  const Network net = stochastic_cfl(sc);
  const double step = default_step(sc.orbits[0]);
  HybridState s = branch_roles(net, initial_state(net));

  // From t=0 the first binding invariant is spacecraft 0 reaching 2*pi.
  try {
    flow(net, s, 0.7, step);
    FAIL("expected InvariantError");
  } catch (const InvariantError& e) {
    CHECK(e.when() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(e.instance() == "sv0");
  }

  // After spacecraft 0 wraps, the bound moves to nus[1] reaching 2*pi at 1.0.
  HybridState mid = flow(net, s, *max_delay(net, s, step), step);
  auto choices = enabled_edges(net, mid);
  REQUIRE(choices.size() == 1);
  HybridState wrapped = fire(net, mid, choices[0]);
  // serve the urgent forward hop so no urg invariant is active
  wrapped = branch_roles(net, wrapped);
  try {
    flow(net, wrapped, 0.7, step);
    FAIL("expected InvariantError");
  } catch (const InvariantError& e) {
    CHECK(e.when() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("max_delay finds invariant boundaries and unbounded waits") {
  const Scenario sc = default_scenario();
  const Network net = stochastic_cfl(sc);
  const double step = default_step(sc.orbits[0]);
  HybridState s = branch_roles(net, initial_state(net));

  auto d0 = max_delay(net, s, step);
  REQUIRE(d0.has_value());
  CHECK(*d0 == doctest::Approx(0.5).epsilon(1e-9));

  // flowing exactly the returned supremum must satisfy all invariants,
  // while any measurable overshoot violates one
  CHECK_NOTHROW(flow(net, s, *d0, step));
  CHECK_THROWS_AS(flow(net, s, *d0 + 1e-6, step), InvariantError);

  // a network without invariants waits unboundedly
  const Network conv = conventional_cfl(2);
  CHECK_FALSE(max_delay(conv, initial_state(conv), 1e-3).has_value());
}

TEST_CASE("urgent locations pin the maximal delay at zero") {
  const Network net = stochastic_cfl(default_scenario());
  const HybridState s = initial_state(net);  // all roles still at start
  auto d = max_delay(net, s, 1e-4);
  REQUIRE(d.has_value());
  CHECK(*d == 0.0);
}
