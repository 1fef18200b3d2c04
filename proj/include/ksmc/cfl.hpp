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
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "ksmc/model.hpp"
#include "ksmc/network.hpp"
#include "ksmc/orbital.hpp"

namespace ksmc {

/// Bundled, executable reconstructions of the centralized federated-learning
/// orchestration models: the untimed round-trip protocol, the spacecraft
/// template driven by the true-anomaly ODE, and the stochastic two-phase
/// protocol synchronized on periapsis broadcasts.
///
/// The programmatic builders here and the bundled .ksm files describe the
/// same models; tests pin print(builder output) against the files.

struct Spacecraft {
  int node_id = 0;
  int orbit_id = 0;
  double initial_anomaly = 0.0;  // rad, in [0, 2*pi)
};

struct Scenario {
  std::vector<Orbit> orbits;
  std::vector<Spacecraft> spacecraft;
  int server_id = 0;
  std::vector<int> client_ids;

  int n_clients() const { return static_cast<int>(client_ids.size()); }
};

/// The two-spacecraft, single-orbit scenario: orbit (a=10, e=0.2, T=1),
/// spacecraft 0 starting at apoapsis (v = pi) and spacecraft 1 at
/// periapsis (v = 0), one ground-station server, two clients.
inline Scenario default_scenario() {
  Scenario sc;
  sc.orbits.push_back(make_orbit(10.0, 0.2, 1.0));
  sc.spacecraft.push_back({0, 0, std::numbers::pi});
  sc.spacecraft.push_back({1, 0, 0.0});
  sc.server_id = 2;
  sc.client_ids = {0, 1};
  return sc;
}

inline void validate_scenario(const Scenario& sc) {
  if (sc.spacecraft.empty()) throw ValidationError("scenario has no spacecraft");
  if (sc.client_ids.empty()) throw ValidationError("scenario has no clients");
  std::set<int> ids;
  for (const auto& s : sc.spacecraft) {
    if (!ids.insert(s.node_id).second)
      throw ValidationError("duplicate spacecraft nodeId " +
                            std::to_string(s.node_id));
    if (s.orbit_id < 0 || s.orbit_id >= static_cast<int>(sc.orbits.size()))
      throw ValidationError("spacecraft " + std::to_string(s.node_id) +
                            " references unknown orbit " +
                            std::to_string(s.orbit_id));
    if (!(s.initial_anomaly >= 0.0) ||
        !(s.initial_anomaly < 2.0 * std::numbers::pi))
      throw ValidationError("initial anomaly of spacecraft " +
                            std::to_string(s.node_id) +
                            " must lie in [0, 2*pi)");
    if (s.node_id < 0 || s.node_id >= static_cast<int>(sc.spacecraft.size()))
      throw ValidationError("spacecraft nodeIds must be 0..n-1");
  }
  std::set<int> clients(sc.client_ids.begin(), sc.client_ids.end());
  if (clients.size() != sc.client_ids.size())
    throw ValidationError("duplicate client ids");
  for (int c : sc.client_ids)
    if (!ids.count(c))
      throw ValidationError("client " + std::to_string(c) +
                            " has no spacecraft");
  if (clients.count(sc.server_id))
    throw ValidationError("server id collides with a client id");
}

namespace cfl_detail {

inline ExprPtr n(double v) { return make_num(v); }
inline ExprPtr id(const std::string& s) { return make_name(s); }
inline ExprPtr at(const std::string& s, ExprPtr i) {
  return make_name(s, std::move(i));
}
inline ExprPtr bin(ExprKind k, ExprPtr a, ExprPtr b) {
  return make_binary(k, std::move(a), std::move(b));
}

inline AssignAst assign(std::string name, ExprPtr index, ExprPtr value) {
  AssignAst a;
  a.name = std::move(name);
  a.index = std::move(index);
  a.value = std::move(value);
  return a;
}

inline SyncAst sync(std::string chan, ExprPtr index, bool emit) {
  SyncAst s;
  s.channel = std::move(chan);
  s.index = std::move(index);
  s.emit = emit;
  return s;
}

inline LocationAst location(std::string name, bool initial, bool accepting) {
  LocationAst l;
  l.name = std::move(name);
  l.initial = initial;
  l.accepting = accepting;
  return l;
}

/// Locations that must be left without letting time pass: invariant urg <= 0
/// with urg rated 1 while the location is active. urg stays exactly 0, so
/// the maximal delay there is 0.
inline LocationAst urgent_location(std::string name) {
  LocationAst l = location(std::move(name), false, false);
  l.invariant = bin(ExprKind::kLe, id("urg"), n(0));
  RateAst r;
  r.var = "urg";
  r.value = n(1);
  l.rates.push_back(r);
  return l;
}

inline EdgeAst edge(std::string src, std::string dst) {
  EdgeAst e;
  e.src = std::move(src);
  e.dst = std::move(dst);
  return e;
}

inline VarDeclAst var(std::string name, ExprPtr init) {
  VarDeclAst v;
  v.name = std::move(name);
  if (init) v.init.push_back(std::move(init));
  return v;
}

}  // namespace cfl_detail

/// Untimed model of one orchestration round: the server broadcasts a task
/// to each client in turn, stays receptive to replies throughout, and sets
/// terminated once every client has answered. Final locations accepting.
inline ModelDef conventional_cfl_def(int n_clients) {
  using namespace cfl_detail;
  if (n_clients < 1) throw ValidationError("conventional_cfl requires n >= 1");
  ModelDef def;
  def.filename = "cfl_conventional";

  ConstDecl nclients;
  nclients.name = "NCLIENTS";
  nclients.value = n(n_clients);
  def.items.push_back(nclients);

  ChannelDecl ch2client;
  ch2client.name = "ch2client";
  ch2client.arity = n_clients;
  def.items.push_back(ch2client);
  ChannelDecl ch2server;
  ch2server.name = "ch2server";
  def.items.push_back(ch2server);

  def.items.push_back(var("terminated", n(0)));

  TemplateDecl server;
  server.name = "Server";
  server.vars.push_back(var("nsent", n(0)));
  server.vars.push_back(var("nrecv", n(0)));
  server.locations.push_back(location("sphase1", true, false));
  server.locations.push_back(location("sphase2", false, false));
  server.locations.push_back(location("sphase3", false, false));
  server.locations.push_back(location("send", false, true));
  {
    EdgeAst e = edge("sphase1", "sphase1");
    e.guard = bin(ExprKind::kLt, id("nsent"), id("NCLIENTS"));
    e.sync = sync("ch2client", id("nsent"), true);
    e.updates.push_back(
        assign("nsent", nullptr, bin(ExprKind::kAdd, id("nsent"), n(1))));
    server.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase1", "sphase1");
    e.sync = sync("ch2server", nullptr, false);
    e.updates.push_back(
        assign("nrecv", nullptr, bin(ExprKind::kAdd, id("nrecv"), n(1))));
    server.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase1", "sphase2");
    e.guard = bin(ExprKind::kEq, id("nsent"), id("NCLIENTS"));
    server.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase2", "sphase2");
    e.guard = bin(ExprKind::kLt, id("nrecv"), id("NCLIENTS"));
    e.sync = sync("ch2server", nullptr, false);
    e.updates.push_back(
        assign("nrecv", nullptr, bin(ExprKind::kAdd, id("nrecv"), n(1))));
    server.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase2", "sphase3");
    e.guard = bin(ExprKind::kEq, id("nrecv"), id("NCLIENTS"));
    server.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase3", "send");
    e.updates.push_back(assign("terminated", nullptr, n(1)));
    server.edges.push_back(e);
  }
  def.items.push_back(server);

  TemplateDecl client;
  client.name = "Client";
  client.params = {"nodeId"};
  client.locations.push_back(location("cphase1", true, false));
  client.locations.push_back(location("cphase2", false, false));
  client.locations.push_back(location("cend", false, true));
  {
    EdgeAst e = edge("cphase1", "cphase2");
    e.sync = sync("ch2client", id("nodeId"), false);
    client.edges.push_back(e);
  }
  {
    EdgeAst e = edge("cphase2", "cend");
    e.sync = sync("ch2server", nullptr, true);
    client.edges.push_back(e);
  }
  def.items.push_back(client);

  InstanceDecl srv;
  srv.name = "server";
  srv.template_name = "Server";
  def.items.push_back(srv);
  for (int c = 0; c < n_clients; ++c) {
    InstanceDecl inst;
    inst.name = "client" + std::to_string(c);
    inst.template_name = "Client";
    inst.args.push_back(n(c));
    def.items.push_back(inst);
  }
  return def;
}

inline Network conventional_cfl(int n_clients) {
  return build_network(conventional_cfl_def(n_clients));
}

/// Stochastic two-revolution model. Spacecraft broadcast reset[nodeId] at
/// each periapsis passage; during the first revolution the server forwards
/// ch2client[clientId] on each reset, during the second each client answers
/// its reset with ch2server. Waiting locations are bounded by the last
/// client's spacecraft completing its revolution (nus[last] <= 2*pi).
inline ModelDef stochastic_cfl_def(const Scenario& sc) {
  using namespace cfl_detail;
  validate_scenario(sc);
  const int n_sv = static_cast<int>(sc.spacecraft.size());
  const int n_clients = sc.n_clients();
  const int last_sv = sc.client_ids.back();
  // Channels are indexed by nodeId; the id space covers every spacecraft
  // and the server, so the shared template instantiates cleanly for all.
  int n_nodes = sc.server_id + 1;
  for (const auto& s : sc.spacecraft)
    n_nodes = std::max(n_nodes, s.node_id + 1);

  ModelDef def;
  def.filename = "cfl_stochastic";

  ConstDecl fl_srv;
  fl_srv.name = "FLSrvId";
  fl_srv.value = n(sc.server_id);
  def.items.push_back(fl_srv);
  ConstDecl nclients;
  nclients.name = "NCLIENTS";
  nclients.value = n(n_clients);
  def.items.push_back(nclients);
  ConstDecl lastsv;
  lastsv.name = "LASTSV";
  lastsv.value = n(last_sv);
  def.items.push_back(lastsv);
  ConstDecl eps;
  eps.name = "ANGLE_EPS";
  eps.value = n(kAngleEps);
  def.items.push_back(eps);

  for (std::size_t i = 0; i < sc.orbits.size(); ++i) {
    OrbitDecl od;
    od.name = "orb" + std::to_string(i);
    od.a = sc.orbits[i].a;
    od.e = sc.orbits[i].e;
    od.period = sc.orbits[i].T;
    def.items.push_back(od);
  }

  ChannelDecl reset;
  reset.name = "reset";
  reset.arity = n_nodes;
  def.items.push_back(reset);
  ChannelDecl ch2client;
  ch2client.name = "ch2client";
  ch2client.arity = n_nodes;
  def.items.push_back(ch2client);
  ChannelDecl ch2server;
  ch2server.name = "ch2server";
  def.items.push_back(ch2server);

  {
    VarDeclAst nus;
    nus.continuous = true;
    nus.name = "nus";
    nus.size = n_sv;
    nus.braced = true;
    for (const auto& s : sc.spacecraft) {
      if (s.initial_anomaly == std::numbers::pi)
        nus.init.push_back(make_pi());
      else
        nus.init.push_back(n(s.initial_anomaly));
    }
    def.items.push_back(nus);
  }
  {
    VarDeclAst urg;
    urg.continuous = true;
    urg.name = "urg";
    urg.init.push_back(n(0));
    def.items.push_back(urg);
  }

  // Spacecraft: dwell in `loop` until the anomaly reaches 2*pi, then
  // broadcast the periapsis passage and wrap by -2*pi.
  TemplateDecl sv;
  sv.name = "SV";
  sv.params = {"nodeId", "orbitId"};
  {
    LocationAst loop = location("loop", true, false);
    loop.invariant = bin(ExprKind::kLe, at("nus", id("nodeId")),
                         bin(ExprKind::kMul, n(2), make_pi()));
    RateAst r;
    r.var = "nus";
    r.index = id("nodeId");
    r.value = make_rate_call(id("orbitId"), at("nus", id("nodeId")));
    loop.rates.push_back(r);
    sv.locations.push_back(loop);
  }
  {
    EdgeAst e = edge("loop", "loop");
    e.guard = bin(ExprKind::kGe, at("nus", id("nodeId")),
                  bin(ExprKind::kSub, bin(ExprKind::kMul, n(2), make_pi()),
                      id("ANGLE_EPS")));
    e.sync = sync("reset", id("nodeId"), true);
    e.updates.push_back(
        assign("nus", id("nodeId"),
               bin(ExprKind::kSub, at("nus", id("nodeId")),
                   bin(ExprKind::kMul, n(2), make_pi()))));
    sv.edges.push_back(e);
  }
  def.items.push_back(sv);

  // One template for server and clients; the initial branch picks the role.
  TemplateDecl fl;
  fl.name = "FlCentralized";
  fl.params = {"nodeId"};
  fl.vars.push_back(var("cur", n(0)));
  fl.vars.push_back(var("nsent", n(0)));
  fl.vars.push_back(var("nreplies", n(0)));
  {
    VarDeclAst handled;
    handled.name = "handled";
    handled.size = n_clients;
    handled.init.push_back(n(0));
    fl.vars.push_back(handled);
  }
  fl.locations.push_back(urgent_location("start"));
  fl.locations.front().initial = true;
  {
    LocationAst l = location("sphase1_t", false, false);
    l.invariant = bin(ExprKind::kLe, at("nus", id("LASTSV")),
                      bin(ExprKind::kMul, n(2), make_pi()));
    fl.locations.push_back(l);
  }
  fl.locations.push_back(urgent_location("sphase1_s"));
  fl.locations.push_back(location("sphase2", false, false));
  fl.locations.push_back(urgent_location("sphase3"));
  fl.locations.push_back(location("send", false, true));
  fl.locations.push_back(location("cphase1", false, false));
  {
    LocationAst l = location("cphase2_t", false, false);
    l.invariant = bin(ExprKind::kLe, at("nus", id("LASTSV")),
                      bin(ExprKind::kMul, n(2), make_pi()));
    fl.locations.push_back(l);
  }
  fl.locations.push_back(urgent_location("creply"));
  fl.locations.push_back(location("cend", false, true));

  {
    EdgeAst e = edge("start", "sphase1_t");
    e.guard = bin(ExprKind::kEq, id("nodeId"), id("FLSrvId"));
    fl.edges.push_back(e);
  }
  {
    EdgeAst e = edge("start", "cphase1");
    e.guard = bin(ExprKind::kNe, id("nodeId"), id("FLSrvId"));
    fl.edges.push_back(e);
  }
  // Server, first revolution: accept each client's periapsis signal once.
  for (int c = 0; c < n_clients; ++c) {
    EdgeAst e = edge("sphase1_t", "sphase1_s");
    e.guard = bin(ExprKind::kEq, at("handled", n(c)), n(0));
    e.sync = sync("reset", n(sc.client_ids[static_cast<std::size_t>(c)]),
                  false);
    e.updates.push_back(assign("handled", n(c), n(1)));
    e.updates.push_back(
        assign("cur", nullptr, n(sc.client_ids[static_cast<std::size_t>(c)])));
    fl.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase1_s", "sphase1_t");
    e.guard = bin(ExprKind::kLt, id("nsent"),
                  bin(ExprKind::kSub, id("NCLIENTS"), n(1)));
    e.sync = sync("ch2client", id("cur"), true);
    e.updates.push_back(
        assign("nsent", nullptr, bin(ExprKind::kAdd, id("nsent"), n(1))));
    fl.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase1_s", "sphase2");
    e.guard = bin(ExprKind::kEq, id("nsent"),
                  bin(ExprKind::kSub, id("NCLIENTS"), n(1)));
    e.sync = sync("ch2client", id("cur"), true);
    e.updates.push_back(
        assign("nsent", nullptr, bin(ExprKind::kAdd, id("nsent"), n(1))));
    fl.edges.push_back(e);
  }
  // Server, second revolution: collect the replies.
  {
    EdgeAst e = edge("sphase2", "sphase2");
    e.guard = bin(ExprKind::kLt, id("nreplies"),
                  bin(ExprKind::kSub, id("NCLIENTS"), n(1)));
    e.sync = sync("ch2server", nullptr, false);
    e.updates.push_back(
        assign("nreplies", nullptr, bin(ExprKind::kAdd, id("nreplies"), n(1))));
    fl.edges.push_back(e);
  }
  {
    EdgeAst e = edge("sphase2", "sphase3");
    e.guard = bin(ExprKind::kEq, id("nreplies"),
                  bin(ExprKind::kSub, id("NCLIENTS"), n(1)));
    e.sync = sync("ch2server", nullptr, false);
    e.updates.push_back(
        assign("nreplies", nullptr, bin(ExprKind::kAdd, id("nreplies"), n(1))));
    fl.edges.push_back(e);
  }
  fl.edges.push_back(edge("sphase3", "send"));
  // Client branch.
  {
    EdgeAst e = edge("cphase1", "cphase2_t");
    e.sync = sync("ch2client", id("nodeId"), false);
    fl.edges.push_back(e);
  }
  {
    EdgeAst e = edge("cphase2_t", "creply");
    e.sync = sync("reset", id("nodeId"), false);
    fl.edges.push_back(e);
  }
  {
    EdgeAst e = edge("creply", "cend");
    e.sync = sync("ch2server", nullptr, true);
    fl.edges.push_back(e);
  }
  def.items.push_back(fl);

  for (const auto& s : sc.spacecraft) {
    InstanceDecl inst;
    inst.name = "sv" + std::to_string(s.node_id);
    inst.template_name = "SV";
    inst.args.push_back(n(s.node_id));
    inst.args.push_back(n(s.orbit_id));
    def.items.push_back(inst);
  }
  {
    InstanceDecl inst;
    inst.name = "server";
    inst.template_name = "FlCentralized";
    inst.args.push_back(id("FLSrvId"));
    def.items.push_back(inst);
  }
  for (int c : sc.client_ids) {
    InstanceDecl inst;
    inst.name = "client" + std::to_string(c);
    inst.template_name = "FlCentralized";
    inst.args.push_back(n(c));
    def.items.push_back(inst);
  }
  return def;
}

inline Network stochastic_cfl(const Scenario& sc) {
  return build_network(stochastic_cfl_def(sc));
}

}  // namespace ksmc
