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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ksmc/expr.hpp"
#include "ksmc/model.hpp"
#include "ksmc/orbital.hpp"

namespace ksmc {

/// Validated, immutable runtime form of a model. Templates are instantiated
/// (parameters substituted by their actual values), names are resolved to
/// variable slots, and every expression is type-checked. A Network never
/// changes after build_network returns; states evolve separately.

struct VarInfo {
  std::string name;  // globals: declared name; locals: "<instance>.<name>"
  int base = 0;
  int size = 1;
  bool is_array = false;
  bool continuous = false;
  int owner = -1;  // owning instance, -1 for globals
};

struct ChannelInfo {
  std::string name;
  std::optional<int> arity;  // nullopt: scalar
};

struct RtLocation {
  std::string name;
  bool accepting = false;
  ExprPtr invariant;  // null: none
  bool invariant_on_cont = false;
  std::vector<std::pair<int, ExprPtr>> rates;  // (cont slot, rate expr)
  double exp_rate = 1.0;  // delay rate when no invariant bounds the wait
};

struct RtUpdate {
  bool continuous = false;
  int base = 0;
  int size = 1;
  ExprPtr index;  // null for scalars
  ExprPtr value;
  std::string display;
};

struct RtEdge {
  int src = -1;
  int dst = -1;
  ExprPtr guard;       // null: true
  int channel = -1;    // -1: internal edge
  ExprPtr chan_index;  // null for scalar channels
  bool emit = false;
  std::vector<RtUpdate> updates;

  bool has_sync() const { return channel >= 0; }
};

struct RtInstance {
  std::string name;
  std::string template_name;
  int init_loc = 0;
  std::vector<RtLocation> locs;
  std::vector<RtEdge> edges;

  int location_index(const std::string& loc_name) const {
    for (std::size_t i = 0; i < locs.size(); ++i)
      if (locs[i].name == loc_name) return static_cast<int>(i);
    return -1;
  }
};

struct Network {
  std::vector<Orbit> orbits;
  std::vector<std::string> orbit_names;
  std::vector<ChannelInfo> channels;
  std::vector<VarInfo> disc_vars;
  std::vector<VarInfo> cont_vars;
  int n_disc = 0;
  int n_cont = 0;
  std::vector<int64_t> disc_init;
  std::vector<double> cont_init;
  std::vector<RtInstance> instances;
  std::map<std::string, double> consts;  // model constants, kept for queries

  int instance_index(const std::string& name) const {
    for (std::size_t i = 0; i < instances.size(); ++i)
      if (instances[i].name == name) return static_cast<int>(i);
    return -1;
  }

  const VarInfo* find_var(const std::string& name) const {
    for (const auto& v : disc_vars)
      if (v.name == name) return &v;
    for (const auto& v : cont_vars)
      if (v.name == name) return &v;
    return nullptr;
  }

  int channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i].name == name) return static_cast<int>(i);
    return -1;
  }

  /// True when no location of any instance assigns a nonzero rate to any
  /// continuous variable — the fragment the exhaustive checker accepts.
  bool untimed() const {
    for (const auto& inst : instances)
      for (const auto& loc : inst.locs)
        for (const auto& [slot, rate] : loc.rates) {
          (void)slot;
          if (!is_const(rate) || fold_const(rate) != 0.0) return false;
        }
    return true;
  }
};

namespace detail {

struct BuildScope {
  const std::map<std::string, double>* consts = nullptr;
  const std::map<std::string, double>* params = nullptr;
  const std::map<std::string, VarInfo>* locals = nullptr;
  const std::map<std::string, VarInfo>* globals = nullptr;
  const std::map<std::string, int>* orbit_ids = nullptr;
  std::string where;
};

inline ValidationError build_error(const std::string& msg,
                                   const BuildScope& scope, SrcPos pos) {
  std::string full = msg;
  if (!scope.where.empty()) full += " in " + scope.where;
  return ValidationError(full + pos_suffix(pos));
}

inline void check_const_index(const ExprPtr& index, int size,
                              const std::string& name,
                              const BuildScope& scope, SrcPos pos) {
  if (!index || !is_const(index)) return;
  const double raw = fold_const(index);
  const double rounded = std::nearbyint(raw);
  if (std::abs(raw - rounded) > 1e-9)
    throw build_error("non-integral index for '" + name + "'", scope, pos);
  const int idx = static_cast<int>(rounded);
  if (idx < 0 || idx >= size)
    throw build_error("index " + std::to_string(idx) + " out of range for '" +
                          name + "[" + std::to_string(size) + "]'",
                      scope, pos);
}

inline ExprPtr resolve_expr(const ExprPtr& e, const BuildScope& scope);

inline ExprPtr resolve_var_ref(const Expr& e, const VarInfo& info,
                               const BuildScope& scope) {
  if (info.is_array && !e.a)
    throw build_error("array variable '" + e.name + "' requires an index",
                      scope, e.pos);
  if (!info.is_array && e.a)
    throw build_error("variable '" + e.name + "' is not an array", scope,
                      e.pos);
  ExprPtr index = e.a ? resolve_expr(e.a, scope) : nullptr;
  check_const_index(index, info.size, e.name, scope, e.pos);
  return make_var_ref(info.continuous, info.base, info.size, std::move(index),
                      e.name);
}

inline ExprPtr resolve_expr(const ExprPtr& e, const BuildScope& scope) {
  if (!e) return nullptr;
  switch (e->kind) {
    case ExprKind::kNum:
    case ExprKind::kPi:
      return e;
    case ExprKind::kName: {
      if (!e->a) {
        if (scope.params) {
          auto it = scope.params->find(e->name);
          if (it != scope.params->end()) return make_num(it->second, e->pos);
        }
        if (scope.consts) {
          auto it = scope.consts->find(e->name);
          if (it != scope.consts->end()) return make_num(it->second, e->pos);
        }
      }
      if (scope.locals) {
        auto it = scope.locals->find(e->name);
        if (it != scope.locals->end())
          return resolve_var_ref(*e, it->second, scope);
      }
      if (scope.globals) {
        auto it = scope.globals->find(e->name);
        if (it != scope.globals->end())
          return resolve_var_ref(*e, it->second, scope);
      }
      if (!e->a && scope.orbit_ids) {
        auto it = scope.orbit_ids->find(e->name);
        if (it != scope.orbit_ids->end())
          return make_num(static_cast<double>(it->second), e->pos);
      }
      throw build_error("unknown identifier '" + e->name + "'", scope, e->pos);
    }
    case ExprKind::kDot:
      throw build_error(
          "location reference '" + e->name + "." + e->member +
              "' is only available in queries",
          scope, e->pos);
    case ExprKind::kNot:
    case ExprKind::kNeg:
      return make_unary(e->kind, resolve_expr(e->a, scope), e->pos);
    case ExprKind::kRate:
      return make_rate_call(resolve_expr(e->a, scope),
                            resolve_expr(e->b, scope), e->pos);
    case ExprKind::kDVar:
    case ExprKind::kCVar:
    case ExprKind::kLocPred:
    case ExprKind::kLocIndex:
      return e;  // already resolved (programmatic AST)
    default:
      return make_binary(e->kind, resolve_expr(e->a, scope),
                         resolve_expr(e->b, scope), e->pos);
  }
}

/// Division by anything but a nonzero constant is rejected up front.
inline void check_divisions(const ExprPtr& e, const BuildScope& scope) {
  if (!e) return;
  if (e->kind == ExprKind::kDiv) {
    if (!is_const(e->b) || fold_const(e->b) == 0.0)
      throw build_error("division only by nonzero constants", scope, e->pos);
  }
  check_divisions(e->a, scope);
  check_divisions(e->b, scope);
}

inline bool references_continuous(const ExprPtr& e) {
  if (!e) return false;
  if (e->kind == ExprKind::kCVar || e->kind == ExprKind::kRate) return true;
  return references_continuous(e->a) || references_continuous(e->b);
}

inline ExprPtr resolve_typed(const ExprPtr& e, const BuildScope& scope,
                             ExprType want, const char* what) {
  ExprPtr r = resolve_expr(e, scope);
  check_divisions(r, scope);
  ExprType got;
  try {
    got = infer_type(r);
  } catch (const ValidationError& err) {
    throw build_error(err.what(), scope, e ? e->pos : SrcPos{});
  }
  if (got != want)
    throw build_error(std::string("ill-typed ") + what + ": expected " +
                          (want == ExprType::kBool ? "boolean" : "numeric") +
                          " expression",
                      scope, e ? e->pos : SrcPos{});
  return r;
}

inline double fold_required(const ExprPtr& e, const BuildScope& scope,
                            const char* what) {
  ExprPtr r = resolve_expr(e, scope);
  if (!is_const(r))
    throw build_error(std::string(what) + " must be a constant expression",
                      scope, e ? e->pos : SrcPos{});
  return fold_const(r);
}

inline int64_t fold_integer(const ExprPtr& e, const BuildScope& scope,
                            const char* what) {
  const double v = fold_required(e, scope, what);
  const double rounded = std::nearbyint(v);
  if (std::abs(v - rounded) > 1e-9)
    throw build_error(std::string(what) + " must be an integer", scope,
                      e ? e->pos : SrcPos{});
  return static_cast<int64_t>(rounded);
}

}  // namespace detail

/// Validates a model definition and instantiates it into a Network.
/// Throws ValidationError describing the first problem found.
inline Network build_network(const ModelDef& def) {
  using detail::BuildScope;
  Network net;
  std::map<std::string, double> consts;
  std::map<std::string, int> orbit_ids;
  std::map<std::string, VarInfo> globals;
  std::map<std::string, const TemplateDecl*> templates;
  std::set<std::string> top_names;

  auto claim_name = [&](const std::string& name, SrcPos pos) {
    if (!top_names.insert(name).second)
      throw ValidationError("duplicate declaration '" + name + "'" +
                            detail::pos_suffix(pos));
  };

  BuildScope top;
  top.consts = &consts;
  top.globals = &globals;
  top.orbit_ids = &orbit_ids;

  // First pass: top-level declarations in order.
  std::vector<const InstanceDecl*> instance_decls;
  for (const auto& item : def.items) {
    if (const auto* c = std::get_if<ConstDecl>(&item)) {
      claim_name(c->name, c->pos);
      consts[c->name] = detail::fold_required(c->value, top, "const value");
    } else if (const auto* o = std::get_if<OrbitDecl>(&item)) {
      claim_name(o->name, o->pos);
      try {
        net.orbits.push_back(make_orbit(o->a, o->e, o->period));
      } catch (const DomainError& err) {
        throw ValidationError(std::string("orbit '") + o->name +
                              "': " + err.what() + detail::pos_suffix(o->pos));
      }
      net.orbit_names.push_back(o->name);
      orbit_ids[o->name] = static_cast<int>(net.orbits.size()) - 1;
    } else if (const auto* ch = std::get_if<ChannelDecl>(&item)) {
      claim_name(ch->name, ch->pos);
      if (ch->arity && *ch->arity <= 0)
        throw ValidationError("channel '" + ch->name +
                              "' arity must be positive" +
                              detail::pos_suffix(ch->pos));
      net.channels.push_back({ch->name, ch->arity});
    } else if (const auto* v = std::get_if<VarDeclAst>(&item)) {
      claim_name(v->name, v->pos);
      if (v->size && *v->size <= 0)
        throw ValidationError("array size must be positive for '" + v->name +
                              "'" + detail::pos_suffix(v->pos));
      VarInfo info;
      info.name = v->name;
      info.size = v->size.value_or(1);
      info.is_array = v->size.has_value();
      info.continuous = v->continuous;
      info.owner = -1;
      info.base = v->continuous ? net.n_cont : net.n_disc;
      std::vector<double> init(static_cast<std::size_t>(info.size), 0.0);
      if (!v->init.empty()) {
        if (v->braced) {
          if (static_cast<int>(v->init.size()) != info.size)
            throw ValidationError(
                "initializer list size mismatch for '" + v->name + "'" +
                detail::pos_suffix(v->pos));
          for (std::size_t i = 0; i < v->init.size(); ++i)
            init[i] = detail::fold_required(v->init[i], top, "initializer");
        } else {
          const double x =
              detail::fold_required(v->init.front(), top, "initializer");
          for (auto& slot : init) slot = x;
        }
      }
      if (v->continuous) {
        net.n_cont += info.size;
        for (double x : init) net.cont_init.push_back(x);
        net.cont_vars.push_back(info);
      } else {
        net.n_disc += info.size;
        for (double x : init) {
          const double rounded = std::nearbyint(x);
          if (std::abs(x - rounded) > 1e-9)
            throw ValidationError("discrete variable '" + v->name +
                                  "' initialized with non-integer" +
                                  detail::pos_suffix(v->pos));
          net.disc_init.push_back(static_cast<int64_t>(rounded));
        }
        net.disc_vars.push_back(info);
      }
      globals[v->name] = info;
    } else if (const auto* t = std::get_if<TemplateDecl>(&item)) {
      claim_name(t->name, t->pos);
      templates[t->name] = t;
    } else if (const auto* inst = std::get_if<InstanceDecl>(&item)) {
      claim_name(inst->name, inst->pos);
      instance_decls.push_back(inst);
    }
  }

  // Template structural checks, independent of instantiation.
  for (const auto& [tname, t] : templates) {
    std::set<std::string> loc_names;
    int initials = 0;
    for (const auto& loc : t->locations) {
      if (!loc_names.insert(loc.name).second)
        throw ValidationError("duplicate location '" + loc.name +
                              "' in template " + tname +
                              detail::pos_suffix(loc.pos));
      if (loc.initial) ++initials;
    }
    if (initials == 0)
      throw ValidationError("missing initial location in template " + tname +
                            detail::pos_suffix(t->pos));
    if (initials > 1)
      throw ValidationError("multiple initial locations in template " + tname +
                            detail::pos_suffix(t->pos));
    for (const auto& edge : t->edges) {
      if (!loc_names.count(edge.src))
        throw ValidationError("edge source '" + edge.src +
                              "' is not a location of template " + tname +
                              detail::pos_suffix(edge.pos));
      if (!loc_names.count(edge.dst))
        throw ValidationError("edge target '" + edge.dst +
                              "' is not a location of template " + tname +
                              detail::pos_suffix(edge.pos));
    }
    std::set<std::string> param_names;
    for (const auto& p : t->params)
      if (!param_names.insert(p).second)
        throw ValidationError("duplicate parameter '" + p + "' in template " +
                              tname + detail::pos_suffix(t->pos));
  }

  // Instantiate.
  for (const auto* decl : instance_decls) {
    auto it = templates.find(decl->template_name);
    if (it == templates.end())
      throw ValidationError("unknown template '" + decl->template_name +
                            "' for instance '" + decl->name + "'" +
                            detail::pos_suffix(decl->pos));
    const TemplateDecl& tmpl = *it->second;
    if (decl->args.size() != tmpl.params.size())
      throw ValidationError(
          "instance '" + decl->name + "' passes " +
          std::to_string(decl->args.size()) + " argument(s), template " +
          tmpl.name + " expects " + std::to_string(tmpl.params.size()) +
          detail::pos_suffix(decl->pos));

    std::map<std::string, double> params;
    for (std::size_t i = 0; i < decl->args.size(); ++i)
      params[tmpl.params[i]] = detail::fold_required(
          decl->args[i], top, "instance argument");

    BuildScope scope = top;
    scope.params = &params;
    scope.where = "instance '" + decl->name + "'";

    // Local discrete variables get slots appended to the global layout.
    std::map<std::string, VarInfo> locals;
    for (const auto& v : tmpl.vars) {
      if (v.continuous)
        throw ValidationError("continuous variables must be global: '" +
                              v.name + "' in template " + tmpl.name +
                              detail::pos_suffix(v.pos));
      if (locals.count(v.name))
        throw ValidationError("duplicate variable '" + v.name +
                              "' in template " + tmpl.name +
                              detail::pos_suffix(v.pos));
      if (v.size && *v.size <= 0)
        throw ValidationError("array size must be positive for '" + v.name +
                              "'" + detail::pos_suffix(v.pos));
      VarInfo info;
      info.name = decl->name + "." + v.name;
      info.size = v.size.value_or(1);
      info.is_array = v.size.has_value();
      info.continuous = false;
      info.owner = static_cast<int>(net.instances.size());
      info.base = net.n_disc;
      net.n_disc += info.size;
      std::vector<int64_t> init(static_cast<std::size_t>(info.size), 0);
      if (!v.init.empty()) {
        if (v.braced) {
          if (static_cast<int>(v.init.size()) != info.size)
            throw ValidationError("initializer list size mismatch for '" +
                                  v.name + "'" + detail::pos_suffix(v.pos));
          for (std::size_t i = 0; i < v.init.size(); ++i)
            init[i] = detail::fold_integer(v.init[i], scope, "initializer");
        } else {
          const int64_t x =
              detail::fold_integer(v.init.front(), scope, "initializer");
          for (auto& slot : init) slot = x;
        }
      }
      for (int64_t x : init) net.disc_init.push_back(x);
      net.disc_vars.push_back(info);
      locals[v.name] = info;
    }
    scope.locals = &locals;

    RtInstance inst;
    inst.name = decl->name;
    inst.template_name = tmpl.name;

    for (std::size_t li = 0; li < tmpl.locations.size(); ++li) {
      const LocationAst& loc = tmpl.locations[li];
      BuildScope lscope = scope;
      lscope.where = "location '" + loc.name + "' of " + scope.where;
      RtLocation rt;
      rt.name = loc.name;
      rt.accepting = loc.accepting;
      if (loc.initial) inst.init_loc = static_cast<int>(li);
      if (loc.invariant) {
        rt.invariant = detail::resolve_typed(loc.invariant, lscope,
                                             ExprType::kBool, "invariant");
        rt.invariant_on_cont = detail::references_continuous(rt.invariant);
      }
      if (loc.exp_rate) {
        if (!(*loc.exp_rate > 0.0))
          throw detail::build_error("exponential delay rate must be positive",
                                    lscope, loc.pos);
        rt.exp_rate = *loc.exp_rate;
      }
      for (const auto& rate : loc.rates) {
        ExprPtr target = make_name(rate.var, rate.index, rate.pos);
        ExprPtr resolved = detail::resolve_expr(target, lscope);
        if (resolved->kind != ExprKind::kCVar)
          throw detail::build_error(
              "rate target '" + rate.var + "' must be a continuous variable",
              lscope, rate.pos);
        int offset = 0;
        if (resolved->a) {
          if (!is_const(resolved->a))
            throw detail::build_error(
                "rate target index must be constant after instantiation",
                lscope, rate.pos);
          offset = static_cast<int>(std::nearbyint(fold_const(resolved->a)));
        }
        ExprPtr value = detail::resolve_typed(rate.value, lscope,
                                              ExprType::kNum, "rate");
        rt.rates.emplace_back(resolved->slot + offset, std::move(value));
      }
      inst.locs.push_back(std::move(rt));
    }

    for (const auto& edge : tmpl.edges) {
      BuildScope escope = scope;
      escope.where = "edge " + edge.src + " -> " + edge.dst + " of " +
                     scope.where;
      RtEdge rt;
      rt.src = inst.location_index(edge.src);
      rt.dst = inst.location_index(edge.dst);
      if (edge.guard)
        rt.guard = detail::resolve_typed(edge.guard, escope, ExprType::kBool,
                                         "guard");
      if (edge.sync) {
        rt.channel = net.channel_index(edge.sync->channel);
        if (rt.channel < 0)
          throw detail::build_error(
              "unknown channel '" + edge.sync->channel + "'", escope,
              edge.sync->pos);
        const ChannelInfo& ch = net.channels[static_cast<std::size_t>(
            rt.channel)];
        if (ch.arity && !edge.sync->index)
          throw detail::build_error("channel '" + ch.name +
                                        "' requires an index",
                                    escope, edge.sync->pos);
        if (!ch.arity && edge.sync->index)
          throw detail::build_error("channel '" + ch.name + "' is scalar",
                                    escope, edge.sync->pos);
        if (edge.sync->index) {
          rt.chan_index = detail::resolve_typed(edge.sync->index, escope,
                                                ExprType::kNum,
                                                "channel index");
          if (is_const(rt.chan_index)) {
            const double raw = fold_const(rt.chan_index);
            const double rounded = std::nearbyint(raw);
            if (std::abs(raw - rounded) > 1e-9 || rounded < 0.0 ||
                rounded >= static_cast<double>(*ch.arity))
              throw detail::build_error(
                  "channel index " + detail::num_to_string(raw) +
                      " out of range for '" + ch.name + "[" +
                      std::to_string(*ch.arity) + "]'",
                  escope, edge.sync->pos);
          }
        }
        rt.emit = edge.sync->emit;
      }
      for (const auto& up : edge.updates) {
        ExprPtr target = make_name(up.name, up.index, up.pos);
        ExprPtr resolved = detail::resolve_expr(target, escope);
        if (resolved->kind != ExprKind::kDVar &&
            resolved->kind != ExprKind::kCVar)
          throw detail::build_error(
              "update target '" + up.name + "' is not a variable", escope,
              up.pos);
        RtUpdate u;
        u.continuous = resolved->kind == ExprKind::kCVar;
        u.base = resolved->slot;
        u.size = resolved->size;
        u.index = resolved->a;
        u.value = detail::resolve_typed(up.value, escope, ExprType::kNum,
                                        "update value");
        u.display = up.name;
        rt.updates.push_back(std::move(u));
      }
      inst.edges.push_back(std::move(rt));
    }
    net.instances.push_back(std::move(inst));
  }

  net.consts = std::move(consts);
  return net;
}

}  // namespace ksmc
