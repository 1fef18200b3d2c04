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

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ksmc/expr.hpp"

namespace ksmc {

/// Abstract syntax of the .ksm model language. The AST preserves declaration
/// order and surface choices (e.g. braced vs scalar initializers) so that
/// parse/print round-trips are identities at the AST level. Source positions
/// are diagnostics only and excluded from equality.

struct ConstDecl {
  std::string name;
  ExprPtr value;
  SrcPos pos;
};

struct OrbitDecl {
  std::string name;
  double a = 0.0;
  double e = 0.0;
  double period = 0.0;
  SrcPos pos;
};

struct ChannelDecl {
  std::string name;
  std::optional<int> arity;  // nullopt: scalar channel
  SrcPos pos;
};

struct VarDeclAst {
  bool continuous = false;
  std::string name;
  std::optional<int> size;      // nullopt: scalar
  std::vector<ExprPtr> init;    // empty: default 0
  bool braced = false;          // initializer written as {..}
  SrcPos pos;
};

struct SyncAst {
  std::string channel;
  ExprPtr index;  // null for scalar channels
  bool emit = false;
  SrcPos pos;
};

struct AssignAst {
  std::string name;
  ExprPtr index;  // null for scalars
  ExprPtr value;
  SrcPos pos;
};

struct RateAst {
  std::string var;
  ExprPtr index;  // null for scalars
  ExprPtr value;
  SrcPos pos;
};

struct LocationAst {
  std::string name;
  bool initial = false;
  bool accepting = false;
  ExprPtr invariant;               // null: none
  std::vector<RateAst> rates;
  std::optional<double> exp_rate;  // delay rate for unbounded waits
  SrcPos pos;
};

struct EdgeAst {
  std::string src;
  std::string dst;
  ExprPtr guard;  // null: true
  std::optional<SyncAst> sync;
  std::vector<AssignAst> updates;
  SrcPos pos;
};

struct TemplateDecl {
  std::string name;
  std::vector<std::string> params;
  std::vector<VarDeclAst> vars;
  std::vector<LocationAst> locations;
  std::vector<EdgeAst> edges;
  SrcPos pos;
};

struct InstanceDecl {
  std::string name;
  std::string template_name;
  std::vector<ExprPtr> args;
  SrcPos pos;
};

using ModelItem = std::variant<ConstDecl, OrbitDecl, ChannelDecl, VarDeclAst,
                               TemplateDecl, InstanceDecl>;

struct ModelDef {
  std::vector<ModelItem> items;
  std::string filename;
};

// --- structural equality (positions and filenames ignored) -------------------

inline bool ast_equal(const ConstDecl& x, const ConstDecl& y) {
  return x.name == y.name && expr_equal(x.value, y.value);
}

inline bool ast_equal(const OrbitDecl& x, const OrbitDecl& y) {
  return x.name == y.name && x.a == y.a && x.e == y.e && x.period == y.period;
}

inline bool ast_equal(const ChannelDecl& x, const ChannelDecl& y) {
  return x.name == y.name && x.arity == y.arity;
}

inline bool ast_equal(const VarDeclAst& x, const VarDeclAst& y) {
  if (x.continuous != y.continuous || x.name != y.name || x.size != y.size ||
      x.braced != y.braced || x.init.size() != y.init.size())
    return false;
  for (std::size_t i = 0; i < x.init.size(); ++i)
    if (!expr_equal(x.init[i], y.init[i])) return false;
  return true;
}

inline bool ast_equal(const SyncAst& x, const SyncAst& y) {
  return x.channel == y.channel && x.emit == y.emit &&
         expr_equal(x.index, y.index);
}

inline bool ast_equal(const AssignAst& x, const AssignAst& y) {
  return x.name == y.name && expr_equal(x.index, y.index) &&
         expr_equal(x.value, y.value);
}

inline bool ast_equal(const RateAst& x, const RateAst& y) {
  return x.var == y.var && expr_equal(x.index, y.index) &&
         expr_equal(x.value, y.value);
}

inline bool ast_equal(const LocationAst& x, const LocationAst& y) {
  if (x.name != y.name || x.initial != y.initial ||
      x.accepting != y.accepting || x.exp_rate != y.exp_rate ||
      !expr_equal(x.invariant, y.invariant) || x.rates.size() != y.rates.size())
    return false;
  for (std::size_t i = 0; i < x.rates.size(); ++i)
    if (!ast_equal(x.rates[i], y.rates[i])) return false;
  return true;
}

inline bool ast_equal(const EdgeAst& x, const EdgeAst& y) {
  if (x.src != y.src || x.dst != y.dst || !expr_equal(x.guard, y.guard) ||
      x.sync.has_value() != y.sync.has_value() ||
      x.updates.size() != y.updates.size())
    return false;
  if (x.sync && !ast_equal(*x.sync, *y.sync)) return false;
  for (std::size_t i = 0; i < x.updates.size(); ++i)
    if (!ast_equal(x.updates[i], y.updates[i])) return false;
  return true;
}

inline bool ast_equal(const TemplateDecl& x, const TemplateDecl& y) {
  if (x.name != y.name || x.params != y.params ||
      x.vars.size() != y.vars.size() ||
      x.locations.size() != y.locations.size() ||
      x.edges.size() != y.edges.size())
    return false;
  for (std::size_t i = 0; i < x.vars.size(); ++i)
    if (!ast_equal(x.vars[i], y.vars[i])) return false;
  for (std::size_t i = 0; i < x.locations.size(); ++i)
    if (!ast_equal(x.locations[i], y.locations[i])) return false;
  for (std::size_t i = 0; i < x.edges.size(); ++i)
    if (!ast_equal(x.edges[i], y.edges[i])) return false;
  return true;
}

inline bool ast_equal(const InstanceDecl& x, const InstanceDecl& y) {
  if (x.name != y.name || x.template_name != y.template_name ||
      x.args.size() != y.args.size())
    return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!expr_equal(x.args[i], y.args[i])) return false;
  return true;
}

inline bool ast_equal(const ModelItem& x, const ModelItem& y) {
  if (x.index() != y.index()) return false;
  return std::visit(
      [&](const auto& xv) {
        using T = std::decay_t<decltype(xv)>;
        return ast_equal(xv, std::get<T>(y));
      },
      x);
}

inline bool ast_equal(const ModelDef& x, const ModelDef& y) {
  if (x.items.size() != y.items.size()) return false;
  for (std::size_t i = 0; i < x.items.size(); ++i)
    if (!ast_equal(x.items[i], y.items[i])) return false;
  return true;
}

}  // namespace ksmc
