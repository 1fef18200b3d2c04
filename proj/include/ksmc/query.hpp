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

#include <string>
#include <variant>
#include <vector>

#include "ksmc/dsl.hpp"
#include "ksmc/network.hpp"

namespace ksmc {

/// Resolves a parsed query expression against a network. `inst.loc` becomes
/// the numeric location index of the instance; `inst.<location>` becomes a
/// predicate that is true iff the instance is at that location;
/// `inst.<variable>` reaches a template-local variable. Plain identifiers
/// resolve to global variables, then model constants.
inline ExprPtr bind_query_expr(const ExprPtr& e, const Network& net) {
  if (!e) return nullptr;
  switch (e->kind) {
    case ExprKind::kNum:
    case ExprKind::kPi:
    case ExprKind::kDVar:
    case ExprKind::kCVar:
    case ExprKind::kLocPred:
    case ExprKind::kLocIndex:
      return e;
    case ExprKind::kName: {
      if (!e->a) {
        auto it = net.consts.find(e->name);
        if (it != net.consts.end() && !net.find_var(e->name))
          return make_num(it->second, e->pos);
      }
      const VarInfo* var = net.find_var(e->name);
      if (!var)
        throw ValidationError("unknown identifier '" + e->name + "' in query" +
                              detail::pos_suffix(e->pos));
      if (var->is_array && !e->a)
        throw ValidationError("array variable '" + e->name +
                              "' requires an index" +
                              detail::pos_suffix(e->pos));
      if (!var->is_array && e->a)
        throw ValidationError("variable '" + e->name + "' is not an array" +
                              detail::pos_suffix(e->pos));
      ExprPtr index = e->a ? bind_query_expr(e->a, net) : nullptr;
      detail::check_const_index(index, var->size, e->name, {}, e->pos);
      return make_var_ref(var->continuous, var->base, var->size,
                          std::move(index), e->name);
    }
    case ExprKind::kDot: {
      const int inst = net.instance_index(e->name);
      if (inst < 0)
        throw ValidationError("unknown instance '" + e->name + "' in query" +
                              detail::pos_suffix(e->pos));
      if (e->member == "loc") return make_loc_index(inst, e->name);
      const int loc = net.instances[static_cast<std::size_t>(inst)]
                          .location_index(e->member);
      if (loc >= 0) return make_loc_pred(inst, loc, e->name, e->member);
      const VarInfo* var = net.find_var(e->name + "." + e->member);
      if (var && !var->is_array)
        return make_var_ref(var->continuous, var->base, var->size, nullptr,
                            e->name + "." + e->member);
      throw ValidationError("instance '" + e->name + "' has no location or "
                            "variable named '" + e->member + "'" +
                            detail::pos_suffix(e->pos));
    }
    case ExprKind::kNot:
    case ExprKind::kNeg:
      return make_unary(e->kind, bind_query_expr(e->a, net), e->pos);
    case ExprKind::kRate:
      return make_rate_call(bind_query_expr(e->a, net),
                            bind_query_expr(e->b, net), e->pos);
    default:
      return make_binary(e->kind, bind_query_expr(e->a, net),
                         bind_query_expr(e->b, net), e->pos);
  }
}

inline ExprPtr bind_query_expr(const ExprPtr& e, const Network& net,
                               ExprType want, const char* what) {
  ExprPtr bound = bind_query_expr(e, net);
  if (infer_type(bound) != want)
    throw ValidationError(std::string("query ") + what + " must be " +
                          (want == ExprType::kBool ? "boolean" : "numeric"));
  return bound;
}

/// A query with its expressions resolved against a concrete network.
inline Query bind_query(const Query& q, const Network& net) {
  if (std::holds_alternative<QueryNoDeadlock>(q)) return q;
  if (const auto* ev = std::get_if<QueryEventually>(&q)) {
    QueryEventually out;
    out.goal = bind_query_expr(ev->goal, net, ExprType::kBool, "goal");
    return out;
  }
  if (const auto* pr = std::get_if<QueryProbReach>(&q)) {
    QueryProbReach out;
    out.bound = pr->bound;
    out.goal = bind_query_expr(pr->goal, net, ExprType::kBool, "goal");
    return out;
  }
  const auto& sim = std::get<QuerySimulate>(q);
  QuerySimulate out;
  out.bound = sim.bound;
  for (const auto& obs : sim.observables)
    out.observables.push_back(
        bind_query_expr(obs, net, ExprType::kNum, "observable"));
  return out;
}

}  // namespace ksmc
