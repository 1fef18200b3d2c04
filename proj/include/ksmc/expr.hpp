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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ksmc/error.hpp"
#include "ksmc/orbital.hpp"

namespace ksmc {

/// Expression trees shared by the model AST, the validated network and the
/// query layer. Freshly parsed trees contain kName/kDot references; network
/// building resolves those into kDVar/kCVar/kLocPred/kLocIndex slots (or
/// folds them into literals). Trees are immutable after construction and
/// shared via shared_ptr, so copies are cheap and thread-safe.

struct SrcPos {
  int line = 0;
  int col = 0;
};

enum class ExprKind {
  kNum,       // numeric literal
  kPi,        // built-in constant PI
  kName,      // unresolved identifier, optional index in `a`
  kDot,       // unresolved `instance.member` (query sugar)
  kDVar,      // discrete variable slot, optional index in `a`
  kCVar,      // continuous variable slot, optional index in `a`
  kLocPred,   // instance `slot` is at location `loc` (bool)
  kLocIndex,  // current location index of instance `slot` (num)
  kAdd,
  kSub,
  kMul,
  kDiv,
  kLt,
  kLe,
  kEq,
  kGe,
  kGt,
  kNe,
  kAnd,
  kOr,
  kNot,
  kNeg,
  kRate,  // kepler_rate(orbit index expr `a`, anomaly expr `b`)
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;
  double num = 0.0;    // kNum
  std::string name;    // kName / kDot instance / diagnostics for resolved refs
  std::string member;  // kDot member
  int slot = -1;       // base offset (vars) or instance index (loc nodes)
  int size = 0;        // array size for indexed refs, 0 for scalars
  int loc = -1;        // kLocPred target location index
  ExprPtr a, b;
  SrcPos pos;
};

// --- constructors ----------------------------------------------------------

inline ExprPtr make_num(double v, SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kNum;
  e->num = v;
  e->pos = p;
  return e;
}

inline ExprPtr make_pi(SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kPi;
  e->pos = p;
  return e;
}

inline ExprPtr make_name(std::string n, ExprPtr index = nullptr, SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kName;
  e->name = std::move(n);
  e->a = std::move(index);
  e->pos = p;
  return e;
}

inline ExprPtr make_dot(std::string inst, std::string member, SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kDot;
  e->name = std::move(inst);
  e->member = std::move(member);
  e->pos = p;
  return e;
}

inline ExprPtr make_binary(ExprKind k, ExprPtr lhs, ExprPtr rhs, SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(lhs);
  e->b = std::move(rhs);
  e->pos = p;
  return e;
}

inline ExprPtr make_unary(ExprKind k, ExprPtr operand, SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->a = std::move(operand);
  e->pos = p;
  return e;
}

inline ExprPtr make_rate_call(ExprPtr orbit_index, ExprPtr anomaly,
                              SrcPos p = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kRate;
  e->a = std::move(orbit_index);
  e->b = std::move(anomaly);
  e->pos = p;
  return e;
}

inline ExprPtr make_var_ref(bool continuous, int base, int size, ExprPtr index,
                            std::string display_name) {
  auto e = std::make_shared<Expr>();
  e->kind = continuous ? ExprKind::kCVar : ExprKind::kDVar;
  e->slot = base;
  e->size = size;
  e->a = std::move(index);
  e->name = std::move(display_name);
  return e;
}

inline ExprPtr make_loc_pred(int instance, int location, std::string inst_name,
                             std::string loc_name) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kLocPred;
  e->slot = instance;
  e->loc = location;
  e->name = std::move(inst_name);
  e->member = std::move(loc_name);
  return e;
}

inline ExprPtr make_loc_index(int instance, std::string inst_name) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::kLocIndex;
  e->slot = instance;
  e->name = std::move(inst_name);
  e->member = "loc";
  return e;
}

// --- structural equality (source positions ignored) -------------------------

inline bool expr_equal(const ExprPtr& x, const ExprPtr& y) {
  if (!x || !y) return !x && !y;
  if (x->kind != y->kind) return false;
  if (x->kind == ExprKind::kNum && x->num != y->num) return false;
  if (x->name != y->name || x->member != y->member) return false;
  if (x->slot != y->slot || x->size != y->size || x->loc != y->loc)
    return false;
  return expr_equal(x->a, y->a) && expr_equal(x->b, y->b);
}

// --- typing -----------------------------------------------------------------

enum class ExprType { kNum, kBool };

namespace detail {
inline std::string pos_suffix(const SrcPos& p) {
  if (p.line <= 0) return "";
  return " at " + std::to_string(p.line) + ":" + std::to_string(p.col);
}
}  // namespace detail

/// Infers the type of a resolved or unresolved expression tree; throws
/// ValidationError on a type mismatch. kName/kDot nodes count as numeric
/// except a bare kDot, whose type is decided at bind time (assume bool).
inline ExprType infer_type(const ExprPtr& e) {
  if (!e) throw ValidationError("missing expression");
  switch (e->kind) {
    case ExprKind::kNum:
    case ExprKind::kPi:
    case ExprKind::kDVar:
    case ExprKind::kCVar:
    case ExprKind::kLocIndex:
    case ExprKind::kName:
      if (e->a && infer_type(e->a) != ExprType::kNum)
        throw ValidationError("array index must be numeric" +
                              detail::pos_suffix(e->pos));
      return ExprType::kNum;
    case ExprKind::kDot:
      return ExprType::kBool;  // instance.location predicate
    case ExprKind::kLocPred:
      return ExprType::kBool;
    case ExprKind::kAdd:
    case ExprKind::kSub:
    case ExprKind::kMul:
    case ExprKind::kDiv:
      if (infer_type(e->a) != ExprType::kNum ||
          infer_type(e->b) != ExprType::kNum)
        throw ValidationError("arithmetic requires numeric operands" +
                              detail::pos_suffix(e->pos));
      return ExprType::kNum;
    case ExprKind::kLt:
    case ExprKind::kLe:
    case ExprKind::kEq:
    case ExprKind::kGe:
    case ExprKind::kGt:
    case ExprKind::kNe:
      if (infer_type(e->a) != ExprType::kNum ||
          infer_type(e->b) != ExprType::kNum)
        throw ValidationError("comparison requires numeric operands" +
                              detail::pos_suffix(e->pos));
      return ExprType::kBool;
    case ExprKind::kAnd:
    case ExprKind::kOr:
      if (infer_type(e->a) != ExprType::kBool ||
          infer_type(e->b) != ExprType::kBool)
        throw ValidationError("boolean operator requires boolean operands" +
                              detail::pos_suffix(e->pos));
      return ExprType::kBool;
    case ExprKind::kNot:
      if (infer_type(e->a) != ExprType::kBool)
        throw ValidationError("'!' requires a boolean operand" +
                              detail::pos_suffix(e->pos));
      return ExprType::kBool;
    case ExprKind::kNeg:
      if (infer_type(e->a) != ExprType::kNum)
        throw ValidationError("negation requires a numeric operand" +
                              detail::pos_suffix(e->pos));
      return ExprType::kNum;
    case ExprKind::kRate:
      if (infer_type(e->a) != ExprType::kNum ||
          infer_type(e->b) != ExprType::kNum)
        throw ValidationError("kepler_rate requires numeric arguments" +
                              detail::pos_suffix(e->pos));
      return ExprType::kNum;
  }
  throw ValidationError("unreachable expression kind");
}

// --- constant folding --------------------------------------------------------

inline bool is_const(const ExprPtr& e) {
  if (!e) return false;
  switch (e->kind) {
    case ExprKind::kNum:
    case ExprKind::kPi:
      return true;
    case ExprKind::kAdd:
    case ExprKind::kSub:
    case ExprKind::kMul:
    case ExprKind::kDiv:
      return is_const(e->a) && is_const(e->b);
    case ExprKind::kNeg:
      return is_const(e->a);
    default:
      return false;
  }
}

inline double fold_const(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::kNum:
      return e->num;
    case ExprKind::kPi:
      return std::numbers::pi;
    case ExprKind::kAdd:
      return fold_const(e->a) + fold_const(e->b);
    case ExprKind::kSub:
      return fold_const(e->a) - fold_const(e->b);
    case ExprKind::kMul:
      return fold_const(e->a) * fold_const(e->b);
    case ExprKind::kDiv:
      return fold_const(e->a) / fold_const(e->b);
    case ExprKind::kNeg:
      return -fold_const(e->a);
    default:
      throw ValidationError("expression is not a constant" +
                            detail::pos_suffix(e->pos));
  }
}

// --- evaluation ---------------------------------------------------------------

/// Snapshot view of a state for expression evaluation.
struct EvalCtx {
  std::span<const int32_t> locs;
  std::span<const int64_t> disc;
  std::span<const double> cont;
  const std::vector<Orbit>* orbits = nullptr;
};

inline double eval_num(const Expr& e, const EvalCtx& ctx);

inline int eval_index(const Expr& ref, const EvalCtx& ctx) {
  const double raw = eval_num(*ref.a, ctx);
  const double rounded = std::nearbyint(raw);
  if (std::abs(raw - rounded) > 1e-9)
    throw EvalError("non-integral index for '" + ref.name + "'");
  const int idx = static_cast<int>(rounded);
  if (idx < 0 || idx >= ref.size)
    throw EvalError("index " + std::to_string(idx) + " out of range for '" +
                    ref.name + "[" + std::to_string(ref.size) + "]'");
  return idx;
}

inline bool eval_bool(const Expr& e, const EvalCtx& ctx) {
  switch (e.kind) {
    case ExprKind::kLocPred:
      return ctx.locs[static_cast<std::size_t>(e.slot)] == e.loc;
    case ExprKind::kLt:
      return eval_num(*e.a, ctx) < eval_num(*e.b, ctx);
    case ExprKind::kLe:
      return eval_num(*e.a, ctx) <= eval_num(*e.b, ctx);
    case ExprKind::kEq:
      return eval_num(*e.a, ctx) == eval_num(*e.b, ctx);
    case ExprKind::kGe:
      return eval_num(*e.a, ctx) >= eval_num(*e.b, ctx);
    case ExprKind::kGt:
      return eval_num(*e.a, ctx) > eval_num(*e.b, ctx);
    case ExprKind::kNe:
      return eval_num(*e.a, ctx) != eval_num(*e.b, ctx);
    case ExprKind::kAnd:
      return eval_bool(*e.a, ctx) && eval_bool(*e.b, ctx);
    case ExprKind::kOr:
      return eval_bool(*e.a, ctx) || eval_bool(*e.b, ctx);
    case ExprKind::kNot:
      return !eval_bool(*e.a, ctx);
    default:
      throw EvalError("expression is not boolean");
  }
}

inline double eval_num(const Expr& e, const EvalCtx& ctx) {
  switch (e.kind) {
    case ExprKind::kNum:
      return e.num;
    case ExprKind::kPi:
      return std::numbers::pi;
    case ExprKind::kDVar: {
      const int idx = e.a ? eval_index(e, ctx) : 0;
      return static_cast<double>(
          ctx.disc[static_cast<std::size_t>(e.slot + idx)]);
    }
    case ExprKind::kCVar: {
      const int idx = e.a ? eval_index(e, ctx) : 0;
      return ctx.cont[static_cast<std::size_t>(e.slot + idx)];
    }
    case ExprKind::kLocIndex:
      return static_cast<double>(ctx.locs[static_cast<std::size_t>(e.slot)]);
    case ExprKind::kAdd:
      return eval_num(*e.a, ctx) + eval_num(*e.b, ctx);
    case ExprKind::kSub:
      return eval_num(*e.a, ctx) - eval_num(*e.b, ctx);
    case ExprKind::kMul:
      return eval_num(*e.a, ctx) * eval_num(*e.b, ctx);
    case ExprKind::kDiv:
      return eval_num(*e.a, ctx) / eval_num(*e.b, ctx);
    case ExprKind::kNeg:
      return -eval_num(*e.a, ctx);
    case ExprKind::kRate: {
      if (!ctx.orbits) throw EvalError("no orbits bound for kepler_rate");
      const double raw = eval_num(*e.a, ctx);
      const int idx = static_cast<int>(std::nearbyint(raw));
      if (std::abs(raw - idx) > 1e-9 || idx < 0 ||
          idx >= static_cast<int>(ctx.orbits->size()))
        throw EvalError("kepler_rate orbit index " + std::to_string(raw) +
                        " out of range");
      return anomaly_rate((*ctx.orbits)[static_cast<std::size_t>(idx)],
                          eval_num(*e.b, ctx));
    }
    case ExprKind::kName:
    case ExprKind::kDot:
      throw EvalError("unresolved name '" + e.name +
                      "' reached the evaluator");
    default:
      throw EvalError("expression is not numeric");
  }
}

// --- printing -----------------------------------------------------------------

namespace detail {

inline std::string num_to_string(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline int expr_prec(ExprKind k) {
  switch (k) {
    case ExprKind::kOr:
      return 1;
    case ExprKind::kAnd:
      return 2;
    case ExprKind::kLt:
    case ExprKind::kLe:
    case ExprKind::kEq:
    case ExprKind::kGe:
    case ExprKind::kGt:
    case ExprKind::kNe:
      return 3;
    case ExprKind::kAdd:
    case ExprKind::kSub:
      return 4;
    case ExprKind::kMul:
    case ExprKind::kDiv:
      return 5;
    case ExprKind::kNot:
    case ExprKind::kNeg:
      return 6;
    default:
      return 7;
  }
}

inline const char* expr_op(ExprKind k) {
  switch (k) {
    case ExprKind::kOr:
      return "||";
    case ExprKind::kAnd:
      return "&&";
    case ExprKind::kLt:
      return "<";
    case ExprKind::kLe:
      return "<=";
    case ExprKind::kEq:
      return "==";
    case ExprKind::kGe:
      return ">=";
    case ExprKind::kGt:
      return ">";
    case ExprKind::kNe:
      return "!=";
    case ExprKind::kAdd:
      return "+";
    case ExprKind::kSub:
      return "-";
    case ExprKind::kMul:
      return "*";
    case ExprKind::kDiv:
      return "/";
    default:
      return "?";
  }
}

inline void print_expr(const Expr& e, std::string& out, int parent_prec) {
  const int prec = expr_prec(e.kind);
  switch (e.kind) {
    case ExprKind::kNum:
      out += num_to_string(e.num);
      return;
    case ExprKind::kPi:
      out += "PI";
      return;
    case ExprKind::kName:
    case ExprKind::kDVar:
    case ExprKind::kCVar:
      out += e.name;
      if (e.a) {
        out += '[';
        print_expr(*e.a, out, 0);
        out += ']';
      }
      return;
    case ExprKind::kDot:
    case ExprKind::kLocPred:
    case ExprKind::kLocIndex:
      out += e.name;
      out += '.';
      out += e.member;
      return;
    case ExprKind::kRate:
      out += "kepler_rate(";
      print_expr(*e.a, out, 0);
      out += ", ";
      print_expr(*e.b, out, 0);
      out += ')';
      return;
    case ExprKind::kNot:
    case ExprKind::kNeg: {
      const bool parens = prec < parent_prec;
      if (parens) out += '(';
      out += e.kind == ExprKind::kNot ? '!' : '-';
      print_expr(*e.a, out, prec + 1);
      if (parens) out += ')';
      return;
    }
    default: {
      const bool parens = prec < parent_prec;
      // comparisons do not chain, so both operands need the tighter level
      const bool cmp = prec == 3;
      if (parens) out += '(';
      print_expr(*e.a, out, cmp ? prec + 1 : prec);
      out += ' ';
      out += expr_op(e.kind);
      out += ' ';
      print_expr(*e.b, out, prec + 1);
      if (parens) out += ')';
      return;
    }
  }
}

}  // namespace detail

inline std::string expr_to_string(const ExprPtr& e) {
  std::string out;
  if (e) detail::print_expr(*e, out, 0);
  return out;
}

}  // namespace ksmc
