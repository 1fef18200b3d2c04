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

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ksmc/error.hpp"
#include "ksmc/model.hpp"

namespace ksmc {

/// Textual model (.ksm) and query (.ksq) languages.
///
/// Model grammar (keywords literal):
///   model    := item+
///   item     := const | orbit | channel | var | template | instance
///   const    := "const" IDENT "=" expr ";"
///   orbit    := "orbit" IDENT "{" "a" "=" num "," "e" "=" num "," "T" "=" num "}"
///   channel  := "broadcast" "chan" IDENT ("[" INT "]")? ";"
///   var      := ("var" | "cont") IDENT ("[" INT "]")? ("=" init)? ";"
///   init     := expr | "{" expr ("," expr)* "}"
///   template := "template" IDENT "(" params? ")" "{" var* location* edge* "}"
///   location := "location" IDENT "init"? "accepting"? ("invariant" expr)?
///               rateclause* ";"
///   rateclause := "rate" "exp" NUM | "rate" lval "'" "=" expr
///   edge     := "edge" IDENT "->" IDENT ("guard" expr)?
///               ("sync" IDENT ("[" expr "]")? ("!" | "?"))?
///               ("update" assign ("," assign)*)? ";"
///   assign   := lval "=" expr
///   lval     := IDENT ("[" expr "]")?
///   instance := "instance" IDENT "=" IDENT "(" (expr ("," expr)*)? ")" ";"
///
/// Expressions use C-style operators (|| && comparisons + - * / ! unary -),
/// the constant PI (the glyph form is accepted on input), array indexing and
/// the built-in kepler_rate(orbit, anomaly). `#` starts a line comment.
///
/// Queries accept the surface forms
///   A[] not deadlock
///   A<> (expr)
///   Pr[<=B](<> expr)          (also with the unicode bound/diamond glyphs)
///   simulate [<=B] {expr, expr, ...}

struct QueryNoDeadlock {};
struct QueryEventually {
  ExprPtr goal;
};
struct QueryProbReach {
  double bound = 0.0;
  ExprPtr goal;
};
struct QuerySimulate {
  double bound = 0.0;
  std::vector<ExprPtr> observables;
};
using Query =
    std::variant<QueryNoDeadlock, QueryEventually, QueryProbReach,
                 QuerySimulate>;

namespace dsl {

enum class Tok {
  kEnd,
  kIdent,
  kNum,
  kLBrace,
  kRBrace,
  kLParen,
  kRParen,
  kLBrack,
  kRBrack,
  kComma,
  kSemi,
  kAssign,   // =
  kPrime,    // '
  kArrow,    // ->
  kBang,     // !
  kQuestion, // ?
  kPlus,
  kMinus,
  kStar,
  kSlash,
  kLt,
  kLe,
  kEqEq,
  kGe,
  kGt,
  kNe,
  kAndAnd,
  kOrOr,
  kEventually,  // <> or the diamond glyph
  kDot,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  double num = 0.0;
  SrcPos pos;
};

inline const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = {
      "const",    "orbit",  "broadcast", "chan",      "var",
      "cont",     "template", "instance", "location", "edge",
      "guard",    "sync",   "update",    "invariant", "rate",
      "init",     "accepting", "exp",    "PI"};
  return words;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    throw ParseError("expected " + expected +
                         (tok_.kind == Tok::kEnd
                              ? " but reached end of input"
                              : ", found '" + describe(tok_) + "'"),
                     tok_.pos.line, tok_.pos.col);
  }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::kIdent || t.kind == Tok::kNum) return t.text;
    return t.text.empty() ? "<end>" : t.text;
  }

 private:
  void advance() {
    skip_space();
    tok_ = Token{};
    tok_.pos = {line_, col_};
    if (at_end()) {
      tok_.kind = Tok::kEnd;
      return;
    }
    const char c = cur();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(cur())) ||
                           cur() == '_'))
        word.push_back(take());
      tok_.kind = Tok::kIdent;
      tok_.text = std::move(word);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(cur())))
        digits.push_back(take());
      if (!at_end() && cur() == '.') {
        digits.push_back(take());
        while (!at_end() && std::isdigit(static_cast<unsigned char>(cur())))
          digits.push_back(take());
      }
      if (!at_end() && (cur() == 'e' || cur() == 'E')) {
        digits.push_back(take());
        if (!at_end() && (cur() == '+' || cur() == '-'))
          digits.push_back(take());
        while (!at_end() && std::isdigit(static_cast<unsigned char>(cur())))
          digits.push_back(take());
      }
      tok_.kind = Tok::kNum;
      tok_.text = digits;
      try {
        tok_.num = std::stod(digits);
      } catch (...) {
        throw ParseError("malformed number '" + digits + "'", tok_.pos.line,
                         tok_.pos.col);
      }
      return;
    }
    // UTF-8 glyphs: pi, <=, diamond
    if (starts_with("\xcf\x80")) {  // pi
      skip_bytes(2);
      tok_.kind = Tok::kIdent;
      tok_.text = "PI";
      return;
    }
    if (starts_with("\xe2\x89\xa4")) {  // less-or-equal sign
      skip_bytes(3);
      tok_.kind = Tok::kLe;
      tok_.text = "<=";
      return;
    }
    if (starts_with("\xe2\x97\x8a")) {  // white diamond
      skip_bytes(3);
      tok_.kind = Tok::kEventually;
      tok_.text = "<>";
      return;
    }
    auto two = [&](char a, char b, Tok kind) {
      if (cur() == a && pos_ + 1 < text_.size() && text_[pos_ + 1] == b) {
        tok_.kind = kind;
        tok_.text = {a, b};
        skip_bytes(2);
        return true;
      }
      return false;
    };
    if (two('-', '>', Tok::kArrow)) return;
    if (two('<', '=', Tok::kLe)) return;
    if (two('<', '>', Tok::kEventually)) return;
    if (two('>', '=', Tok::kGe)) return;
    if (two('=', '=', Tok::kEqEq)) return;
    if (two('!', '=', Tok::kNe)) return;
    if (two('&', '&', Tok::kAndAnd)) return;
    if (two('|', '|', Tok::kOrOr)) return;
    Tok kind;
    switch (c) {
      case '{': kind = Tok::kLBrace; break;
      case '}': kind = Tok::kRBrace; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      case '[': kind = Tok::kLBrack; break;
      case ']': kind = Tok::kRBrack; break;
      case ',': kind = Tok::kComma; break;
      case ';': kind = Tok::kSemi; break;
      case '=': kind = Tok::kAssign; break;
      case '\'': kind = Tok::kPrime; break;
      case '!': kind = Tok::kBang; break;
      case '?': kind = Tok::kQuestion; break;
      case '+': kind = Tok::kPlus; break;
      case '-': kind = Tok::kMinus; break;
      case '*': kind = Tok::kStar; break;
      case '/': kind = Tok::kSlash; break;
      case '<': kind = Tok::kLt; break;
      case '>': kind = Tok::kGt; break;
      case '.': kind = Tok::kDot; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         line_, col_);
    }
    tok_.kind = kind;
    tok_.text = std::string(1, take());
  }

  bool starts_with(std::string_view s) const {
    return text_.substr(pos_, s.size()) == s;
  }

  void skip_bytes(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) take();
  }

  void skip_space() {
    while (!at_end()) {
      const char c = cur();
      if (c == '#') {
        while (!at_end() && cur() != '\n') take();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else {
        break;
      }
    }
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char cur() const { return text_[pos_]; }

  char take() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  ModelDef parse_model(std::string filename) {
    ModelDef def;
    def.filename = std::move(filename);
    if (lex_.peek().kind == Tok::kEnd)
      throw ParseError("expected declaration", 1, 1);
    while (lex_.peek().kind != Tok::kEnd) def.items.push_back(parse_item());
    check_duplicates(def);
    return def;
  }

  Query parse_query() {
    const Token head = expect_ident("query");
    Query q = [&]() -> Query {
      if (head.text == "A") {
        if (lex_.peek().kind == Tok::kLBrack) {
          lex_.next();
          expect(Tok::kRBrack, "']'");
          expect_word("not");
          expect_word("deadlock");
          return QueryNoDeadlock{};
        }
        expect(Tok::kEventually, "'<>'");
        QueryEventually ev;
        ev.goal = parse_expr();
        return ev;
      }
      if (head.text == "Pr") {
        expect(Tok::kLBrack, "'['");
        expect(Tok::kLe, "'<='");
        const double bound = expect_number();
        expect(Tok::kRBrack, "']'");
        expect(Tok::kLParen, "'('");
        expect(Tok::kEventually, "'<>'");
        QueryProbReach pr;
        pr.bound = bound;
        pr.goal = parse_expr();
        expect(Tok::kRParen, "')'");
        if (!(pr.bound > 0.0))
          throw ParseError("bound must be positive", head.pos.line,
                           head.pos.col);
        return pr;
      }
      if (head.text == "simulate") {
        expect(Tok::kLBrack, "'['");
        expect(Tok::kLe, "'<='");
        const double bound = expect_number();
        expect(Tok::kRBrack, "']'");
        expect(Tok::kLBrace, "'{'");
        QuerySimulate sim;
        sim.bound = bound;
        sim.observables.push_back(parse_expr());
        while (lex_.peek().kind == Tok::kComma) {
          lex_.next();
          sim.observables.push_back(parse_expr());
        }
        expect(Tok::kRBrace, "'}'");
        if (!(sim.bound > 0.0))
          throw ParseError("bound must be positive", head.pos.line,
                           head.pos.col);
        return sim;
      }
      throw ParseError("expected query ('A[]', 'A<>', 'Pr[..]', 'simulate')",
                       head.pos.line, head.pos.col);
    }();
    if (lex_.peek().kind != Tok::kEnd) lex_.fail("end of query");
    return q;
  }

  ExprPtr parse_expr() { return parse_or(); }

 private:
  ModelItem parse_item() {
    const Token& t = lex_.peek();
    if (t.kind != Tok::kIdent) lex_.fail("declaration");
    if (t.text == "const") return parse_const();
    if (t.text == "orbit") return parse_orbit();
    if (t.text == "broadcast") return parse_channel();
    if (t.text == "var" || t.text == "cont") return parse_var();
    if (t.text == "template") return parse_template();
    if (t.text == "instance") return parse_instance();
    lex_.fail("declaration");
  }

  ConstDecl parse_const() {
    ConstDecl c;
    c.pos = lex_.next().pos;  // const
    c.name = expect_name("constant name");
    expect(Tok::kAssign, "'='");
    c.value = parse_expr();
    expect(Tok::kSemi, "';'");
    return c;
  }

  OrbitDecl parse_orbit() {
    OrbitDecl o;
    o.pos = lex_.next().pos;  // orbit
    o.name = expect_name("orbit name");
    expect(Tok::kLBrace, "'{'");
    expect_word("a");
    expect(Tok::kAssign, "'='");
    o.a = expect_signed_number();
    expect(Tok::kComma, "','");
    expect_word("e");
    expect(Tok::kAssign, "'='");
    o.e = expect_signed_number();
    expect(Tok::kComma, "','");
    expect_word("T");
    expect(Tok::kAssign, "'='");
    o.period = expect_signed_number();
    expect(Tok::kRBrace, "'}'");
    return o;
  }

  ChannelDecl parse_channel() {
    ChannelDecl ch;
    ch.pos = lex_.next().pos;  // broadcast
    expect_word("chan");
    ch.name = expect_name("channel name");
    if (lex_.peek().kind == Tok::kLBrack) {
      lex_.next();
      ch.arity = static_cast<int>(expect_number());
      expect(Tok::kRBrack, "']'");
    }
    expect(Tok::kSemi, "';'");
    return ch;
  }

  VarDeclAst parse_var() {
    VarDeclAst v;
    const Token kw = lex_.next();  // var | cont
    v.pos = kw.pos;
    v.continuous = kw.text == "cont";
    v.name = expect_name("variable name");
    if (lex_.peek().kind == Tok::kLBrack) {
      lex_.next();
      v.size = static_cast<int>(expect_number());
      expect(Tok::kRBrack, "']'");
    }
    if (lex_.peek().kind == Tok::kAssign) {
      lex_.next();
      if (lex_.peek().kind == Tok::kLBrace) {
        lex_.next();
        v.braced = true;
        v.init.push_back(parse_expr());
        while (lex_.peek().kind == Tok::kComma) {
          lex_.next();
          v.init.push_back(parse_expr());
        }
        expect(Tok::kRBrace, "'}'");
      } else {
        v.init.push_back(parse_expr());
      }
    }
    expect(Tok::kSemi, "';'");
    return v;
  }

  TemplateDecl parse_template() {
    TemplateDecl t;
    t.pos = lex_.next().pos;  // template
    t.name = expect_name("template name");
    expect(Tok::kLParen, "'('");
    if (lex_.peek().kind != Tok::kRParen) {
      t.params.push_back(expect_name("parameter name"));
      while (lex_.peek().kind == Tok::kComma) {
        lex_.next();
        t.params.push_back(expect_name("parameter name"));
      }
    }
    expect(Tok::kRParen, "')'");
    expect(Tok::kLBrace, "'{'");
    while (is_word("var") || is_word("cont")) t.vars.push_back(parse_var());
    while (is_word("location")) t.locations.push_back(parse_location());
    while (is_word("edge")) t.edges.push_back(parse_edge());
    expect(Tok::kRBrace, "'}'");
    return t;
  }

  LocationAst parse_location() {
    LocationAst loc;
    loc.pos = lex_.next().pos;  // location
    loc.name = expect_name("location name");
    if (is_word("init")) {
      lex_.next();
      loc.initial = true;
    }
    if (is_word("accepting")) {
      lex_.next();
      loc.accepting = true;
    }
    if (is_word("invariant")) {
      lex_.next();
      loc.invariant = parse_expr();
    }
    while (is_word("rate")) {
      lex_.next();
      if (is_word("exp")) {
        lex_.next();
        if (loc.exp_rate)
          throw ParseError("duplicate exponential rate", lex_.peek().pos.line,
                           lex_.peek().pos.col);
        loc.exp_rate = expect_signed_number();
      } else {
        RateAst r;
        const Token name = expect_ident("rated variable");
        r.pos = name.pos;
        r.var = name.text;
        if (lex_.peek().kind == Tok::kLBrack) {
          lex_.next();
          r.index = parse_expr();
          expect(Tok::kRBrack, "']'");
        }
        expect(Tok::kPrime, "'''");
        expect(Tok::kAssign, "'='");
        r.value = parse_expr();
        loc.rates.push_back(std::move(r));
      }
    }
    expect(Tok::kSemi, "';'");
    return loc;
  }

  EdgeAst parse_edge() {
    EdgeAst e;
    e.pos = lex_.next().pos;  // edge
    e.src = expect_name("source location");
    expect(Tok::kArrow, "'->'");
    e.dst = expect_name("target location");
    if (is_word("guard")) {
      lex_.next();
      e.guard = parse_expr();
    }
    if (is_word("sync")) {
      lex_.next();
      SyncAst s;
      const Token chan = expect_ident("channel name");
      s.pos = chan.pos;
      s.channel = chan.text;
      if (lex_.peek().kind == Tok::kLBrack) {
        lex_.next();
        s.index = parse_expr();
        expect(Tok::kRBrack, "']'");
      }
      if (lex_.peek().kind == Tok::kBang)
        s.emit = true;
      else if (lex_.peek().kind != Tok::kQuestion)
        lex_.fail("'!' or '?'");
      lex_.next();
      e.sync = std::move(s);
    }
    if (is_word("update")) {
      lex_.next();
      e.updates.push_back(parse_assign());
      while (lex_.peek().kind == Tok::kComma) {
        lex_.next();
        e.updates.push_back(parse_assign());
      }
    }
    expect(Tok::kSemi, "';'");
    return e;
  }

  AssignAst parse_assign() {
    AssignAst a;
    const Token name = expect_ident("assignment target");
    a.pos = name.pos;
    a.name = name.text;
    if (lex_.peek().kind == Tok::kLBrack) {
      lex_.next();
      a.index = parse_expr();
      expect(Tok::kRBrack, "']'");
    }
    expect(Tok::kAssign, "'='");
    a.value = parse_expr();
    return a;
  }

  InstanceDecl parse_instance() {
    InstanceDecl inst;
    inst.pos = lex_.next().pos;  // instance
    inst.name = expect_name("instance name");
    expect(Tok::kAssign, "'='");
    inst.template_name = expect_name("template name");
    expect(Tok::kLParen, "'('");
    if (lex_.peek().kind != Tok::kRParen) {
      inst.args.push_back(parse_expr());
      while (lex_.peek().kind == Tok::kComma) {
        lex_.next();
        inst.args.push_back(parse_expr());
      }
    }
    expect(Tok::kRParen, "')'");
    expect(Tok::kSemi, "';'");
    return inst;
  }

  // expressions ---------------------------------------------------------

  ExprPtr parse_or() {
    ExprPtr e = parse_and();
    while (lex_.peek().kind == Tok::kOrOr) {
      const SrcPos p = lex_.next().pos;
      e = make_binary(ExprKind::kOr, std::move(e), parse_and(), p);
    }
    return e;
  }

  ExprPtr parse_and() {
    ExprPtr e = parse_cmp();
    while (lex_.peek().kind == Tok::kAndAnd) {
      const SrcPos p = lex_.next().pos;
      e = make_binary(ExprKind::kAnd, std::move(e), parse_cmp(), p);
    }
    return e;
  }

  ExprPtr parse_cmp() {
    ExprPtr e = parse_add();
    const Tok k = lex_.peek().kind;
    ExprKind op;
    switch (k) {
      case Tok::kLt: op = ExprKind::kLt; break;
      case Tok::kLe: op = ExprKind::kLe; break;
      case Tok::kEqEq: op = ExprKind::kEq; break;
      case Tok::kGe: op = ExprKind::kGe; break;
      case Tok::kGt: op = ExprKind::kGt; break;
      case Tok::kNe: op = ExprKind::kNe; break;
      default:
        return e;
    }
    const SrcPos p = lex_.next().pos;
    return make_binary(op, std::move(e), parse_add(), p);
  }

  ExprPtr parse_add() {
    ExprPtr e = parse_mul();
    while (lex_.peek().kind == Tok::kPlus || lex_.peek().kind == Tok::kMinus) {
      const Token t = lex_.next();
      e = make_binary(
          t.kind == Tok::kPlus ? ExprKind::kAdd : ExprKind::kSub, std::move(e),
          parse_mul(), t.pos);
    }
    return e;
  }

  ExprPtr parse_mul() {
    ExprPtr e = parse_unary();
    while (lex_.peek().kind == Tok::kStar || lex_.peek().kind == Tok::kSlash) {
      const Token t = lex_.next();
      e = make_binary(
          t.kind == Tok::kStar ? ExprKind::kMul : ExprKind::kDiv, std::move(e),
          parse_unary(), t.pos);
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (lex_.peek().kind == Tok::kBang) {
      const SrcPos p = lex_.next().pos;
      return make_unary(ExprKind::kNot, parse_unary(), p);
    }
    if (lex_.peek().kind == Tok::kMinus) {
      const SrcPos p = lex_.next().pos;
      return make_unary(ExprKind::kNeg, parse_unary(), p);
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::kNum) {
      const Token n = lex_.next();
      return make_num(n.num, n.pos);
    }
    if (t.kind == Tok::kLParen) {
      lex_.next();
      ExprPtr e = parse_expr();
      expect(Tok::kRParen, "')'");
      return e;
    }
    if (t.kind == Tok::kIdent) {
      const Token name = lex_.next();
      if (name.text == "PI") return make_pi(name.pos);
      if (name.text != "kepler_rate" && reserved_words().count(name.text))
        throw ParseError("reserved word '" + name.text +
                             "' cannot be used in an expression",
                         name.pos.line, name.pos.col);
      if (lex_.peek().kind == Tok::kLParen) {
        if (name.text != "kepler_rate")
          throw ParseError("unknown function '" + name.text + "'",
                           name.pos.line, name.pos.col);
        lex_.next();
        ExprPtr orbit = parse_expr();
        expect(Tok::kComma, "','");
        ExprPtr anomaly = parse_expr();
        expect(Tok::kRParen, "')'");
        return make_rate_call(std::move(orbit), std::move(anomaly), name.pos);
      }
      if (lex_.peek().kind == Tok::kLBrack) {
        lex_.next();
        ExprPtr index = parse_expr();
        expect(Tok::kRBrack, "']'");
        return make_name(name.text, std::move(index), name.pos);
      }
      if (lex_.peek().kind == Tok::kDot) {
        lex_.next();
        const Token member = expect_ident("member name");
        return make_dot(name.text, member.text, name.pos);
      }
      return make_name(name.text, nullptr, name.pos);
    }
    lex_.fail("expression");
  }

  // helpers ----------------------------------------------------------------

  void expect(Tok kind, const std::string& what) {
    if (lex_.peek().kind != kind) lex_.fail(what);
    lex_.next();
  }

  Token expect_ident(const std::string& what) {
    if (lex_.peek().kind != Tok::kIdent) lex_.fail(what);
    return lex_.next();
  }

  /// An identifier usable as a declared name (keywords rejected).
  std::string expect_name(const std::string& what) {
    const Token t = expect_ident(what);
    if (reserved_words().count(t.text))
      throw ParseError("reserved word '" + t.text + "' cannot be used as " +
                           what,
                       t.pos.line, t.pos.col);
    return t.text;
  }

  void expect_word(const std::string& word) {
    if (lex_.peek().kind != Tok::kIdent || lex_.peek().text != word)
      lex_.fail("'" + word + "'");
    lex_.next();
  }

  bool is_word(const std::string& word) const {
    return lex_.peek().kind == Tok::kIdent && lex_.peek().text == word;
  }

  double expect_number() {
    if (lex_.peek().kind != Tok::kNum) lex_.fail("number");
    return lex_.next().num;
  }

  double expect_signed_number() {
    bool neg = false;
    if (lex_.peek().kind == Tok::kMinus) {
      lex_.next();
      neg = true;
    }
    const double v = expect_number();
    return neg ? -v : v;
  }

  static void check_duplicates(const ModelDef& def) {
    std::set<std::string> names;
    auto claim = [&](const std::string& name, SrcPos pos) {
      if (!names.insert(name).second)
        throw ParseError("duplicate declaration '" + name + "'", pos.line,
                         pos.col);
    };
    for (const auto& item : def.items) {
      if (const auto* c = std::get_if<ConstDecl>(&item)) claim(c->name, c->pos);
      if (const auto* o = std::get_if<OrbitDecl>(&item)) claim(o->name, o->pos);
      if (const auto* ch = std::get_if<ChannelDecl>(&item))
        claim(ch->name, ch->pos);
      if (const auto* v = std::get_if<VarDeclAst>(&item)) claim(v->name, v->pos);
      if (const auto* i = std::get_if<InstanceDecl>(&item))
        claim(i->name, i->pos);
      if (const auto* t = std::get_if<TemplateDecl>(&item)) {
        claim(t->name, t->pos);
        std::set<std::string> inner;
        for (const auto& v : t->vars)
          if (!inner.insert(v.name).second)
            throw ParseError("duplicate declaration '" + v.name + "'",
                             v.pos.line, v.pos.col);
        std::set<std::string> locs;
        for (const auto& l : t->locations)
          if (!locs.insert(l.name).second)
            throw ParseError("duplicate declaration '" + l.name + "'",
                             l.pos.line, l.pos.col);
      }
    }
  }

  Lexer lex_;
};

}  // namespace dsl

/// Parses a model file. Throws ParseError with a 1-based source location.
inline ModelDef parse_model(std::string_view text, std::string filename = "") {
  dsl::Parser p(text);
  return p.parse_model(std::move(filename));
}

/// Parses one query string.
inline Query parse_query(std::string_view text) {
  dsl::Parser p(text);
  return p.parse_query();
}

/// Parses a .ksq file: one query per line, '#' comments, blank lines ignored.
inline std::vector<std::pair<std::string, Query>> parse_query_file(
    std::string_view text) {
  std::vector<std::pair<std::string, Query>> out;
  std::size_t start = 0;
  int line_no = 1;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    std::string stripped(line.substr(0, line.find('#')));
    const auto first = stripped.find_first_not_of(" \t\r");
    if (first != std::string::npos) {
      const auto last = stripped.find_last_not_of(" \t\r");
      stripped = stripped.substr(first, last - first + 1);
      try {
        out.emplace_back(stripped, parse_query(stripped));
      } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()) + " (query file line " +
                             std::to_string(line_no) + ")",
                         e.line(), e.col());
      }
    }
    start = end + 1;
    ++line_no;
    if (end == text.size()) break;
  }
  return out;
}

// --- printing ----------------------------------------------------------------

namespace dsl {

inline void print_var(const VarDeclAst& v, std::string& out,
                      const char* indent) {
  out += indent;
  out += v.continuous ? "cont " : "var ";
  out += v.name;
  if (v.size) out += "[" + std::to_string(*v.size) + "]";
  if (!v.init.empty()) {
    out += " = ";
    if (v.braced) {
      out += "{";
      for (std::size_t i = 0; i < v.init.size(); ++i) {
        if (i) out += ", ";
        out += expr_to_string(v.init[i]);
      }
      out += "}";
    } else {
      out += expr_to_string(v.init.front());
    }
  }
  out += ";\n";
}

inline void print_location(const LocationAst& loc, std::string& out) {
  out += "  location ";
  out += loc.name;
  if (loc.initial) out += " init";
  if (loc.accepting) out += " accepting";
  if (loc.invariant) out += " invariant " + expr_to_string(loc.invariant);
  if (loc.exp_rate) out += " rate exp " + detail::num_to_string(*loc.exp_rate);
  for (const auto& r : loc.rates) {
    out += " rate " + r.var;
    if (r.index) out += "[" + expr_to_string(r.index) + "]";
    out += "' = " + expr_to_string(r.value);
  }
  out += ";\n";
}

inline void print_edge(const EdgeAst& e, std::string& out) {
  out += "  edge " + e.src + " -> " + e.dst;
  if (e.guard) out += " guard " + expr_to_string(e.guard);
  if (e.sync) {
    out += " sync " + e.sync->channel;
    if (e.sync->index) out += "[" + expr_to_string(e.sync->index) + "]";
    out += e.sync->emit ? "!" : "?";
  }
  if (!e.updates.empty()) {
    out += " update ";
    for (std::size_t i = 0; i < e.updates.size(); ++i) {
      if (i) out += ", ";
      const AssignAst& a = e.updates[i];
      out += a.name;
      if (a.index) out += "[" + expr_to_string(a.index) + "]";
      out += " = " + expr_to_string(a.value);
    }
  }
  out += ";\n";
}

}  // namespace dsl

/// Canonical text of a model AST; parse(print_model(ast)) == ast.
inline std::string print_model(const ModelDef& def) {
  std::string out;
  bool saw_instance = false;
  for (const auto& item : def.items) {
    if (const auto* c = std::get_if<ConstDecl>(&item)) {
      out += "const " + c->name + " = " + expr_to_string(c->value) + ";\n";
    } else if (const auto* o = std::get_if<OrbitDecl>(&item)) {
      out += "orbit " + o->name + " { a = " + detail::num_to_string(o->a) +
             ", e = " + detail::num_to_string(o->e) +
             ", T = " + detail::num_to_string(o->period) + " }\n";
    } else if (const auto* ch = std::get_if<ChannelDecl>(&item)) {
      out += "broadcast chan " + ch->name;
      if (ch->arity) out += "[" + std::to_string(*ch->arity) + "]";
      out += ";\n";
    } else if (const auto* v = std::get_if<VarDeclAst>(&item)) {
      dsl::print_var(*v, out, "");
    } else if (const auto* t = std::get_if<TemplateDecl>(&item)) {
      out += "\ntemplate " + t->name + "(";
      for (std::size_t i = 0; i < t->params.size(); ++i) {
        if (i) out += ", ";
        out += t->params[i];
      }
      out += ") {\n";
      for (const auto& v : t->vars) dsl::print_var(v, out, "  ");
      for (const auto& l : t->locations) dsl::print_location(l, out);
      for (const auto& e : t->edges) dsl::print_edge(e, out);
      out += "}\n";
    } else if (const auto* inst = std::get_if<InstanceDecl>(&item)) {
      if (!saw_instance) out += "\n";
      saw_instance = true;
      out += "instance " + inst->name + " = " + inst->template_name + "(";
      for (std::size_t i = 0; i < inst->args.size(); ++i) {
        if (i) out += ", ";
        out += expr_to_string(inst->args[i]);
      }
      out += ");\n";
    }
  }
  return out;
}

/// Canonical text of a query.
inline std::string print_query(const Query& q) {
  if (std::holds_alternative<QueryNoDeadlock>(q)) return "A[] not deadlock";
  if (const auto* ev = std::get_if<QueryEventually>(&q))
    return "A<> (" + expr_to_string(ev->goal) + ")";
  if (const auto* pr = std::get_if<QueryProbReach>(&q))
    return "Pr[<=" + detail::num_to_string(pr->bound) + "](<> " +
           expr_to_string(pr->goal) + ")";
  const auto& sim = std::get<QuerySimulate>(q);
  std::string out = "simulate [<=" + detail::num_to_string(sim.bound) + "] {";
  for (std::size_t i = 0; i < sim.observables.size(); ++i) {
    if (i) out += ", ";
    out += expr_to_string(sim.observables[i]);
  }
  return out + "}";
}

inline bool query_equal(const Query& x, const Query& y) {
  if (x.index() != y.index()) return false;
  if (std::holds_alternative<QueryNoDeadlock>(x)) return true;
  if (const auto* ev = std::get_if<QueryEventually>(&x))
    return expr_equal(ev->goal, std::get<QueryEventually>(y).goal);
  if (const auto* pr = std::get_if<QueryProbReach>(&x)) {
    const auto& o = std::get<QueryProbReach>(y);
    return pr->bound == o.bound && expr_equal(pr->goal, o.goal);
  }
  const auto& a = std::get<QuerySimulate>(x);
  const auto& b = std::get<QuerySimulate>(y);
  if (a.bound != b.bound || a.observables.size() != b.observables.size())
    return false;
  for (std::size_t i = 0; i < a.observables.size(); ++i)
    if (!expr_equal(a.observables[i], b.observables[i])) return false;
  return true;
}

}  // namespace ksmc
