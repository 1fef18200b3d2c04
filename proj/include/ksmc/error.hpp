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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ksmc {

/// Base class of all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation
/// (e.g. eccentricity >= 1, b > a, k > n).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Lexical or syntactic error in a model or query text.
/// Carries a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::string msg, int line, int col)
      : Error(std::move(msg) + " at " + std::to_string(line) + ":" +
              std::to_string(col)),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

/// A model definition that fails network validation (unknown variable,
/// channel arity mismatch, missing initial location, ill-typed guard, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// State-count budget exceeded during exhaustive exploration.
class BudgetError : public Error {
 public:
  BudgetError(std::string msg, std::size_t budget)
      : Error(std::move(msg)), budget_(budget) {}

  std::size_t budget() const { return budget_; }

 private:
  std::size_t budget_;
};

/// A location invariant was violated, either by an edge update or strictly
/// inside a flow interval. `when` is the bisection-refined violation time
/// offset for flow violations, 0 for update violations.
class InvariantError : public Error {
 public:
  InvariantError(std::string msg, std::string instance, double when)
      : Error(std::move(msg)), instance_(std::move(instance)), when_(when) {}

  const std::string& instance() const { return instance_; }
  double when() const { return when_; }

 private:
  std::string instance_;
  double when_;
};

/// Runtime expression evaluation failure (dynamic index out of range,
/// unresolved name reaching the evaluator).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// A condition the run semantics cannot recover from (timelock, failed
/// boundary bracketing). Indicates a model or implementation defect.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ksmc
