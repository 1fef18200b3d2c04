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
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "ksmc/cfl.hpp"
#include "ksmc/dsl.hpp"

using namespace ksmc;

namespace {

std::string models_dir() {
  if (const char* dir = std::getenv("KSMC_MODELS_DIR")) return dir;
  return "models";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open " << path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("bundled model files equal the programmatic builders") {
  const std::string conventional =
      slurp(models_dir() + "/cfl_conventional.ksm");
  CHECK(conventional == print_model(conventional_cfl_def(2)));

  const std::string stochastic = slurp(models_dir() + "/cfl_stochastic.ksm");
  CHECK(stochastic == print_model(stochastic_cfl_def(default_scenario())));

  // parsing the files and rebuilding matches the builders' networks
  const ModelDef conv_ast = parse_model(conventional, "cfl_conventional.ksm");
  CHECK(ast_equal(conv_ast, conventional_cfl_def(2)));
  const Network net = build_network(parse_model(stochastic));
  CHECK(net.instances.size() == 5);
  CHECK(net.orbits.size() == 1);

  // canonical fixpoint on the shipped files
  CHECK(print_model(parse_model(conventional)) == conventional);
  CHECK(print_model(parse_model(stochastic)) == stochastic);
}

TEST_CASE("bundled query file carries the four verification queries") {
  const auto queries = parse_query_file(slurp(models_dir() + "/cfl.ksq"));
  REQUIRE(queries.size() == 4);
  CHECK(std::holds_alternative<QueryNoDeadlock>(queries[0].second));
  CHECK(std::holds_alternative<QueryEventually>(queries[1].second));
  CHECK(std::holds_alternative<QueryProbReach>(queries[2].second));
  CHECK(std::holds_alternative<QuerySimulate>(queries[3].second));
  CHECK(std::get<QueryProbReach>(queries[2].second).bound == 3.0);
  CHECK(std::get<QuerySimulate>(queries[3].second).observables.size() == 5);
}
