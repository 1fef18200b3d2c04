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
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "ksmc/cfl.hpp"
#include "ksmc/dsl.hpp"

using namespace ksmc;

namespace {

std::string cli_path() {
  if (const char* p = std::getenv("KSMC_CLI")) return p;
  return "./build/tools/ksmc";
}

std::string models_dir() {
  if (const char* dir = std::getenv("KSMC_MODELS_DIR")) return dir;
  return "models";
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const std::string out_file = "/tmp/ksmc_cli_out.txt";
  const std::string err_file = "/tmp/ksmc_cli_err.txt";
  const std::string cmd =
      cli_path() + " " + args + " >" + out_file + " 2>" + err_file;
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string conventional() { return models_dir() + "/cfl_conventional.ksm"; }
std::string stochastic() { return models_dir() + "/cfl_stochastic.ksm"; }

nlohmann::json load_doc_without_duration(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json doc = nlohmann::json::parse(in);
  doc.erase("duration_ms");
  return doc;
}

std::vector<std::vector<double>> csv_values(const std::string& path,
                                            std::size_t n_cols) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::size_t start = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      const std::size_t end = line.find(',', start);
      row.push_back(std::stod(line.substr(start, end - start)));
      start = end + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double first_time_at(const std::vector<std::vector<double>>& rows,
                     std::size_t col, double value) {
  for (const auto& row : rows)
    if (row[col] == value) return row[0];
  return -1.0;
}

}  // namespace

TEST_CASE("cli check verifies the bundled conventional model") {
  const CliResult dead =
      run_cli("check " + conventional() + " -q \"A[] not deadlock\"");
  CHECK(dead.exit_code == 0);
  CHECK(dead.out.find("holds") != std::string::npos);

  const CliResult live =
      run_cli("check " + conventional() + " -q \"A<> (terminated == 1)\"");
  CHECK(live.exit_code == 0);
}

TEST_CASE("cli check guards against misuse") {
  const CliResult timed =
      run_cli("check " + stochastic() + " -q \"A[] not deadlock\"");
  CHECK(timed.exit_code == 2);
  CHECK(timed.err.find("timed model requires estimate/simulate") !=
        std::string::npos);

  const CliResult missing =
      run_cli("check /nonexistent/model.ksm -q \"A[] not deadlock\"");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("/nonexistent/model.ksm") != std::string::npos);

  const CliResult wrong_kind =
      run_cli("check " + conventional() + " -q \"Pr[<=3](<> server.send)\"");
  CHECK(wrong_kind.exit_code == 2);

  const CliResult budget = run_cli("check " + conventional() +
                                   " -q \"A[] not deadlock\" --budget 5");
  CHECK(budget.exit_code == 3);
}

TEST_CASE("cli check reports violations with a witness and exit 1") {
  ModelDef mutant = conventional_cfl_def(2);
  for (auto& item : mutant.items)
    if (auto* t = std::get_if<TemplateDecl>(&item))
      if (t->name == "Client") t->edges.pop_back();
  const std::string path = "/tmp/ksmc_mutant.ksm";
  std::ofstream(path) << print_model(mutant);

  const CliResult r = run_cli("check " + path + " -q \"A[] not deadlock\"");
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("VIOLATED") != std::string::npos);
  CHECK(r.out.find("step") != std::string::npos);
}

TEST_CASE("cli estimate reproduces the reference interval") {
  const CliResult r = run_cli("estimate " + stochastic() +
                              " -q \"Pr[<=3](<> server.send)\" --result "
                              "/tmp/ksmc_est.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("(72/72 runs) Pr(<> server.send) in [0.950056, 1] "
                   "(95% CI)") != std::string::npos);

  const nlohmann::json doc = load_doc_without_duration("/tmp/ksmc_est.json");
  CHECK(doc["result"]["successes"] == 72);
  CHECK(doc["result"]["runs"] == 72);
  CHECK(doc["result"]["stopping_reason"] == "width");
  CHECK(doc["config"]["alpha"] == 0.05);
}

TEST_CASE("cli estimate documents are identical across worker counts") {
  const std::string args = "estimate " + stochastic() +
                           " --query-file " + models_dir() +
                           "/cfl.ksq --query-index 2 --seed 9 --width 0.2";
  const CliResult one =
      run_cli(args + " --workers 1 --result /tmp/ksmc_w1.json");
  const CliResult eight =
      run_cli(args + " --workers 8 --result /tmp/ksmc_w8.json");
  CHECK(one.exit_code == 0);
  CHECK(eight.exit_code == 0);
  CHECK(load_doc_without_duration("/tmp/ksmc_w1.json") ==
        load_doc_without_duration("/tmp/ksmc_w8.json"));
}

TEST_CASE("cli estimate budget stop and target gating") {
  const CliResult budget = run_cli(
      "estimate " + stochastic() +
      " -q \"Pr[<=3](<> server.send)\" --max-runs 10 --width 0.01");
  CHECK(budget.exit_code == 0);
  CHECK(budget.out.find("run budget reached") != std::string::npos);
  CHECK(budget.out.find("(10/10 runs)") != std::string::npos);

  const CliResult inside = run_cli("estimate " + stochastic() +
                                   " -q \"Pr[<=3](<> server.send)\" --width "
                                   "0.2 --target 0.99");
  CHECK(inside.exit_code == 0);
  const CliResult outside = run_cli("estimate " + stochastic() +
                                    " -q \"Pr[<=3](<> server.send)\" "
                                    "--width 0.2 --target 0.5");
  CHECK(outside.exit_code == 1);
}

TEST_CASE("cli simulate exports the landmark trace and chart") {
  const CliResult r = run_cli("simulate " + stochastic() + " --query-file " +
                              models_dir() +
                              "/cfl.ksq --query-index 3 --out "
                              "/tmp/ksmc_trace.csv --svg /tmp/ksmc_trace.svg");
  REQUIRE(r.exit_code == 0);

  std::ifstream csv("/tmp/ksmc_trace.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "t,nus[0],nus[1],server.loc,client0.loc,client1.loc,event");

  const auto rows = csv_values("/tmp/ksmc_trace.csv", 6);
  REQUIRE(rows.size() > 1000);
  // location indices within the FlCentralized template:
  // sphase2 = 3, send = 5, cphase2_t = 7, cend = 9
  CHECK(first_time_at(rows, 4, 7) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(first_time_at(rows, 4, 9) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(first_time_at(rows, 5, 7) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(first_time_at(rows, 5, 9) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(first_time_at(rows, 3, 3) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(first_time_at(rows, 3, 5) == doctest::Approx(2.0).epsilon(1e-6));

  std::ifstream svg_in("/tmp/ksmc_trace.svg");
  std::ostringstream svg_s;
  svg_s << svg_in.rdbuf();
  const std::string svg = svg_s.str();
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  auto count = [&](const std::string& needle) {
    std::size_t n = 0, at = 0;
    while ((at = svg.find(needle, at)) != std::string::npos) {
      ++n;
      at += needle.size();
    }
    return n;
  };
  CHECK(count("<polyline class=\"smooth\"") == 2);
  CHECK(count("<polyline class=\"staircase\"") == 3);
}
