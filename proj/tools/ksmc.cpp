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

// ksmc command-line front end: exhaustive checking of untimed models,
// statistical estimation and trace export for stochastic ones.
//
// Exit codes: 0 success / property holds; 1 property violated or the
// estimated CI excludes --target; 2 usage, parse or validation error;
// 3 state budget exceeded.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ksmc/cfl.hpp"
#include "ksmc/checker.hpp"
#include "ksmc/dsl.hpp"
#include "ksmc/network.hpp"
#include "ksmc/query.hpp"
#include "ksmc/report.hpp"
#include "ksmc/smc.hpp"
#include "ksmc/svg.hpp"

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

struct LoadedModel {
  std::string path;
  std::string content;
  ksmc::ModelDef ast;
  ksmc::Network net;
};

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ksmc::Error("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.path = path;
  m.content = slurp_file(path);
  m.ast = ksmc::parse_model(m.content, path);
  m.net = ksmc::build_network(m.ast);
  return m;
}

struct QuerySource {
  std::string text;
  ksmc::Query query;
};

QuerySource resolve_query(const std::string& inline_query,
                          const std::string& query_file, int query_index) {
  if (!inline_query.empty())
    return {inline_query, ksmc::parse_query(inline_query)};
  if (query_file.empty())
    throw ksmc::Error("a query is required: pass -q or --query-file");
  const auto queries = ksmc::parse_query_file(slurp_file(query_file));
  if (queries.empty()) throw ksmc::Error("no queries in " + query_file);
  if (query_index < 0 || query_index >= static_cast<int>(queries.size()))
    throw ksmc::Error("--query-index " + std::to_string(query_index) +
                      " out of range; " + query_file + " has " +
                      std::to_string(queries.size()) + " queries");
  const auto& chosen = queries[static_cast<std::size_t>(query_index)];
  return {chosen.first, chosen.second};
}

void write_document(const std::string& path, const nlohmann::json& doc) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw ksmc::Error("cannot write result file: " + path);
  out << doc.dump(2) << "\n";
}

int default_workers() {
  if (const char* env = std::getenv("KSMC_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

std::string describe_choice(const ksmc::Network& net, const ksmc::Choice& c) {
  const auto& inst = net.instances[static_cast<std::size_t>(c.instance)];
  const auto& edge = inst.edges[static_cast<std::size_t>(c.edge)];
  std::string line = inst.name + ": " + inst.locs[
      static_cast<std::size_t>(edge.src)].name + " -> " +
      inst.locs[static_cast<std::size_t>(edge.dst)].name;
  if (edge.has_sync()) {
    line += " sync " + net.channels[static_cast<std::size_t>(edge.channel)]
                           .name;
    if (edge.chan_index)
      line += "[" + ksmc::expr_to_string(edge.chan_index) + "]";
    line += edge.emit ? "!" : "?";
  }
  return line;
}

int run_check(const std::string& model_path, const QuerySource& qs,
              std::size_t budget, const std::string& result_path) {
  const Timer timer;
  const LoadedModel model = load_model(model_path);
  ksmc::ExploreOptions opt;
  opt.budget = budget;

  ksmc::Verdict verdict;
  if (std::holds_alternative<ksmc::QueryNoDeadlock>(qs.query)) {
    verdict = ksmc::check_no_deadlock(model.net, opt);
  } else if (const auto* ev =
                 std::get_if<ksmc::QueryEventually>(&qs.query)) {
    verdict = ksmc::check_eventually(
        model.net, ksmc::bind_query_expr(ev->goal, model.net), opt);
  } else {
    throw ksmc::Error(
        "check accepts 'A[] not deadlock' and 'A<> (...)' queries; use "
        "estimate/simulate for probabilistic ones");
  }

  if (verdict.holds) {
    std::cout << qs.text << ": holds\n";
  } else {
    std::cout << qs.text << ": VIOLATED (" << verdict.reason << ")\n";
    ksmc::HybridState s = ksmc::initial_state(model.net);
    for (std::size_t i = 0; i < verdict.witness.size(); ++i) {
      std::cout << "  step " << i + 1 << ": "
                << describe_choice(model.net, verdict.witness[i]) << "\n";
      s = ksmc::fire(model.net, s, verdict.witness[i]);
    }
    if (verdict.lasso_start >= 0)
      std::cout << "  (loops back to step " << verdict.lasso_start << ")\n";
  }

  nlohmann::json doc =
      ksmc::document_header(model.path, model.content, qs.text);
  doc["kind"] = "check";
  doc["result"] = ksmc::verdict_json(verdict);
  doc["config"] = {{"budget", budget}};
  doc["duration_ms"] = timer.ms();
  write_document(result_path, doc);
  return verdict.holds ? 0 : 1;
}

int run_estimate(const std::string& model_path, const QuerySource& qs,
                 ksmc::EstimateOptions opt, double step,
                 std::optional<double> target,
                 const std::string& result_path) {
  const Timer timer;
  const LoadedModel model = load_model(model_path);
  const auto* pr = std::get_if<ksmc::QueryProbReach>(&qs.query);
  if (!pr)
    throw ksmc::Error("estimate requires a Pr[<=B](<> ...) query");

  const ksmc::ExprPtr goal = ksmc::bind_query_expr(pr->goal, model.net);
  const ksmc::CiEstimate est =
      ksmc::estimate_probability(model.net, goal, pr->bound, opt, step);

  const std::string goal_text = ksmc::expr_to_string(pr->goal);
  std::cout << ksmc::estimate_human_line(est, goal_text) << "\n";
  if (est.stopping_reason == "budget")
    std::cout << "note: run budget reached before the width target\n";

  ksmc::RunConfig echo_cfg;
  echo_cfg.bound = pr->bound;
  echo_cfg.step = step;
  nlohmann::json doc =
      ksmc::document_header(model.path, model.content, qs.text);
  doc["kind"] = "estimate";
  doc["result"] = ksmc::estimate_json(est);
  doc["config"] = {
      {"alpha", opt.alpha},
      {"width", opt.target_width},
      {"max_runs", opt.max_runs},
      {"seed", opt.seed},
      {"step", ksmc::effective_step(model.net, echo_cfg)},
      {"bound", pr->bound},
  };
  doc["duration_ms"] = timer.ms();
  write_document(result_path, doc);

  if (target && (*target < est.lo || *target > est.hi)) {
    std::cout << "target " << *target << " lies outside the CI\n";
    return 1;
  }
  return 0;
}

int run_simulate(const std::string& model_path, const QuerySource& qs,
                 std::uint64_t seed, double step, const std::string& out_path,
                 const std::string& svg_path,
                 const std::string& result_path) {
  const Timer timer;
  const LoadedModel model = load_model(model_path);
  const auto* sim = std::get_if<ksmc::QuerySimulate>(&qs.query);
  if (!sim)
    throw ksmc::Error("simulate requires a 'simulate [<=B] {...}' query");

  std::vector<std::string> names;
  std::vector<ksmc::ExprPtr> observables;
  for (const auto& obs : sim->observables) {
    names.push_back(ksmc::expr_to_string(obs));
    observables.push_back(ksmc::bind_query_expr(obs, model.net));
  }

  ksmc::RunConfig cfg;
  cfg.seed = seed;
  cfg.step = step;
  const auto rows = ksmc::trace(model.net, sim->bound, observables, cfg);

  if (out_path.empty()) {
    ksmc::write_trace_csv(std::cout, names, rows);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out.good()) throw ksmc::Error("cannot write CSV file: " + out_path);
    ksmc::write_trace_csv(out, names, rows);
    std::cout << "wrote " << rows.size() << " samples to " << out_path
              << "\n";
  }
  if (!svg_path.empty()) {
    std::ofstream out(svg_path, std::ios::binary);
    if (!out.good()) throw ksmc::Error("cannot write SVG file: " + svg_path);
    out << ksmc::render_trace_svg(names, rows);
    std::cout << "wrote chart to " << svg_path << "\n";
  }

  nlohmann::json doc =
      ksmc::document_header(model.path, model.content, qs.text);
  doc["kind"] = "simulate";
  doc["result"] = {{"rows", rows.size()}};
  doc["config"] = {
      {"seed", seed},
      {"step", ksmc::effective_step(model.net, cfg)},
      {"bound", sim->bound},
  };
  if (!out_path.empty()) doc["result"]["csv"] = out_path;
  if (!svg_path.empty()) doc["result"]["svg"] = svg_path;
  doc["duration_ms"] = timer.ms();
  write_document(result_path, doc);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "ksmc - model checking of stochastic hybrid timed automata driven by "
      "Keplerian motion"};
  app.require_subcommand(1);

  std::string model_path, inline_query, query_file, result_path;
  int query_index = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("model", model_path, "model file (.ksm)")->required();
    cmd->add_option("-q,--query", inline_query, "query text");
    cmd->add_option("--query-file", query_file, "query file (.ksq)");
    cmd->add_option("--query-index", query_index,
                    "0-based query index within --query-file");
    cmd->add_option("--result", result_path,
                    "write a JSON result document to this path");
  };

  std::size_t budget = 1000000;
  CLI::App* check = app.add_subcommand(
      "check", "exhaustively verify an untimed model");
  add_common(check);
  check->add_option("--budget", budget, "state-count budget");

  ksmc::EstimateOptions est_opt;
  est_opt.workers = default_workers();
  double step = 0.0;
  std::optional<double> target;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "estimate a bounded reachability probability");
  add_common(estimate);
  estimate->add_option("--alpha", est_opt.alpha, "CI significance level");
  estimate->add_option("--width", est_opt.target_width,
                       "stop when the CI is at most this wide");
  estimate->add_option("--max-runs", est_opt.max_runs, "run budget");
  estimate->add_option("--seed", est_opt.seed, "master seed");
  estimate->add_option("--workers", est_opt.workers,
                       "worker threads (default: KSMC_WORKERS or 1)");
  estimate->add_option("--step", step, "integration step");
  estimate->add_option("--target", target,
                       "exit 1 if this probability lies outside the CI");

  std::uint64_t sim_seed = 1;
  double sim_step = 0.0;
  std::string out_path, svg_path;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "export one run's observable trace");
  add_common(simulate);
  simulate->add_option("--seed", sim_seed, "run seed");
  simulate->add_option("--step", sim_step, "integration step");
  simulate->add_option("-o,--out", out_path, "CSV output path (default: stdout)");
  simulate->add_option("--svg", svg_path, "also render an SVG chart");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors land on the documented code
  }

  try {
    const QuerySource qs =
        resolve_query(inline_query, query_file, query_index);
    if (check->parsed())
      return run_check(model_path, qs, budget, result_path);
    if (estimate->parsed())
      return run_estimate(model_path, qs, est_opt, step, target, result_path);
    return run_simulate(model_path, qs, sim_seed, sim_step, out_path,
                        svg_path, result_path);
  } catch (const ksmc::BudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
