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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksmc/checker.hpp"
#include "ksmc/smc.hpp"
#include "ksmc/version.hpp"

namespace ksmc {

/// Machine-readable result documents (JSON) and the trace CSV format.
/// A document is self-contained for reproduction: the config echo carries
/// every semantic input (model hash, query, seed, tolerances); wall-clock
/// duration is the only field expected to vary between identical runs.

inline std::string fnv1a64_hex(const std::string& content) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : content) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json document_header(const std::string& model_path,
                                      const std::string& model_content,
                                      const std::string& query_text) {
  return nlohmann::json{
      {"tool", "ksmc"},
      {"version", kVersion},
      {"model", {{"path", model_path}, {"fnv1a64", fnv1a64_hex(model_content)}}},
      {"query", query_text},
  };
}

inline nlohmann::json verdict_json(const Verdict& v) {
  nlohmann::json doc{{"holds", v.holds}};
  if (!v.holds) {
    doc["reason"] = v.reason;
    nlohmann::json steps = nlohmann::json::array();
    for (const Choice& c : v.witness) {
      nlohmann::json step{{"instance", c.instance}, {"edge", c.edge}};
      nlohmann::json recv = nlohmann::json::array();
      for (const auto& [ri, re] : c.receivers)
        recv.push_back({{"instance", ri}, {"edge", re}});
      step["receivers"] = std::move(recv);
      steps.push_back(std::move(step));
    }
    doc["witness"] = std::move(steps);
    if (v.lasso_start >= 0) doc["lasso_start"] = v.lasso_start;
  }
  return doc;
}

inline nlohmann::json estimate_json(const CiEstimate& est) {
  return nlohmann::json{
      {"successes", est.successes},  {"runs", est.runs},
      {"alpha", est.alpha},          {"ci", {est.lo, est.hi}},
      {"stopping_reason", est.stopping_reason},
  };
}

/// The single-line human-readable estimate, e.g.
/// "(72/72 runs) Pr(<> server.send) in [0.950056, 1] (95% CI)".
inline std::string estimate_human_line(const CiEstimate& est,
                                       const std::string& goal_text) {
  auto fmt = [](double x) {
    if (x == static_cast<std::int64_t>(x))
      return std::to_string(static_cast<std::int64_t>(x));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  char ci[16];
  std::snprintf(ci, sizeof ci, "%g", (1.0 - est.alpha) * 100.0);
  return "(" + std::to_string(est.successes) + "/" +
         std::to_string(est.runs) + " runs) Pr(<> " + goal_text + ") in [" +
         fmt(est.lo) + ", " + fmt(est.hi) + "] (" + ci + "% CI)";
}

/// Trace CSV: header `t,<observable names...>,event`, one row per sample,
/// decimal notation, shortest round-trip numerals. Names containing commas
/// are double-quoted.
inline void write_trace_csv(std::ostream& out,
                            const std::vector<std::string>& names,
                            const std::vector<TraceSample>& rows) {
  out << "t";
  for (const auto& name : names) {
    out << ',';
    if (name.find(',') != std::string::npos)
      out << '"' << name << '"';
    else
      out << name;
  }
  out << ",event\n";
  for (const auto& row : rows) {
    out << detail::num_to_string(row.t);
    for (double v : row.values) out << ',' << detail::num_to_string(v);
    out << ',' << row.event << '\n';
  }
}

}  // namespace ksmc
