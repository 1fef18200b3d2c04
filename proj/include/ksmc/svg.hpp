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

#include <algorithm>
#include <string>
#include <vector>

#include "ksmc/expr.hpp"
#include "ksmc/smc.hpp"

namespace ksmc {

/// Static SVG rendering of a simulation trace: the first two observables are
/// drawn as smooth curves (the anomaly signals), the rest as staircase lines
/// stacked below (the location Gantt), echoing the tool diagram the trace
/// format was designed for. Output is a standalone SVG document.
inline std::string render_trace_svg(const std::vector<std::string>& names,
                                    const std::vector<TraceSample>& rows,
                                    int width = 900, int height = 540) {
  const std::size_t n_series = names.size();
  const std::size_t n_smooth = std::min<std::size_t>(2, n_series);
  const double margin = 50.0;
  const double plot_w = width - 2 * margin;
  const double upper_h = (height - 3 * margin) * 0.55;
  const double lower_h = (height - 3 * margin) * 0.45;

  double t_max = 1.0, y_max = 1.0, loc_max = 1.0;
  for (const auto& row : rows) {
    t_max = std::max(t_max, row.t);
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      if (i < n_smooth)
        y_max = std::max(y_max, row.values[i]);
      else
        loc_max = std::max(loc_max, row.values[i]);
    }
  }

  const auto x_of = [&](double t) { return margin + t / t_max * plot_w; };
  const auto y_smooth = [&](double v) {
    return margin + upper_h - v / y_max * upper_h;
  };
  const auto y_loc = [&](double v) {
    return 2 * margin + upper_h + lower_h - v / loc_max * lower_h;
  };

  static const char* kColors[] = {"#7f7f7f", "#ff7f0e", "#e377c2",
                                  "#2ca02c", "#1f77b4", "#9467bd",
                                  "#8c564b", "#17becf"};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  auto axis = [&](double y0, double h) {
    svg += "<line x1=\"" + detail::num_to_string(margin) + "\" y1=\"" +
           detail::num_to_string(y0 + h) + "\" x2=\"" +
           detail::num_to_string(margin + plot_w) + "\" y2=\"" +
           detail::num_to_string(y0 + h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::num_to_string(margin) + "\" y1=\"" +
           detail::num_to_string(y0) + "\" x2=\"" +
           detail::num_to_string(margin) + "\" y2=\"" +
           detail::num_to_string(y0 + h) + "\" stroke=\"black\"/>\n";
  };
  axis(margin, upper_h);
  axis(2 * margin + upper_h, lower_h);

  for (std::size_t s = 0; s < n_series; ++s) {
    const bool smooth = s < n_smooth;
    std::string points;
    double prev_v = 0.0;
    bool first = true;
    for (const auto& row : rows) {
      const double v = row.values[s];
      if (!smooth && !first && v != prev_v) {
        // hold the previous level up to the jump instant
        points += detail::num_to_string(x_of(row.t)) + "," +
                  detail::num_to_string(y_loc(prev_v)) + " ";
      }
      points += detail::num_to_string(x_of(row.t)) + "," +
                detail::num_to_string(smooth ? y_smooth(v) : y_loc(v)) + " ";
      prev_v = v;
      first = false;
    }
    svg += std::string("<polyline class=\"") +
           (smooth ? "smooth" : "staircase") + "\" fill=\"none\" stroke=\"" +
           kColors[s % 8] + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"/>\n";
    const double ly = margin * 0.5 + 14.0 * static_cast<double>(s);
    svg += "<text x=\"" + detail::num_to_string(margin + plot_w - 160.0) +
           "\" y=\"" + detail::num_to_string(ly) + "\" fill=\"" +
           kColors[s % 8] + "\" font-size=\"12\">" + names[s] + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace ksmc
