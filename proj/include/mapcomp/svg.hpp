// Copyright 2026 The mapcomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mapcomp/map.hpp"
#include "mapcomp/metrics.hpp"
#include "mapcomp/prior.hpp"
#include "mapcomp/scene.hpp"

namespace mapcomp {

// Debug overlay of one scenario instance: prior in grey, complement in
// class colors, predictions dashed.
inline std::string scenario_to_svg(const PriorScenario& scenario,
                                   const std::vector<ScoredInstance>& preds) {
  const BevRange& r = scenario.prior.bev_range;
  const double scale = 10.0;
  const double w = (r.x_max - r.x_min) * scale;
  const double h = (r.y_max - r.y_min) * scale;
  // BEV x (forward) maps right, BEV y (left) maps up.
  auto sx = [&](double x) { return (x - r.x_min) * scale; };
  auto sy = [&](double y) { return h - (y - r.y_min) * scale; };

  auto class_color = [](MapClass c) {
    switch (c) {
      case MapClass::DashedDivider:
        return "#e6a817";
      case MapClass::SolidDivider:
        return "#d4500f";
      case MapClass::Boundary:
        return "#1f3d99";
      case MapClass::Centerline:
        return "#1d8a3c";
      case MapClass::PedCrossing:
        return "#8a1d8a";
    }
    return "#000000";
  };

  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                w, h, w, h);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<rect width=\"%.0f\" height=\"%.0f\" fill=\"#fafafa\" "
                "stroke=\"#999\"/>\n",
                w, h);
  out += buf;

  auto polyline = [&](const std::vector<Vec2>& pts, bool closed,
                      const std::string& color, const char* dash,
                      double width) {
    if (pts.size() < 2) {
      return;
    }
    out += closed ? "<polygon points=\"" : "<polyline points=\"";
    for (const Vec2& p : pts) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", sx(p.x), sy(p.y));
      out += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "\" fill=\"none\" stroke=\"%s\" stroke-width=\"%.1f\"%s/>\n",
                  color.c_str(), width, dash);
    out += buf;
  };

  for (const MapElement& e : scenario.prior.elements) {
    polyline(to_xy(e), e.closed, "#bbbbbb", "", 2.0);
  }
  for (const MapElement& e : scenario.complement.elements) {
    polyline(to_xy(e), e.closed, class_color(e.cls), "", 2.5);
  }
  for (const ScoredInstance& p : preds) {
    polyline(p.points, is_polygon_class(p.cls), class_color(p.cls),
             " stroke-dasharray=\"6,4\"", 1.5);
  }
  out += "</svg>\n";
  return out;
}

inline void save_scenario_svg(const PriorScenario& scenario,
                              const std::vector<ScoredInstance>& preds,
                              const std::filesystem::path& path) {
  write_atomic(path, scenario_to_svg(scenario, preds));
}

}  // namespace mapcomp
