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

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapcomp/error.hpp"
#include "mapcomp/geometry.hpp"
#include "mapcomp/map.hpp"
#include "mapcomp/scene.hpp"

namespace mapcomp {

/// The nine map-prior scenarios. The first five are the named scenarios of
/// the benchmark table; the remaining four mask exactly one semantic class
/// group (dividers = dashed + solid).
enum class ScenarioId {
  MaskEgoLane = 0,
  MaskEgoRoad = 1,
  OnlyBoundaries = 2,
  OnlyCenterlines = 3,
  NoPrior = 4,
  MaskCenterlines = 5,
  MaskPedCrossings = 6,
  MaskBoundaries = 7,
  MaskDividers = 8,
};

inline constexpr int kNumScenarios = 9;

inline constexpr std::array<ScenarioId, kNumScenarios> kAllScenarios = {
    ScenarioId::MaskEgoLane,     ScenarioId::MaskEgoRoad,
    ScenarioId::OnlyBoundaries,  ScenarioId::OnlyCenterlines,
    ScenarioId::NoPrior,         ScenarioId::MaskCenterlines,
    ScenarioId::MaskPedCrossings, ScenarioId::MaskBoundaries,
    ScenarioId::MaskDividers};

inline const char* to_string(ScenarioId s) {
  switch (s) {
    case ScenarioId::MaskEgoLane:
      return "mask_ego_lane";
    case ScenarioId::MaskEgoRoad:
      return "mask_ego_road";
    case ScenarioId::OnlyBoundaries:
      return "only_boundaries";
    case ScenarioId::OnlyCenterlines:
      return "only_centerlines";
    case ScenarioId::NoPrior:
      return "no_prior";
    case ScenarioId::MaskCenterlines:
      return "mask_centerlines";
    case ScenarioId::MaskPedCrossings:
      return "mask_ped_crossings";
    case ScenarioId::MaskBoundaries:
      return "mask_boundaries";
    case ScenarioId::MaskDividers:
      return "mask_dividers";
  }
  return "unknown";
}

inline ScenarioId scenario_from_string(const std::string& s) {
  for (ScenarioId id : kAllScenarios) {
    if (s == to_string(id)) {
      return id;
    }
  }
  throw Error("unknown scenario \"" + s + "\"");
}

/// An element-id partition of a scene's ground truth into the map prior and
/// its complement (the elements a completion model must reconstruct).
struct PriorScenario {
  ScenarioId scenario = ScenarioId::NoPrior;
  std::string scene_id;
  VectorMap prior;
  VectorMap complement;
};

/// Geometric tolerances of the ego-lane / ego-road scenarios. The benchmark
/// defines the scenarios only by name, so these are explicit parameters.
struct PriorParams {
  double lane_width = 3.5;
  double lateral_slack = 0.5;
};

namespace detail {

struct NearestPoint {
  double distance = std::numeric_limits<double>::infinity();
  Vec2 foot;
  Vec2 tangent;  // unit tangent of the nearest segment
};

inline NearestPoint nearest_on_polyline(const Vec2& p,
                                        const std::vector<Vec2>& pts) {
  NearestPoint best;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[i + 1];
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0) {
      t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    }
    const Vec2 foot{a.x + t * vx, a.y + t * vy};
    const double d = dist(p, foot);
    if (d < best.distance) {
      best.distance = d;
      best.foot = foot;
      const double len = std::sqrt(len2);
      best.tangent = len > kGeomEps ? Vec2{vx / len, vy / len} : Vec2{1.0, 0.0};
    }
  }
  return best;
}

// Mean signed lateral offset of `pts` relative to the centerline; positive
// means left of the centerline's walking direction.
inline double mean_signed_lateral(const std::vector<Vec2>& pts,
                                  const std::vector<Vec2>& centerline) {
  double sum = 0.0;
  for (const Vec2& p : pts) {
    const NearestPoint np = nearest_on_polyline(p, centerline);
    const double side =
        np.tangent.x * (p.y - np.foot.y) - np.tangent.y * (p.x - np.foot.x);
    sum += side >= 0.0 ? np.distance : -np.distance;
  }
  return sum / static_cast<double>(pts.size());
}

struct SideSeparators {
  std::optional<std::string> left;
  std::optional<std::string> right;
};

// Immediate left/right separators of a centerline: topology ids when
// present, otherwise the nearest separator polyline on each lateral side
// within lane_width + slack.
inline SideSeparators resolve_separators(const VectorMap& map,
                                         const MapElement& centerline,
                                         const PriorParams& params) {
  SideSeparators out;
  if (centerline.left_neighbor && map.find(*centerline.left_neighbor)) {
    out.left = *centerline.left_neighbor;
  }
  if (centerline.right_neighbor && map.find(*centerline.right_neighbor)) {
    out.right = *centerline.right_neighbor;
  }
  if (out.left && out.right) {
    return out;
  }

  const std::vector<Vec2> cl = to_xy(centerline);
  double best_left = std::numeric_limits<double>::infinity();
  double best_right = std::numeric_limits<double>::infinity();
  const double max_dist = params.lane_width + params.lateral_slack;
  for (const MapElement& e : map.elements) {
    if (!is_separator_class(e.cls)) {
      continue;
    }
    const double offset = mean_signed_lateral(to_xy(e), cl);
    const double d = std::abs(offset);
    if (d > max_dist || d < kGeomEps) {
      continue;
    }
    if (offset > 0.0 && !centerline.left_neighbor && d < best_left) {
      best_left = d;
      out.left = e.id;
    }
    if (offset < 0.0 && !centerline.right_neighbor && d < best_right) {
      best_right = d;
      out.right = e.id;
    }
  }
  return out;
}

// One corridor edge: the referenced separator's polyline when available,
// otherwise the centerline offset laterally as a fallback. The returned
// points walk in the centerline's direction.
inline std::vector<Vec2> corridor_edge(const VectorMap& map,
                                       const MapElement& centerline,
                                       const std::optional<std::string>& id,
                                       double fallback_offset) {
  const std::vector<Vec2> cl = to_xy(centerline);
  std::vector<Vec2> pts;
  if (id) {
    if (const MapElement* e = map.find(*id)) {
      pts = to_xy(*e);
    }
  }
  if (pts.size() < 2) {
    pts = offset_polyline(cl, fallback_offset);
  }
  const Vec2 cl_dir{cl.back().x - cl.front().x, cl.back().y - cl.front().y};
  const Vec2 e_dir{pts.back().x - pts.front().x, pts.back().y - pts.front().y};
  if (cl_dir.x * e_dir.x + cl_dir.y * e_dir.y < 0.0) {
    std::reverse(pts.begin(), pts.end());
  }
  return pts;
}

// Corridor polygon between a left and a right edge polyline.
inline std::vector<Vec2> stitch_corridor(std::vector<Vec2> left_edge,
                                         const std::vector<Vec2>& right_edge) {
  left_edge.insert(left_edge.end(), right_edge.rbegin(), right_edge.rend());
  return left_edge;
}

inline const MapElement* find_ego_centerline(const VectorMap& map,
                                             const PriorParams& params) {
  const Vec2 origin{0.0, 0.0};
  const double threshold = params.lane_width / 2.0 + params.lateral_slack;
  const MapElement* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const MapElement& e : map.elements) {
    if (e.cls != MapClass::Centerline) {
      continue;
    }
    const double d = point_polyline_distance(origin, to_xy(e));
    if (d > threshold) {
      continue;
    }
    if (d < best_dist || (d == best_dist && best && e.id < best->id)) {
      best_dist = d;
      best = &e;
    }
  }
  return best;
}

}  // namespace detail

/// Partitions a scene's ground truth into (prior, complement) according to
/// the scenario. Every element id lands in exactly one side.
inline PriorScenario apply_prior(const Scene& scene, ScenarioId scenario,
                                 const PriorParams& params = PriorParams{}) {
  const VectorMap& gt = scene.map;

  // Ids that belong to the complement (the masked elements). Selection
  // scenarios are expressed through their masked complement as well.
  std::set<std::string> masked;

  switch (scenario) {
    case ScenarioId::NoPrior:
      for (const MapElement& e : gt.elements) {
        masked.insert(e.id);
      }
      break;
    case ScenarioId::OnlyBoundaries:
      for (const MapElement& e : gt.elements) {
        if (e.cls != MapClass::Boundary) {
          masked.insert(e.id);
        }
      }
      break;
    case ScenarioId::OnlyCenterlines:
      for (const MapElement& e : gt.elements) {
        if (e.cls != MapClass::Centerline) {
          masked.insert(e.id);
        }
      }
      break;
    case ScenarioId::MaskCenterlines:
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::Centerline) {
          masked.insert(e.id);
        }
      }
      break;
    case ScenarioId::MaskPedCrossings:
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::PedCrossing) {
          masked.insert(e.id);
        }
      }
      break;
    case ScenarioId::MaskBoundaries:
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::Boundary) {
          masked.insert(e.id);
        }
      }
      break;
    case ScenarioId::MaskDividers:
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::DashedDivider ||
            e.cls == MapClass::SolidDivider) {
          masked.insert(e.id);
        }
      }
      break;
    case ScenarioId::MaskEgoLane: {
      const MapElement* ego = detail::find_ego_centerline(gt, params);
      if (ego == nullptr) {
        throw Error("no ego lane");
      }
      masked.insert(ego->id);
      const detail::SideSeparators seps =
          detail::resolve_separators(gt, *ego, params);
      if (seps.left) {
        masked.insert(*seps.left);
      }
      if (seps.right) {
        masked.insert(*seps.right);
      }
      const std::vector<Vec2> corridor = detail::stitch_corridor(
          detail::corridor_edge(gt, *ego, seps.left, params.lane_width / 2.0),
          detail::corridor_edge(gt, *ego, seps.right,
                                -params.lane_width / 2.0));
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::PedCrossing &&
            polygons_intersect(to_xy(e), corridor)) {
          masked.insert(e.id);
        }
      }
      break;
    }
    case ScenarioId::MaskEgoRoad: {
      const MapElement* ego = detail::find_ego_centerline(gt, params);
      if (ego == nullptr) {
        throw Error("no ego lane");
      }
      // Resolve separators for every centerline once; two lanes are
      // laterally connected when they share a separator element.
      std::map<std::string, detail::SideSeparators> seps_of;
      std::vector<const MapElement*> centerlines;
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::Centerline) {
          centerlines.push_back(&e);
          seps_of[e.id] = detail::resolve_separators(gt, e, params);
        }
      }
      auto shares_separator = [&](const std::string& a, const std::string& b) {
        const detail::SideSeparators& sa = seps_of[a];
        const detail::SideSeparators& sb = seps_of[b];
        auto eq = [](const std::optional<std::string>& x,
                     const std::optional<std::string>& y) {
          return x && y && *x == *y;
        };
        return eq(sa.left, sb.right) || eq(sa.right, sb.left) ||
               eq(sa.left, sb.left) || eq(sa.right, sb.right);
      };

      std::set<std::string> closure = {ego->id};
      bool grew = true;
      while (grew) {
        grew = false;
        for (const MapElement* cl : centerlines) {
          if (closure.count(cl->id)) {
            continue;
          }
          for (const std::string& member : closure) {
            if (shares_separator(cl->id, member)) {
              closure.insert(cl->id);
              grew = true;
              break;
            }
          }
        }
      }

      for (const std::string& id : closure) {
        masked.insert(id);
        if (seps_of[id].left) {
          masked.insert(*seps_of[id].left);
        }
        if (seps_of[id].right) {
          masked.insert(*seps_of[id].right);
        }
      }

      // Corridor between the outermost lanes of the closure.
      const std::vector<Vec2> ego_xy = to_xy(*ego);
      const MapElement* leftmost = ego;
      const MapElement* rightmost = ego;
      double max_off = 0.0;
      double min_off = 0.0;
      for (const MapElement* cl : centerlines) {
        if (!closure.count(cl->id)) {
          continue;
        }
        const double off = detail::mean_signed_lateral(to_xy(*cl), ego_xy);
        if (off > max_off) {
          max_off = off;
          leftmost = cl;
        }
        if (off < min_off) {
          min_off = off;
          rightmost = cl;
        }
      }
      // Road corridor between the outermost separators of the closure.
      const std::vector<Vec2> corridor = detail::stitch_corridor(
          detail::corridor_edge(gt, *leftmost, seps_of[leftmost->id].left,
                                params.lane_width / 2.0),
          detail::corridor_edge(gt, *rightmost, seps_of[rightmost->id].right,
                                -params.lane_width / 2.0));
      for (const MapElement& e : gt.elements) {
        if (e.cls == MapClass::PedCrossing &&
            polygons_intersect(to_xy(e), corridor)) {
          masked.insert(e.id);
        }
      }
      break;
    }
  }

  PriorScenario out;
  out.scenario = scenario;
  out.scene_id = scene.scene_id;
  out.prior.bev_range = gt.bev_range;
  out.complement.bev_range = gt.bev_range;
  for (const MapElement& e : gt.elements) {
    if (masked.count(e.id)) {
      out.complement.elements.push_back(e);
    } else {
      out.prior.elements.push_back(e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario-set regimes.

/// How to pair scenes with scenarios when deriving a training or evaluation
/// set: NaiveSplit partitions the dataset into equal disjoint groups, one
/// per scenario; Augmentation takes the full cross product (an n-fold
/// increase over the dataset).
struct RegimeConfig {
  enum class Mode { NaiveSplit, Augmentation };
  Mode mode = Mode::Augmentation;
  std::vector<ScenarioId> scenario_list;
  std::uint64_t seed = 0;

  void validate() const {
    if (scenario_list.empty()) {
      throw Error("scenario list must not be empty");
    }
    std::set<ScenarioId> seen(scenario_list.begin(), scenario_list.end());
    if (seen.size() != scenario_list.size()) {
      throw Error("scenario list must not contain duplicates");
    }
  }
};

inline RegimeConfig::Mode regime_mode_from_string(const std::string& s) {
  if (s == "naive") return RegimeConfig::Mode::NaiveSplit;
  if (s == "augment") return RegimeConfig::Mode::Augmentation;
  throw Error("unknown regime \"" + s + "\" (expected naive|augment)");
}

struct ScenarioAssignment {
  std::size_t scene_index = 0;  // index into the manifest
  ScenarioId scenario = ScenarioId::NoPrior;
};

inline std::vector<ScenarioAssignment> build_scenario_set(
    const DatasetManifest& manifest, const RegimeConfig& regime) {
  regime.validate();
  if (manifest.scenes.empty()) {
    throw Error("manifest must not be empty");
  }
  const std::size_t n_scenes = manifest.scenes.size();
  const std::size_t n_scen = regime.scenario_list.size();
  std::vector<ScenarioAssignment> out;

  if (regime.mode == RegimeConfig::Mode::Augmentation) {
    out.reserve(n_scenes * n_scen);
    for (std::size_t i = 0; i < n_scenes; ++i) {
      for (ScenarioId s : regime.scenario_list) {
        out.push_back({i, s});
      }
    }
    return out;
  }

  // NaiveSplit: shuffle scene indices, deal them round-robin over the
  // scenario list (groups differ in size by at most one), then emit in
  // manifest order.
  std::vector<std::size_t> order(n_scenes);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(regime.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ScenarioId> assigned(n_scenes, regime.scenario_list.front());
  for (std::size_t pos = 0; pos < n_scenes; ++pos) {
    assigned[order[pos]] = regime.scenario_list[pos % n_scen];
  }
  out.reserve(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) {
    out.push_back({i, assigned[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario-set file: JSON lines {"scene_id": str, "scenario": str}.

struct ScenarioSetEntry {
  std::string scene_id;
  ScenarioId scenario;
};

inline std::string scenario_set_to_string(
    const std::vector<ScenarioSetEntry>& entries) {
  std::string out;
  for (const ScenarioSetEntry& e : entries) {
    njson j;
    j["scene_id"] = e.scene_id;
    j["scenario"] = to_string(e.scenario);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_scenario_set(const std::vector<ScenarioSetEntry>& entries,
                              const std::filesystem::path& path) {
  write_atomic(path, scenario_set_to_string(entries));
}

inline std::vector<ScenarioSetEntry> load_scenario_set(
    const std::filesystem::path& path) {
  std::vector<ScenarioSetEntry> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    njson j = detail::parse_line(line, line_no);
    ScenarioSetEntry e;
    try {
      e.scene_id =
          detail::require_field(j, "scene_id", line_no).get<std::string>();
      e.scenario = scenario_from_string(
          detail::require_field(j, "scenario", line_no).get<std::string>());
    } catch (const Error&) {
      throw;
    } catch (const njson::exception&) {
      throw Error("malformed record at line " + std::to_string(line_no));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mapcomp
