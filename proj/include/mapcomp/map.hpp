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

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "mapcomp/error.hpp"

namespace mapcomp {

// Coordinates are meters in the ego frame: x longitudinal forward,
// y lateral left, z up.
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Distances below this are treated as degenerate geometry.
inline constexpr double kGeomEps = 1e-9;

/// Semantic classes of vectorized map elements. PedCrossing is the only
/// polygon (closed) class; all others are open polylines.
enum class MapClass {
  DashedDivider = 0,
  SolidDivider = 1,
  Boundary = 2,
  Centerline = 3,
  PedCrossing = 4,
};

inline constexpr int kNumClasses = 5;

inline constexpr std::array<MapClass, kNumClasses> kAllClasses = {
    MapClass::DashedDivider, MapClass::SolidDivider, MapClass::Boundary,
    MapClass::Centerline, MapClass::PedCrossing};

inline bool is_polygon_class(MapClass c) { return c == MapClass::PedCrossing; }

// Dividers and boundaries; the elements that laterally separate lanes.
inline bool is_separator_class(MapClass c) {
  return c == MapClass::DashedDivider || c == MapClass::SolidDivider ||
         c == MapClass::Boundary;
}

inline const char* to_string(MapClass c) {
  switch (c) {
    case MapClass::DashedDivider:
      return "lane_divider_dashed";
    case MapClass::SolidDivider:
      return "lane_divider_solid";
    case MapClass::Boundary:
      return "road_boundary";
    case MapClass::Centerline:
      return "lane_centerline";
    case MapClass::PedCrossing:
      return "ped_crossing";
  }
  return "unknown";
}

inline MapClass map_class_from_string(const std::string& s) {
  for (MapClass c : kAllClasses) {
    if (s == to_string(c)) {
      return c;
    }
  }
  throw Error("unknown class \"" + s + "\"");
}

/// Rectangular bird's-eye-view perception range in meters.
struct BevRange {
  double x_min = -30.0;
  double x_max = 30.0;
  double y_min = -15.0;
  double y_max = 15.0;

  bool contains(double x, double y, double eps = 0.0) const {
    return x >= x_min - eps && x <= x_max + eps && y >= y_min - eps &&
           y <= y_max + eps;
  }

  void validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) {
      throw Error("invalid bev_range: min must be smaller than max");
    }
  }
};

/// One vectorized map instance: a semantic class plus an ordered point
/// sequence. Closed geometry never duplicates the first point; the closing
/// edge is implied by the `closed` flag.
struct MapElement {
  std::string id;
  MapClass cls = MapClass::Boundary;
  bool closed = false;
  std::vector<Vec3> points;
  // Lane topology, only meaningful for centerlines: ids of the immediately
  // adjacent separator elements (divider or boundary) on each side.
  std::optional<std::string> left_neighbor;
  std::optional<std::string> right_neighbor;
};

inline MapElement make_element(std::string id, MapClass cls,
                               std::vector<Vec3> points) {
  MapElement e;
  e.id = std::move(id);
  e.cls = cls;
  e.closed = is_polygon_class(cls);
  e.points = std::move(points);
  return e;
}

inline double xy_dist(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline std::vector<Vec2> to_xy(const std::vector<Vec3>& pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) {
    out.push_back({p.x, p.y});
  }
  return out;
}

inline std::vector<Vec2> to_xy(const MapElement& e) { return to_xy(e.points); }

inline void validate_element(const MapElement& e) {
  if (e.id.empty()) {
    throw Error("element id must not be empty");
  }
  if (e.points.size() < 2) {
    throw Error("element \"" + e.id + "\" has fewer than 2 points");
  }
  for (std::size_t i = 1; i < e.points.size(); ++i) {
    const Vec3& a = e.points[i - 1];
    const Vec3& b = e.points[i];
    const double d =
        std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                  (a.z - b.z) * (a.z - b.z));
    if (d <= kGeomEps) {
      throw Error("element \"" + e.id + "\" has identical consecutive points");
    }
  }
  if (e.closed != is_polygon_class(e.cls)) {
    throw Error("element \"" + e.id + "\" closed flag does not match class " +
                to_string(e.cls));
  }
  if (!std::isfinite(e.points.front().x)) {
    throw Error("element \"" + e.id + "\" has non-finite coordinates");
  }
  for (const Vec3& p : e.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error("element \"" + e.id + "\" has non-finite coordinates");
    }
  }
}

/// A full vectorized map: a set of elements plus the BEV range every point
/// is expected to lie in (after clipping).
struct VectorMap {
  std::vector<MapElement> elements;
  BevRange bev_range;

  const MapElement* find(const std::string& id) const {
    for (const MapElement& e : elements) {
      if (e.id == id) {
        return &e;
      }
    }
    return nullptr;
  }

  void validate() const {
    bev_range.validate();
    std::unordered_set<std::string> ids;
    for (const MapElement& e : elements) {
      validate_element(e);
      if (!ids.insert(e.id).second) {
        throw Error("duplicate element id \"" + e.id + "\"");
      }
    }
  }

  // Checks the post-clipping invariant that no point leaves the range.
  void validate_in_range(double eps = kGeomEps) const {
    for (const MapElement& e : elements) {
      for (const Vec3& p : e.points) {
        if (!bev_range.contains(p.x, p.y, eps)) {
          throw Error("element \"" + e.id + "\" has a point outside bev_range");
        }
      }
    }
  }
};

}  // namespace mapcomp
