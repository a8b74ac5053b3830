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
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mapcomp/error.hpp"
#include "mapcomp/map.hpp"

namespace mapcomp {

// Arc length of a point sequence; for closed geometry the closing edge back
// to the first point is included.
inline double polyline_length(const std::vector<Vec3>& pts, bool closed) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vec3& a = pts[i - 1];
    const Vec3& b = pts[i];
    len += std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
  }
  if (closed && pts.size() > 1) {
    const Vec3& a = pts.back();
    const Vec3& b = pts.front();
    len += std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
  }
  return len;
}

namespace detail {

inline Vec3 lerp(const Vec3& a, const Vec3& b, double t) {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t,
          a.z + (b.z - a.z) * t};
}

// Point at arc position `s` on the (possibly closed) polyline described by
// `pts`. `cum` holds cumulative segment lengths with cum[0] = 0.
inline Vec3 point_at_arc(const std::vector<Vec3>& pts,
                         const std::vector<double>& cum, bool closed,
                         double s) {
  const std::size_t nseg = cum.size() - 1;
  // Find segment j with cum[j] <= s <= cum[j+1].
  std::size_t j = 0;
  while (j + 1 < nseg && cum[j + 1] < s) {
    ++j;
  }
  const double seg_len = cum[j + 1] - cum[j];
  const double t = seg_len > 0.0 ? (s - cum[j]) / seg_len : 0.0;
  const Vec3& a = pts[j];
  const Vec3& b = (closed && j + 1 == pts.size()) ? pts.front() : pts[j + 1];
  return lerp(a, b, std::clamp(t, 0.0, 1.0));
}

}  // namespace detail

/// Resamples an element to exactly `n` points at equal arc-length spacing
/// along its original geometry. Endpoints of open polylines are preserved
/// exactly; closed polygons are sampled around the perimeter starting at the
/// original first vertex.
inline MapElement resample(const MapElement& element, int n) {
  if (n < 2) {
    throw Error("resample requires n >= 2");
  }
  const bool closed = element.closed;
  const std::vector<Vec3>& pts = element.points;
  if (pts.size() < 2) {
    throw Error("degenerate geometry");
  }

  const std::size_t nseg = closed ? pts.size() : pts.size() - 1;
  std::vector<double> cum(nseg + 1, 0.0);
  for (std::size_t i = 0; i < nseg; ++i) {
    const Vec3& a = pts[i];
    const Vec3& b = (i + 1 == pts.size()) ? pts.front() : pts[i + 1];
    cum[i + 1] =
        cum[i] + std::sqrt((a.x - b.x) * (a.x - b.x) +
                           (a.y - b.y) * (a.y - b.y) +
                           (a.z - b.z) * (a.z - b.z));
  }
  const double total = cum.back();
  if (total < kGeomEps) {
    throw Error("degenerate geometry");
  }

  MapElement out = element;
  out.points.clear();
  out.points.reserve(static_cast<std::size_t>(n));
  if (closed) {
    out.points.push_back(pts.front());
    for (int i = 1; i < n; ++i) {
      const double s = total * static_cast<double>(i) / static_cast<double>(n);
      out.points.push_back(detail::point_at_arc(pts, cum, true, s));
    }
  } else {
    out.points.push_back(pts.front());
    for (int i = 1; i + 1 < n; ++i) {
      const double s =
          total * static_cast<double>(i) / static_cast<double>(n - 1);
      out.points.push_back(detail::point_at_arc(pts, cum, false, s));
    }
    out.points.push_back(pts.back());
  }
  return out;
}

namespace detail {

inline double directed_mean_min(const std::vector<Vec2>& from,
                                const std::vector<Vec2>& to) {
  double sum = 0.0;
  for (const Vec2& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& q : to) {
      const double d = std::hypot(p.x - q.x, p.y - q.y);
      if (d < best) {
        best = d;
      }
    }
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

}  // namespace detail

/// Symmetric Chamfer distance between two point sets: half the sum of the
/// two directed mean nearest-neighbor distances. Measured in the x-y plane
/// only; z never affects metrics.
inline double chamfer(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) {
    throw Error("chamfer requires non-empty point lists");
  }
  return 0.5 * (detail::directed_mean_min(a, b) + detail::directed_mean_min(b, a));
}

inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  return chamfer(to_xy(a), to_xy(b));
}

namespace detail {

// Liang-Barsky clip of segment p->q against the range rectangle. Returns
// false when the segment misses the rectangle, otherwise yields the clipped
// parameter interval [t0, t1] within [0, 1].
inline bool clip_segment(const Vec3& p, const Vec3& q, const BevRange& r,
                         double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  const double pvals[4] = {-dx, dx, -dy, dy};
  const double qvals[4] = {p.x - r.x_min, r.x_max - p.x, p.y - r.y_min,
                           r.y_max - p.y};
  for (int i = 0; i < 4; ++i) {
    if (pvals[i] == 0.0) {
      if (qvals[i] < 0.0) {
        return false;
      }
      continue;
    }
    const double t = qvals[i] / pvals[i];
    if (pvals[i] < 0.0) {
      if (t > t1) {
        return false;
      }
      if (t > t0) {
        t0 = t;
      }
    } else {
      if (t < t0) {
        return false;
      }
      if (t < t1) {
        t1 = t;
      }
    }
  }
  return t0 <= t1;
}

inline Vec3 clamp_into(const Vec3& p, const BevRange& r) {
  return {std::clamp(p.x, r.x_min, r.x_max), std::clamp(p.y, r.y_min, r.y_max),
          p.z};
}

inline void push_dedup(std::vector<Vec3>& part, const Vec3& p) {
  if (!part.empty() && xy_dist(part.back(), p) <= kGeomEps &&
      std::abs(part.back().z - p.z) <= kGeomEps) {
    return;
  }
  part.push_back(p);
}

// Clips an open polyline against the rectangle; the result may be several
// disjoint parts when the line leaves and re-enters the range.
inline std::vector<std::vector<Vec3>> clip_open(const std::vector<Vec3>& pts,
                                                const BevRange& r) {
  std::vector<std::vector<Vec3>> parts;
  std::vector<Vec3> cur;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec3& p = pts[i];
    const Vec3& q = pts[i + 1];
    double t0 = 0.0;
    double t1 = 1.0;
    if (!clip_segment(p, q, r, t0, t1) || t1 - t0 <= 0.0) {
      if (cur.size() >= 2) {
        parts.push_back(std::move(cur));
      }
      cur.clear();
      continue;
    }
    const Vec3 a = t0 == 0.0 ? p : clamp_into(lerp(p, q, t0), r);
    const Vec3 b = t1 == 1.0 ? q : clamp_into(lerp(p, q, t1), r);
    if (t0 > 0.0 && !cur.empty()) {
      // Entered the range anew; the previous run ended at the border.
      if (cur.size() >= 2) {
        parts.push_back(std::move(cur));
      }
      cur.clear();
    }
    push_dedup(cur, a);
    push_dedup(cur, b);
    if (t1 < 1.0) {
      if (cur.size() >= 2) {
        parts.push_back(std::move(cur));
      }
      cur.clear();
    }
  }
  if (cur.size() >= 2) {
    parts.push_back(std::move(cur));
  }
  return parts;
}

// Sutherland-Hodgman clip of a closed polygon against the rectangle.
inline std::vector<Vec3> clip_closed(const std::vector<Vec3>& pts,
                                     const BevRange& r) {
  // Half-planes: keep(p) >= 0.
  struct Plane {
    int axis;     // 0 = x, 1 = y
    double bound;
    int sign;     // +1 keeps values >= bound, -1 keeps values <= bound
  };
  const Plane planes[4] = {{0, r.x_min, +1}, {0, r.x_max, -1},
                           {1, r.y_min, +1}, {1, r.y_max, -1}};
  std::vector<Vec3> poly = pts;
  for (const Plane& pl : planes) {
    if (poly.empty()) {
      break;
    }
    auto value = [&pl](const Vec3& p) {
      const double v = pl.axis == 0 ? p.x : p.y;
      return pl.sign > 0 ? v - pl.bound : pl.bound - v;
    };
    std::vector<Vec3> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec3& a = poly[i];
      const Vec3& b = poly[(i + 1) % poly.size()];
      const double va = value(a);
      const double vb = value(b);
      if (va >= 0.0) {
        next.push_back(a);
      }
      if ((va < 0.0) != (vb < 0.0)) {
        const double t = va / (va - vb);
        next.push_back(clamp_into(lerp(a, b, t), r));
      }
    }
    poly = std::move(next);
  }
  // Remove duplicate consecutive vertices (including the wrap pair).
  std::vector<Vec3> out;
  for (const Vec3& p : poly) {
    push_dedup(out, p);
  }
  while (out.size() > 1 && xy_dist(out.front(), out.back()) <= kGeomEps) {
    out.pop_back();
  }
  return out;
}

}  // namespace detail

/// Intersects every element of the map with the range rectangle. Elements
/// crossing the border are cut at the border, elements fully outside are
/// removed, and an element split into several parts gets suffixed ids
/// "<id>#0", "<id>#1", ... Single-part results keep their original id.
inline VectorMap clip_to_bev(const VectorMap& map, const BevRange& range) {
  range.validate();
  VectorMap out;
  out.bev_range = range;
  for (const MapElement& e : map.elements) {
    bool fully_inside = true;
    for (const Vec3& p : e.points) {
      if (!range.contains(p.x, p.y)) {
        fully_inside = false;
        break;
      }
    }
    if (fully_inside) {
      out.elements.push_back(e);
      continue;
    }

    std::vector<std::vector<Vec3>> parts;
    if (e.closed) {
      std::vector<Vec3> poly = detail::clip_closed(e.points, range);
      if (poly.size() >= 3) {
        parts.push_back(std::move(poly));
      }
    } else {
      parts = detail::clip_open(e.points, range);
    }
    if (parts.empty()) {
      continue;
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
      MapElement piece = e;
      piece.points = std::move(parts[i]);
      if (parts.size() > 1) {
        piece.id = e.id + "#" + std::to_string(i);
      }
      if (polyline_length(piece.points, piece.closed) > kGeomEps) {
        out.elements.push_back(std::move(piece));
      }
    }
  }

  // Topology references to elements that were removed or split no longer
  // resolve; null them instead of leaving dangling ids.
  for (MapElement& e : out.elements) {
    if (e.left_neighbor && out.find(*e.left_neighbor) == nullptr) {
      e.left_neighbor.reset();
    }
    if (e.right_neighbor && out.find(*e.right_neighbor) == nullptr) {
      e.right_neighbor.reset();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2D predicates used by the scenario generators.

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double t = (p.y - a.y) / (b.y - a.y);
      if (p.x < a.x + t * (b.x - a.x)) {
        inside = !inside;
      }
    }
  }
  return inside;
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                               const Vec2& d) {
  const double d1 = cross2(c, d, a);
  const double d2 = cross2(c, d, b);
  const double d3 = cross2(a, b, c);
  const double d4 = cross2(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x, q.x) - kGeomEps <= r.x &&
           r.x <= std::max(p.x, q.x) + kGeomEps &&
           std::min(p.y, q.y) - kGeomEps <= r.y &&
           r.y <= std::max(p.y, q.y) + kGeomEps;
  };
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

inline bool polygons_intersect(const std::vector<Vec2>& a,
                               const std::vector<Vec2>& b) {
  if (a.size() < 3 || b.size() < 3) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2& p = a[i];
    const Vec2& q = a[(i + 1) % a.size()];
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (segments_intersect(p, q, b[j], b[(j + 1) % b.size()])) {
        return true;
      }
    }
  }
  return point_in_polygon(a.front(), b) || point_in_polygon(b.front(), a);
}

/// Minimal distance from a point to a polyline (segment-wise, x-y plane).
inline double point_polyline_distance(const Vec2& p,
                                      const std::vector<Vec2>& pts) {
  double best = std::numeric_limits<double>::infinity();
  if (pts.size() == 1) {
    return dist(p, pts.front());
  }
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
    const double d = std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
    if (d < best) {
      best = d;
    }
  }
  return best;
}

/// Offsets an open polyline laterally: positive distances move points to the
/// left of the walking direction. Used as a fallback corridor edge when a
/// separator element is missing.
inline std::vector<Vec2> offset_polyline(const std::vector<Vec2>& pts,
                                         double d) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& prev = pts[i == 0 ? 0 : i - 1];
    const Vec2& next = pts[i + 1 == n ? n - 1 : i + 1];
    double tx = next.x - prev.x;
    double ty = next.y - prev.y;
    const double len = std::hypot(tx, ty);
    if (len > kGeomEps) {
      tx /= len;
      ty /= len;
    } else {
      tx = 1.0;
      ty = 0.0;
    }
    // Left normal of (tx, ty) is (-ty, tx).
    out.push_back({pts[i].x - ty * d, pts[i].y + tx * d});
  }
  return out;
}

}  // namespace mapcomp
