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

// Brute-force reference implementations used by tests only. These stay
// deliberately independent of the library code paths they check: straight
// loops, explicit permutation enumeration, rectangle-summed PR curves.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "mapcomp/map.hpp"

namespace oracles {

using mapcomp::BevRange;
using mapcomp::Vec2;
using mapcomp::Vec3;

// Exhaustive minimum assignment cost over all pad-completed permutations.
inline double brute_hungarian_cost(const std::vector<std::vector<double>>& cost) {
  const int m = static_cast<int>(cost.size());
  const int n = m > 0 ? static_cast<int>(cost[0].size()) : 0;
  if (m == 0 || n == 0) {
    return 0.0;
  }
  const int N = std::max(m, n);
  std::vector<int> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < N; ++i) {
      const int j = perm[static_cast<std::size_t>(i)];
      if (i < m && j < n) {
        total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
    if (total < best) {
      best = total;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double oracle_chamfer(const std::vector<Vec2>& a,
                             const std::vector<Vec2>& b) {
  double sum_ab = 0.0;
  for (const Vec2& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& q : b) {
      const double d = std::hypot(p.x - q.x, p.y - q.y);
      if (d < best) {
        best = d;
      }
    }
    sum_ab += best;
  }
  double sum_ba = 0.0;
  for (const Vec2& q : b) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& p : a) {
      const double d = std::hypot(q.x - p.x, q.y - p.y);
      if (d < best) {
        best = d;
      }
    }
    sum_ba += best;
  }
  return 0.5 * (sum_ab / static_cast<double>(a.size()) +
                sum_ba / static_cast<double>(b.size()));
}

// Reference average precision: explicit confidence-descending order
// (insertion sort, stable), explicit greedy matching, full precision and
// recall arrays, PR area by rectangle summation.
inline std::optional<double> brute_average_precision(
    const std::vector<std::pair<std::vector<Vec2>, double>>& preds,
    const std::vector<std::vector<Vec2>>& gts, double tau) {
  if (gts.empty()) {
    return std::nullopt;
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::size_t pos = order.size();
    while (pos > 0 && preds[order[pos - 1]].second < preds[i].second) {
      --pos;
    }
    order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), i);
  }

  std::vector<bool> taken(gts.size(), false);
  std::vector<double> precisions;
  std::vector<double> recalls;
  int tp = 0;
  int fp = 0;
  for (std::size_t idx : order) {
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) {
        continue;
      }
      const double d = oracle_chamfer(preds[idx].first, gts[g]);
      if (d < best_dist) {
        best_dist = d;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best_dist < tau) {
      taken[best_gt] = true;
      ++tp;
    } else {
      ++fp;
    }
    precisions.push_back(static_cast<double>(tp) / (tp + fp));
    recalls.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }

  double area = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precisions.size(); ++i) {
    area += (recalls[i] - prev_recall) * precisions[i];
    prev_recall = recalls[i];
  }
  return area;
}

// Segment-wise clipping oracle for open polylines: clips every segment
// against the rectangle on its own and glues consecutive segments whose
// clipped pieces share an endpoint.
inline std::vector<std::vector<Vec3>> brute_clip_open(
    const std::vector<Vec3>& pts, const BevRange& r) {
  auto inside = [&](double x, double y) {
    return x >= r.x_min && x <= r.x_max && y >= r.y_min && y <= r.y_max;
  };
  std::vector<std::vector<Vec3>> parts;
  std::vector<Vec3> cur;
  auto flush = [&]() {
    if (cur.size() >= 2) {
      parts.push_back(cur);
    }
    cur.clear();
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec3& p = pts[i];
    const Vec3& q = pts[i + 1];
    // Sample the segment densely and keep the maximal inside run; a dense
    // scan is slow but independent of any clipping algebra.
    const int steps = 20000;
    double t_enter = -1.0;
    double t_exit = -1.0;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const double x = p.x + (q.x - p.x) * t;
      const double y = p.y + (q.y - p.y) * t;
      if (inside(x, y)) {
        if (t_enter < 0.0) {
          t_enter = t;
        }
        t_exit = t;
      }
    }
    if (t_enter < 0.0) {
      flush();
      continue;
    }
    auto at = [&](double t) -> Vec3 {
      return {p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t,
              p.z + (q.z - p.z) * t};
    };
    const Vec3 a = at(t_enter);
    const Vec3 b = at(t_exit);
    if (t_enter > 1e-9 && !cur.empty()) {
      flush();
    }
    if (cur.empty()) {
      cur.push_back(a);
    }
    if (std::hypot(b.x - cur.back().x, b.y - cur.back().y) > 1e-9) {
      cur.push_back(b);
    }
    if (t_exit < 1.0 - 1e-9) {
      flush();
    }
  }
  flush();
  return parts;
}

}  // namespace oracles
