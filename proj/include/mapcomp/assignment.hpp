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
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapcomp/error.hpp"
#include "mapcomp/geometry.hpp"
#include "mapcomp/map.hpp"
#include "mapcomp/query.hpp"
#include "mapcomp/scene.hpp"

namespace mapcomp {

/// Matching-cost weights. Defaults follow the reference configuration of
/// the base detection architecture; nothing here is tuned by this toolkit.
struct CostConfig {
  double w_cls = 2.0;
  double w_pts = 5.0;
  double w_dir = 0.005;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

/// Decoder output stand-in: class probabilities plus a fixed-size 2D point
/// sequence, tagged with its query identity and provenance.
struct Prediction {
  enum class Block { O2O, O2M };
  Block block = Block::O2O;
  int rep = -1;  // repetition index for O2M predictions
  int row = -1;
  std::array<double, kNumClasses> class_scores{};
  std::vector<Vec2> points;
  Provenance provenance;

  MapClass predicted_class() const {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (class_scores[static_cast<std::size_t>(c)] >
          class_scores[static_cast<std::size_t>(best)]) {
        best = c;
      }
    }
    return static_cast<MapClass>(best);
  }

  double confidence() const {
    return *std::max_element(class_scores.begin(), class_scores.end());
  }
};

/// Focal classification cost for the target-class probability `p`
/// (positive-cost minus negative-cost form, eps-clamped logs).
inline double focal_cost(double p, double alpha = 0.25, double gamma = 2.0) {
  constexpr double eps = 1e-12;
  const double pos = -std::log(p + eps) * alpha * std::pow(1.0 - p, gamma);
  const double neg =
      -std::log(1.0 - p + eps) * (1.0 - alpha) * std::pow(p, gamma);
  return pos - neg;
}

// ---------------------------------------------------------------------------
// Hungarian solver.

struct HungarianResult {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total_cost = 0.0;
};

// Padding cost for rectangular inputs: larger than any realistic matching
// cost, small enough that binary64 sums stay exact.
inline constexpr double kHungarianPad = 1e12;

/// Minimum-cost assignment on an m x n matrix (shortest augmenting path,
/// O(n^3)). Rectangular matrices are padded internally; exactly min(m, n)
/// real pairs are returned. Ties between equally cheap columns resolve to
/// the lowest column index, rows are processed in increasing order.
inline HungarianResult hungarian(const std::vector<std::vector<double>>& cost) {
  const int m = static_cast<int>(cost.size());
  const int n = m > 0 ? static_cast<int>(cost[0].size()) : 0;
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != n) {
      throw Error("cost matrix must be rectangular");
    }
    for (double c : row) {
      if (!std::isfinite(c)) {
        throw Error("non-finite entry in cost matrix");
      }
    }
  }
  HungarianResult result;
  if (m == 0 || n == 0) {
    return result;
  }

  const int N = std::max(m, n);
  auto at = [&](int i, int j) -> double {
    return (i < m && j < n) ? cost[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(j)]
                            : kHungarianPad;
  };

  // 1-indexed potentials / matching arrays.
  std::vector<double> u(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(N) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(N) + 1, 0);
  for (int i = 1; i <= N; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(N) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<char> used(static_cast<std::size_t>(N) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= N; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          continue;
        }
        const double cur = at(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= N; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  for (int j = 1; j <= N; ++j) {
    const int i = p[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= m && j <= n) {
      result.pairs.emplace_back(i - 1, j - 1);
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [r, c] : result.pairs) {
    result.total_cost +=
        cost[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return result;
}

// ---------------------------------------------------------------------------
// Matching cost between one prediction and one ground-truth element.

namespace detail {

// Index permutations a polyline is allowed to be matched under: identity
// and reversal for open polylines, every cyclic shift in both directions
// for closed polygons.
inline std::vector<std::vector<int>> allowed_permutations(int v, bool closed) {
  std::vector<std::vector<int>> perms;
  if (!closed) {
    std::vector<int> identity(static_cast<std::size_t>(v));
    std::vector<int> reversed(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i) {
      identity[static_cast<std::size_t>(i)] = i;
      reversed[static_cast<std::size_t>(i)] = v - 1 - i;
    }
    perms.push_back(std::move(identity));
    perms.push_back(std::move(reversed));
    return perms;
  }
  for (int shift = 0; shift < v; ++shift) {
    for (int dir : {+1, -1}) {
      std::vector<int> perm(static_cast<std::size_t>(v));
      for (int i = 0; i < v; ++i) {
        perm[static_cast<std::size_t>(i)] =
            ((shift + dir * i) % v + v) % v;
      }
      perms.push_back(std::move(perm));
    }
  }
  return perms;
}

inline double mean_l1(const std::vector<Vec2>& pred,
                      const std::vector<Vec2>& gt,
                      const std::vector<int>& perm) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Vec2& g = gt[static_cast<std::size_t>(perm[i])];
    sum += std::abs(pred[i].x - g.x) + std::abs(pred[i].y - g.y);
  }
  return sum / static_cast<double>(pred.size());
}

// Mean cosine distance between consecutive-point difference vectors of the
// prediction and the permuted ground truth. Closed geometry includes the
// wrap-around edge; degenerate edges are skipped.
inline double direction_cost(const std::vector<Vec2>& pred,
                             const std::vector<Vec2>& gt,
                             const std::vector<int>& perm, bool closed) {
  const std::size_t v = pred.size();
  const std::size_t n_edges = closed ? v : v - 1;
  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < n_edges; ++i) {
    const std::size_t j = (i + 1) % v;
    const double ax = pred[j].x - pred[i].x;
    const double ay = pred[j].y - pred[i].y;
    const Vec2& g0 = gt[static_cast<std::size_t>(perm[i])];
    const Vec2& g1 = gt[static_cast<std::size_t>(perm[j])];
    const double bx = g1.x - g0.x;
    const double by = g1.y - g0.y;
    const double na = std::hypot(ax, ay);
    const double nb = std::hypot(bx, by);
    if (na < kGeomEps || nb < kGeomEps) {
      continue;
    }
    sum += 1.0 - (ax * bx + ay * by) / (na * nb);
    ++valid;
  }
  return valid > 0 ? sum / static_cast<double>(valid) : 0.0;
}

}  // namespace detail

/// Matching cost: weighted focal classification cost, the permutation-
/// minimal mean L1 point distance, and the direction cost under the chosen
/// permutation. The ground truth must already be resampled to the
/// prediction's point count.
inline double match_cost(const Prediction& pred, const MapElement& gt,
                         const CostConfig& config = CostConfig{}) {
  const int v = static_cast<int>(pred.points.size());
  if (static_cast<int>(gt.points.size()) != v) {
    throw Error("prediction and ground truth point counts differ");
  }
  if (v < 2) {
    throw Error("match_cost requires at least 2 points");
  }

  const double p =
      pred.class_scores[static_cast<std::size_t>(gt.cls)];
  const double cls_term = focal_cost(p, config.focal_alpha, config.focal_gamma);

  const std::vector<Vec2> gt_xy = to_xy(gt);
  const auto perms = detail::allowed_permutations(v, gt.closed);
  double best_l1 = std::numeric_limits<double>::infinity();
  const std::vector<int>* best_perm = nullptr;
  for (const auto& perm : perms) {
    const double l1 = detail::mean_l1(pred.points, gt_xy, perm);
    if (l1 < best_l1) {
      best_l1 = l1;
      best_perm = &perm;
    }
  }
  const double dir_term =
      detail::direction_cost(pred.points, gt_xy, *best_perm, gt.closed);

  return config.w_cls * cls_term + config.w_pts * best_l1 +
         config.w_dir * dir_term;
}

// ---------------------------------------------------------------------------
// Assignment with pre-attribution of map-prior instances.

/// Query-to-ground-truth pairing: prior-provenance predictions are fixed to
/// their originating elements before the Hungarian step solves the rest.
struct AssignmentResult {
  struct Pair {
    int pred_index = -1;  // index into the input prediction list
    std::string gt_id;
    int rep = -1;  // repetition the pair belongs to; -1 without tiling
    double cost = 0.0;
  };
  std::vector<Pair> fixed_pairs;
  std::vector<Pair> solved_pairs;
  std::vector<int> unmatched_predictions;
  std::vector<std::pair<int, std::string>> unmatched_gts;  // (rep, id)
  double total_cost = 0.0;
};

/// Assigns predictions to ground truth. With tiling_k = 0 all predictions
/// form one group matched against the ground truth once; with tiling_k = k
/// every repetition is matched independently against its own copy of the
/// ground truth. Prior-provenance predictions are pre-attributed to their
/// originating elements; the remaining predictions and elements go through
/// the Hungarian solver on the matching cost.
inline AssignmentResult assign_with_preattribution(
    const std::vector<Prediction>& preds, const VectorMap& gts,
    const VectorMap& prior, int tiling_k, const CostConfig& config, int v) {
  for (const MapElement& e : prior.elements) {
    if (gts.find(e.id) == nullptr) {
      throw Error("prior element \"" + e.id + "\" not in ground truth");
    }
  }

  // Resample ground truth once to the query point count.
  std::vector<MapElement> gt_resampled;
  gt_resampled.reserve(gts.elements.size());
  for (const MapElement& e : gts.elements) {
    gt_resampled.push_back(resample(e, v));
  }
  std::map<std::string, const MapElement*> gt_by_id;
  for (const MapElement& e : gt_resampled) {
    gt_by_id[e.id] = &e;
  }

  const int n_groups = tiling_k > 0 ? tiling_k : 1;
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n_groups));
  for (int i = 0; i < static_cast<int>(preds.size()); ++i) {
    int g = 0;
    if (tiling_k > 0) {
      g = preds[static_cast<std::size_t>(i)].rep;
      if (g < 0 || g >= tiling_k) {
        throw Error("prediction repetition index out of range");
      }
    }
    groups[static_cast<std::size_t>(g)].push_back(i);
  }

  AssignmentResult result;
  for (int g = 0; g < n_groups; ++g) {
    const int rep = tiling_k > 0 ? g : -1;
    std::set<std::string> fixed_ids;
    std::vector<int> learned;

    for (int idx : groups[static_cast<std::size_t>(g)]) {
      const Prediction& pred = preds[static_cast<std::size_t>(idx)];
      if (!pred.provenance.is_prior()) {
        learned.push_back(idx);
        continue;
      }
      const std::string& gt_id = pred.provenance.element_id;
      auto it = gt_by_id.find(gt_id);
      if (it == gt_by_id.end()) {
        throw Error("dangling prior reference \"" + gt_id + "\"");
      }
      if (!fixed_ids.insert(gt_id).second) {
        throw Error("duplicate prior reference \"" + gt_id +
                    "\" within one repetition");
      }
      const double c = match_cost(pred, *it->second, config);
      result.fixed_pairs.push_back({idx, gt_id, rep, c});
      result.total_cost += c;
    }

    std::vector<const MapElement*> remaining;
    for (const MapElement& e : gt_resampled) {
      if (!fixed_ids.count(e.id)) {
        remaining.push_back(&e);
      }
    }

    std::vector<std::vector<double>> cost(
        learned.size(), std::vector<double>(remaining.size(), 0.0));
    for (std::size_t r = 0; r < learned.size(); ++r) {
      for (std::size_t c = 0; c < remaining.size(); ++c) {
        cost[r][c] = match_cost(preds[static_cast<std::size_t>(learned[r])],
                                *remaining[c], config);
      }
    }
    const HungarianResult solved = hungarian(cost);

    std::vector<char> pred_matched(learned.size(), 0);
    std::vector<char> gt_matched(remaining.size(), 0);
    for (const auto& [r, c] : solved.pairs) {
      result.solved_pairs.push_back({learned[static_cast<std::size_t>(r)],
                                     remaining[static_cast<std::size_t>(c)]->id,
                                     rep,
                                     cost[static_cast<std::size_t>(r)]
                                         [static_cast<std::size_t>(c)]});
      pred_matched[static_cast<std::size_t>(r)] = 1;
      gt_matched[static_cast<std::size_t>(c)] = 1;
    }
    result.total_cost += solved.total_cost;
    for (std::size_t r = 0; r < learned.size(); ++r) {
      if (!pred_matched[r]) {
        result.unmatched_predictions.push_back(learned[r]);
      }
    }
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (!gt_matched[c]) {
        result.unmatched_gts.emplace_back(rep, remaining[c]->id);
      }
    }
  }
  return result;
}

/// Debug dump of an assignment.
inline std::string assignment_to_json(const AssignmentResult& result) {
  njson j;
  auto pairs_to_json = [](const std::vector<AssignmentResult::Pair>& pairs) {
    njson arr = njson::array();
    for (const auto& p : pairs) {
      arr.push_back(njson::array({p.pred_index, p.gt_id}));
    }
    return arr;
  };
  j["fixed"] = pairs_to_json(result.fixed_pairs);
  j["solved"] = pairs_to_json(result.solved_pairs);
  j["total_cost"] = result.total_cost;
  return j.dump();
}

}  // namespace mapcomp
