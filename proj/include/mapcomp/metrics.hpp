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
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mapcomp/assignment.hpp"
#include "mapcomp/error.hpp"
#include "mapcomp/geometry.hpp"
#include "mapcomp/map.hpp"
#include "mapcomp/prior.hpp"

namespace mapcomp {

/// Completion-metric configuration: Chamfer thresholds, evaluation
/// resampling density and how predictions that re-emit the prior are
/// handled. ExcludeByProvenance drops prior-provenance predictions so that
/// pass-through output cannot contaminate completion precision; EvaluateAll
/// keeps everything (for predictors without provenance tags).
struct MetricConfig {
  std::vector<double> thresholds{0.5, 1.0, 1.5};
  int resample_n = 100;
  enum class PriorHandling { ExcludeByProvenance, EvaluateAll };
  PriorHandling prior_handling = PriorHandling::ExcludeByProvenance;

  void validate() const {
    if (thresholds.empty()) {
      throw Error("thresholds must not be empty");
    }
    double prev = 0.0;
    for (double t : thresholds) {
      if (!(t > prev)) {
        throw Error("thresholds must be strictly increasing and positive");
      }
      prev = t;
    }
    if (resample_n < 2) {
      throw Error("resample_n must be at least 2");
    }
  }
};

/// A prediction reduced to what the metric needs: class argmax, confidence
/// (max class score), the 2D points, and whether it originated from a prior
/// query.
struct ScoredInstance {
  MapClass cls = MapClass::Boundary;
  double confidence = 0.0;
  std::vector<Vec2> points;
  bool prior_provenance = false;
};

inline ScoredInstance to_scored(const Prediction& pred) {
  ScoredInstance s;
  s.cls = pred.predicted_class();
  s.confidence = pred.confidence();
  s.points = pred.points;
  s.prior_provenance = pred.provenance.is_prior();
  return s;
}

namespace detail {

// Greedy confidence-ordered matching: every prediction (highest confidence
// first, ties stable by input order) grabs the unmatched ground truth with
// the smallest Chamfer distance and counts as true positive iff that
// distance is below tau. Returns (confidence, tp) in matching order.
inline std::vector<std::pair<double, bool>> greedy_records(
    const std::vector<double>& confidence,
    const std::vector<std::vector<double>>& dist, std::size_t n_gt,
    double tau) {
  std::vector<std::size_t> order(confidence.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&confidence](std::size_t a, std::size_t b) {
                     return confidence[a] > confidence[b];
                   });
  std::vector<char> matched(n_gt, 0);
  std::vector<std::pair<double, bool>> records;
  records.reserve(order.size());
  for (std::size_t idx : order) {
    std::size_t best = n_gt;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (!matched[g] && dist[idx][g] < best_dist) {
        best_dist = dist[idx][g];
        best = g;
      }
    }
    const bool tp = best < n_gt && best_dist < tau;
    if (tp) {
      matched[best] = 1;
    }
    records.emplace_back(confidence[idx], tp);
  }
  return records;
}

// Exact area under the precision-recall step curve by rectangle summation.
inline double ap_from_records(std::vector<std::pair<double, bool>> records,
                              int n_gt) {
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  double ap = 0.0;
  double prev_recall = 0.0;
  int tp = 0;
  int fp = 0;
  for (const auto& [conf, is_tp] : records) {
    if (is_tp) {
      ++tp;
      const double recall = static_cast<double>(tp) / n_gt;
      const double precision = static_cast<double>(tp) / (tp + fp);
      ap += (recall - prev_recall) * precision;
      prev_recall = recall;
    } else {
      ++fp;
    }
  }
  return ap;
}

inline std::vector<Vec2> resample_points_xy(const std::vector<Vec2>& pts,
                                            MapClass cls, int n) {
  MapElement tmp;
  tmp.id = "_";
  tmp.cls = cls;
  tmp.closed = is_polygon_class(cls);
  tmp.points.reserve(pts.size());
  for (const Vec2& p : pts) {
    tmp.points.push_back({p.x, p.y, 0.0});
  }
  try {
    return to_xy(resample(tmp, n));
  } catch (const Error&) {
    return pts;  // degenerate prediction geometry: score it as emitted
  }
}

}  // namespace detail

/// Average precision for a single class at one Chamfer threshold.
/// Predictions are (point list, confidence) pairs; returns the "absent"
/// signal (nullopt) when there is no ground truth.
inline std::optional<double> average_precision(
    const std::vector<std::pair<std::vector<Vec2>, double>>& preds,
    const std::vector<std::vector<Vec2>>& gts, double tau) {
  if (gts.empty()) {
    return std::nullopt;
  }
  std::vector<double> confidence;
  std::vector<std::vector<double>> dist(preds.size(),
                                        std::vector<double>(gts.size(), 0.0));
  confidence.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    confidence.push_back(preds[i].second);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      dist[i][g] = chamfer(preds[i].first, gts[g]);
    }
  }
  const auto records =
      detail::greedy_records(confidence, dist, gts.size(), tau);
  return detail::ap_from_records(records, static_cast<int>(gts.size()));
}

struct ClassResult {
  bool present = false;               // >= 1 ground-truth element
  std::vector<double> ap_per_tau;
  double ap = 0.0;                    // mean over thresholds
};

/// One line of the completion report: per-class AP over the masked elements
/// plus their mean. Classes without ground truth are marked absent and stay
/// out of the mean.
struct ScenarioRow {
  std::string label;
  std::array<ClassResult, kNumClasses> per_class;
  std::optional<double> map_c;
};

/// Per-scene matching output: ground-truth counts and (confidence, tp)
/// records per class and threshold. Contributions are pure functions of one
/// scene, so they can be computed on any number of workers and folded in a
/// fixed order afterwards.
struct SceneContribution {
  std::array<int, kNumClasses> n_gt{};
  // [class][threshold] -> (confidence, tp) records in matching order
  std::array<std::vector<std::vector<std::pair<double, bool>>>, kNumClasses>
      records;
};

/// Matches one scene's predictions against a ground-truth map. Ground truth
/// and predictions are both resampled to the same density so a geometrically
/// exact prediction scores a (near) zero Chamfer distance.
inline SceneContribution match_scene(const std::vector<ScoredInstance>& preds,
                                     const VectorMap& gt,
                                     const MetricConfig& config) {
  SceneContribution out;
  for (auto& per_class : out.records) {
    per_class.resize(config.thresholds.size());
  }
  std::array<std::vector<std::vector<Vec2>>, kNumClasses> gt_by_class;
  for (const MapElement& e : gt.elements) {
    gt_by_class[static_cast<std::size_t>(e.cls)].push_back(
        to_xy(resample(e, config.resample_n)));
  }
  std::array<std::vector<const ScoredInstance*>, kNumClasses> pred_by_class;
  for (const ScoredInstance& p : preds) {
    pred_by_class[static_cast<std::size_t>(p.cls)].push_back(&p);
  }

  for (int c = 0; c < kNumClasses; ++c) {
    const auto& gts = gt_by_class[static_cast<std::size_t>(c)];
    const auto& ps = pred_by_class[static_cast<std::size_t>(c)];
    out.n_gt[static_cast<std::size_t>(c)] = static_cast<int>(gts.size());
    if (ps.empty()) {
      continue;
    }
    std::vector<double> confidence;
    confidence.reserve(ps.size());
    std::vector<std::vector<double>> dist(ps.size(),
                                          std::vector<double>(gts.size(), 0.0));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      confidence.push_back(ps[i]->confidence);
      const std::vector<Vec2> resampled = detail::resample_points_xy(
          ps[i]->points, static_cast<MapClass>(c), config.resample_n);
      for (std::size_t g = 0; g < gts.size(); ++g) {
        dist[i][g] = chamfer(resampled, gts[g]);
      }
    }
    for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
      out.records[static_cast<std::size_t>(c)][t] = detail::greedy_records(
          confidence, dist, gts.size(), config.thresholds[t]);
    }
  }
  return out;
}

/// Pools matches per class and threshold across any number of scenes that
/// share one scenario, then integrates a single PR curve per class.
class ScenarioEvaluator {
 public:
  explicit ScenarioEvaluator(MetricConfig config) : config_(std::move(config)) {
    config_.validate();
    for (auto& per_class : records_) {
      per_class.resize(config_.thresholds.size());
    }
  }

  void absorb(const SceneContribution& contribution) {
    for (int c = 0; c < kNumClasses; ++c) {
      n_gt_[static_cast<std::size_t>(c)] +=
          contribution.n_gt[static_cast<std::size_t>(c)];
      for (std::size_t t = 0; t < config_.thresholds.size(); ++t) {
        const auto& recs = contribution.records[static_cast<std::size_t>(c)][t];
        auto& pool = records_[static_cast<std::size_t>(c)][t];
        pool.insert(pool.end(), recs.begin(), recs.end());
      }
    }
  }

  void add_scene(const std::vector<ScoredInstance>& preds,
                 const VectorMap& gt) {
    absorb(match_scene(preds, gt, config_));
  }

  ScenarioRow finalize(std::string label) const {
    ScenarioRow row;
    row.label = std::move(label);
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      ClassResult& res = row.per_class[static_cast<std::size_t>(c)];
      res.present = n_gt_[static_cast<std::size_t>(c)] > 0;
      if (!res.present) {
        continue;
      }
      double class_sum = 0.0;
      for (std::size_t t = 0; t < config_.thresholds.size(); ++t) {
        const double ap = detail::ap_from_records(
            records_[static_cast<std::size_t>(c)][t],
            n_gt_[static_cast<std::size_t>(c)]);
        res.ap_per_tau.push_back(ap);
        class_sum += ap;
      }
      res.ap = class_sum / static_cast<double>(config_.thresholds.size());
      sum += res.ap;
      ++present;
    }
    if (present > 0) {
      row.map_c = sum / static_cast<double>(present);
    }
    return row;
  }

 private:
  MetricConfig config_;
  std::array<int, kNumClasses> n_gt_{};
  // [class][threshold] -> pooled (confidence, tp) records
  std::array<std::vector<std::vector<std::pair<double, bool>>>, kNumClasses>
      records_;
};

/// AP over an arbitrary ground-truth map (single scene).
inline ScenarioRow map_ap(const std::vector<ScoredInstance>& preds,
                          const VectorMap& gt, const MetricConfig& config,
                          std::string label = "map") {
  ScenarioEvaluator eval(config);
  eval.add_scene(preds, gt);
  return eval.finalize(std::move(label));
}

/// The completion metric for one scenario instance: ground truth is the
/// scenario's complement only, predictions are filtered per prior handling.
inline ScenarioRow completion_ap(const std::vector<Prediction>& preds,
                                 const PriorScenario& scenario,
                                 const MetricConfig& config) {
  std::vector<ScoredInstance> scored;
  scored.reserve(preds.size());
  for (const Prediction& p : preds) {
    ScoredInstance s = to_scored(p);
    if (config.prior_handling ==
            MetricConfig::PriorHandling::ExcludeByProvenance &&
        s.prior_provenance) {
      continue;
    }
    scored.push_back(std::move(s));
  }
  return map_ap(scored, scenario.complement, config,
                to_string(scenario.scenario));
}

// ---------------------------------------------------------------------------
// Cross-scenario aggregation (the "Mean" line of the report).

struct CompletionReport {
  std::vector<ScenarioRow> rows;
  std::array<std::optional<double>, kNumClasses> mean_per_class;
  std::optional<double> mean_map;
};

/// Arithmetic mean per class over the scenarios where the class is present,
/// and the mean of the per-scenario means over all rows.
inline CompletionReport aggregate(std::vector<ScenarioRow> rows) {
  if (rows.empty()) {
    throw Error("aggregate requires at least one row");
  }
  CompletionReport report;
  report.rows = std::move(rows);
  for (int c = 0; c < kNumClasses; ++c) {
    double sum = 0.0;
    int count = 0;
    for (const ScenarioRow& row : report.rows) {
      const ClassResult& res = row.per_class[static_cast<std::size_t>(c)];
      if (res.present) {
        sum += res.ap;
        ++count;
      }
    }
    if (count > 0) {
      report.mean_per_class[static_cast<std::size_t>(c)] = sum / count;
    }
  }
  double sum = 0.0;
  int count = 0;
  for (const ScenarioRow& row : report.rows) {
    if (row.map_c) {
      sum += *row.map_c;
      ++count;
    }
  }
  if (count > 0) {
    report.mean_map = sum / count;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report files. Values are reported x100 with one decimal; absent classes
// print as "-".

/// One printable report line on the x100 scale.
struct ReportRow {
  std::string label;
  std::array<std::optional<double>, kNumClasses> ap;
  std::optional<double> map;
};

inline ReportRow to_report_row(const ScenarioRow& row) {
  ReportRow out;
  out.label = row.label;
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassResult& res = row.per_class[static_cast<std::size_t>(c)];
    if (res.present) {
      out.ap[static_cast<std::size_t>(c)] = res.ap * 100.0;
    }
  }
  if (row.map_c) {
    out.map = *row.map_c * 100.0;
  }
  return out;
}

inline std::vector<ReportRow> to_report_rows(const CompletionReport& report) {
  std::vector<ReportRow> rows;
  rows.reserve(report.rows.size() + 1);
  for (const ScenarioRow& row : report.rows) {
    rows.push_back(to_report_row(row));
  }
  ReportRow mean;
  mean.label = "Mean";
  for (int c = 0; c < kNumClasses; ++c) {
    if (report.mean_per_class[static_cast<std::size_t>(c)]) {
      mean.ap[static_cast<std::size_t>(c)] =
          *report.mean_per_class[static_cast<std::size_t>(c)] * 100.0;
    }
  }
  if (report.mean_map) {
    mean.map = *report.mean_map * 100.0;
  }
  rows.push_back(std::move(mean));
  return rows;
}

/// Mean row over already-printed values, used when merging precomputed
/// per-scenario rows.
inline ReportRow mean_report_row(const std::vector<ReportRow>& rows) {
  ReportRow mean;
  mean.label = "Mean";
  for (int c = 0; c < kNumClasses; ++c) {
    double sum = 0.0;
    int count = 0;
    for (const ReportRow& row : rows) {
      if (row.ap[static_cast<std::size_t>(c)]) {
        sum += *row.ap[static_cast<std::size_t>(c)];
        ++count;
      }
    }
    if (count > 0) {
      mean.ap[static_cast<std::size_t>(c)] = sum / count;
    }
  }
  double sum = 0.0;
  int count = 0;
  for (const ReportRow& row : rows) {
    if (row.map) {
      sum += *row.map;
      ++count;
    }
  }
  if (count > 0) {
    mean.map = sum / count;
  }
  return mean;
}

inline const std::array<const char*, kNumClasses> kClassColumns = {
    "dashed", "solid", "boundary", "centerline", "ped_crossing"};

namespace detail {

inline std::string format_cell(const std::optional<double>& v) {
  if (!v) {
    return "-";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *v);
  return buf;
}

}  // namespace detail

inline std::string report_to_csv(const std::vector<ReportRow>& rows) {
  std::string out = "scenario";
  for (const char* col : kClassColumns) {
    out += ",";
    out += col;
  }
  out += ",mAP\n";
  for (const ReportRow& row : rows) {
    out += row.label;
    for (int c = 0; c < kNumClasses; ++c) {
      out += ",";
      out += detail::format_cell(row.ap[static_cast<std::size_t>(c)]);
    }
    out += ",";
    out += detail::format_cell(row.map);
    out += "\n";
  }
  return out;
}

inline std::string report_to_markdown(const std::vector<ReportRow>& rows) {
  std::string out = "| Scenario |";
  for (const char* col : kClassColumns) {
    out += " ";
    out += col;
    out += " |";
  }
  out += " mAP |\n|---|";
  for (int c = 0; c < kNumClasses; ++c) {
    out += "---:|";
  }
  out += "---:|\n";
  for (const ReportRow& row : rows) {
    const bool mean = row.label == "Mean";
    out += "| ";
    out += mean ? "**Mean**" : row.label;
    out += " |";
    auto cell = [&](const std::optional<double>& v) {
      std::string s = detail::format_cell(v);
      return mean && v ? "**" + s + "**" : s;
    };
    for (int c = 0; c < kNumClasses; ++c) {
      out += " " + cell(row.ap[static_cast<std::size_t>(c)]) + " |";
    }
    out += " " + cell(row.map) + " |\n";
  }
  return out;
}

/// Parses rows back from the CSV format (used by `report --merge`).
inline std::vector<ReportRow> parse_report_csv(const std::string& content) {
  std::vector<ReportRow> rows;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    if (line_no == 1 && line.rfind("scenario,", 0) == 0) {
      continue;  // header
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != static_cast<std::size_t>(kNumClasses) + 2) {
      throw Error("malformed report row at line " + std::to_string(line_no));
    }
    ReportRow row;
    row.label = cells[0];
    auto parse_cell = [&](const std::string& s) -> std::optional<double> {
      if (s == "-" || s.empty()) {
        return std::nullopt;
      }
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
          throw Error("");
        }
        return v;
      } catch (...) {
        throw Error("malformed value \"" + s + "\" at line " +
                    std::to_string(line_no));
      }
    };
    for (int c = 0; c < kNumClasses; ++c) {
      row.ap[static_cast<std::size_t>(c)] =
          parse_cell(cells[static_cast<std::size_t>(c) + 1]);
    }
    row.map = parse_cell(cells.back());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mapcomp
