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

#include <cstdint>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapcomp/assignment.hpp"
#include "mapcomp/error.hpp"
#include "mapcomp/geometry.hpp"
#include "mapcomp/prior.hpp"
#include "mapcomp/rng.hpp"
#include "mapcomp/scene.hpp"

namespace mapcomp {

/// Reference predictors that exercise the harness end-to-end without any
/// trained network. PassThrough re-emits the prior; PerfectOracle also
/// emits the complement exactly; NoisyOracle perturbs and drops complement
/// elements; EmptyPredictor emits nothing.
struct BaselineSpec {
  enum class Kind { PassThrough, PerfectOracle, NoisyOracle, EmptyPredictor };
  Kind kind = Kind::PerfectOracle;
  double sigma = 0.0;      // meters, NoisyOracle only
  double drop_rate = 0.0;  // [0, 1], NoisyOracle only

  void validate() const {
    if (sigma < 0.0) {
      throw Error("sigma must be non-negative");
    }
    if (drop_rate < 0.0 || drop_rate > 1.0) {
      throw Error("drop_rate must be in [0,1]");
    }
  }
};

inline BaselineSpec::Kind baseline_kind_from_string(const std::string& s) {
  if (s == "passthrough") return BaselineSpec::Kind::PassThrough;
  if (s == "perfect") return BaselineSpec::Kind::PerfectOracle;
  if (s == "noisy") return BaselineSpec::Kind::NoisyOracle;
  if (s == "empty") return BaselineSpec::Kind::EmptyPredictor;
  throw Error("unknown baseline \"" + s +
              "\" (expected passthrough|perfect|noisy|empty)");
}

inline const char* to_string(BaselineSpec::Kind k) {
  switch (k) {
    case BaselineSpec::Kind::PassThrough:
      return "passthrough";
    case BaselineSpec::Kind::PerfectOracle:
      return "perfect";
    case BaselineSpec::Kind::NoisyOracle:
      return "noisy";
    case BaselineSpec::Kind::EmptyPredictor:
      return "empty";
  }
  return "unknown";
}

namespace detail {

inline Prediction element_prediction(const MapElement& e, int resample_n,
                                     Provenance provenance) {
  Prediction p;
  p.class_scores[static_cast<std::size_t>(e.cls)] = 1.0;
  p.points = to_xy(resample(e, resample_n));
  p.provenance = std::move(provenance);
  return p;
}

}  // namespace detail

/// Runs a baseline predictor on one scenario instance. NoisyOracle draws a
/// rigid Gaussian offset per complement element (and a drop decision) from
/// a splittable per-element seed, so results do not depend on processing
/// order. Noise is applied after resampling so sigma maps directly onto
/// Chamfer expectations.
inline std::vector<Prediction> predict(const BaselineSpec& spec,
                                       const PriorScenario& scenario,
                                       std::uint64_t seed,
                                       int resample_n = 100) {
  spec.validate();
  std::vector<Prediction> out;

  auto emit_prior = [&]() {
    for (const MapElement& e : scenario.prior.elements) {
      out.push_back(detail::element_prediction(
          e, resample_n, {Provenance::Kind::Prior, e.id, -1, -1}));
    }
  };

  switch (spec.kind) {
    case BaselineSpec::Kind::EmptyPredictor:
      break;
    case BaselineSpec::Kind::PassThrough:
      emit_prior();
      break;
    case BaselineSpec::Kind::PerfectOracle: {
      emit_prior();
      int slot = 0;
      for (const MapElement& e : scenario.complement.elements) {
        out.push_back(detail::element_prediction(
            e, resample_n, {Provenance::Kind::Learned, "", -1, slot++}));
      }
      break;
    }
    case BaselineSpec::Kind::NoisyOracle: {
      emit_prior();
      int slot = 0;
      for (const MapElement& e : scenario.complement.elements) {
        std::mt19937_64 rng(
            mix_seed(seed, scenario.scene_id + "/" + e.id));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        if (u01(rng) < spec.drop_rate) {
          continue;
        }
        double dx = 0.0;
        double dy = 0.0;
        if (spec.sigma > 0.0) {
          std::normal_distribution<double> noise(0.0, spec.sigma);
          dx = noise(rng);
          dy = noise(rng);
        }
        Prediction p = detail::element_prediction(
            e, resample_n, {Provenance::Kind::Learned, "", -1, slot++});
        for (Vec2& pt : p.points) {
          pt.x += dx;
          pt.y += dy;
        }
        out.push_back(std::move(p));
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction file: the integration contract any external model must emit to
// be scored by this toolkit. JSON lines, one prediction per line.

struct PredictionRecord {
  std::string scene_id;
  std::string scenario;  // scenario name string
  Prediction pred;
};

inline std::string predictions_to_jsonl(
    const std::vector<PredictionRecord>& records) {
  std::string out;
  for (const PredictionRecord& r : records) {
    njson j;
    j["scene_id"] = r.scene_id;
    j["scenario"] = r.scenario;
    if (r.pred.provenance.is_prior()) {
      j["provenance"] =
          njson{{"kind", "prior"}, {"element_id", r.pred.provenance.element_id}};
    } else {
      j["provenance"] = njson{{"kind", "learned"},
                              {"slot", r.pred.provenance.slot}};
    }
    j["class"] = to_string(r.pred.predicted_class());
    j["confidence"] = r.pred.confidence();
    njson pts = njson::array();
    for (const Vec2& p : r.pred.points) {
      pts.push_back(njson::array({p.x, p.y}));
    }
    j["points"] = std::move(pts);
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_predictions(const std::vector<PredictionRecord>& records,
                             const std::filesystem::path& path) {
  write_atomic(path, predictions_to_jsonl(records));
}

inline std::vector<PredictionRecord> predictions_from_string(
    const std::string& content) {
  std::vector<PredictionRecord> out;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    njson j = detail::parse_line(line, line_no);
    PredictionRecord r;
    try {
      r.scene_id =
          detail::require_field(j, "scene_id", line_no).get<std::string>();
      r.scenario =
          detail::require_field(j, "scenario", line_no).get<std::string>();
      const MapClass cls = map_class_from_string(
          detail::require_field(j, "class", line_no).get<std::string>());
      const double conf =
          detail::require_field(j, "confidence", line_no).get<double>();
      if (!(conf >= 0.0 && conf <= 1.0)) {
        throw Error("confidence must be in [0,1] at line " +
                    std::to_string(line_no));
      }
      r.pred.class_scores[static_cast<std::size_t>(cls)] = conf;
      const njson& prov = detail::require_field(j, "provenance", line_no);
      const std::string kind =
          detail::require_field(prov, "kind", line_no).get<std::string>();
      if (kind == "prior") {
        r.pred.provenance.kind = Provenance::Kind::Prior;
        r.pred.provenance.element_id =
            detail::require_field(prov, "element_id", line_no)
                .get<std::string>();
      } else if (kind == "learned") {
        r.pred.provenance.kind = Provenance::Kind::Learned;
        if (prov.contains("slot")) {
          r.pred.provenance.slot = prov["slot"].get<int>();
        }
      } else {
        throw Error("unknown provenance kind \"" + kind + "\" at line " +
                    std::to_string(line_no));
      }
      const njson& pts = detail::require_field(j, "points", line_no);
      if (!pts.is_array() || pts.size() < 2) {
        throw Error("field points needs at least 2 entries at line " +
                    std::to_string(line_no));
      }
      for (const njson& p : pts) {
        if (!p.is_array() || p.size() != 2) {
          throw Error("field points must hold [x,y] pairs at line " +
                      std::to_string(line_no));
        }
        const double x = p[0].get<double>();
        const double y = p[1].get<double>();
        if (!std::isfinite(x) || !std::isfinite(y)) {
          throw Error("non-finite point at line " + std::to_string(line_no));
        }
        r.pred.points.push_back({x, y});
      }
    } catch (const Error&) {
      throw;
    } catch (const njson::exception&) {
      throw Error("malformed record at line " + std::to_string(line_no));
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<PredictionRecord> load_predictions(
    const std::filesystem::path& path) {
  try {
    return predictions_from_string(read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace mapcomp
