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

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mapcomp/error.hpp"
#include "mapcomp/geometry.hpp"
#include "mapcomp/map.hpp"
#include "mapcomp/scene.hpp"

namespace mapcomp {

/// Configuration of one synthetic road scene. Roads are circular arcs of
/// constant curvature so arc-length math has a closed form; crossings are
/// rectangles spanning the full road width.
struct SynthConfig {
  int lane_count = 2;            // [1, 4]
  double lane_width = 3.5;       // meters
  double curvature = 0.0;        // 1/m, [-0.02, 0.02]
  int crossing_count = 0;        // [0, 2]
  double dash_probability = 0.5; // [0, 1]
  std::uint64_t seed = 0;

  void validate() const {
    if (lane_count < 1 || lane_count > 4) {
      throw Error("lane_count must be in [1,4]");
    }
    if (!(lane_width > 0.0)) {
      throw Error("lane_width must be positive");
    }
    if (curvature < -0.02 || curvature > 0.02) {
      throw Error("curvature must be in [-0.02, 0.02]");
    }
    if (crossing_count < 0 || crossing_count > 2) {
      throw Error("crossing_count must be in [0,2]");
    }
    if (dash_probability < 0.0 || dash_probability > 1.0) {
      throw Error("dash_probability must be in [0,1]");
    }
  }
};

namespace detail {

// Point on the lateral offset path of the road. `t` is the arc position
// along the ego-lane center path measured from the ego origin; `d` is the
// lateral offset (positive = left). Constant curvature makes every offset
// path a concentric circle.
inline Vec3 road_point(double curvature, double d, double t) {
  if (std::abs(curvature) < 1e-12) {
    return {t, d, 0.0};
  }
  const double radius = 1.0 / curvature;
  const double rho = std::abs(radius - d);
  const double phi = t * std::abs(curvature);
  const double sign = radius >= 0.0 ? 1.0 : -1.0;
  return {rho * std::sin(phi), radius - sign * rho * std::cos(phi), 0.0};
}

}  // namespace detail

/// Generates a deterministic synthetic scene: for lane_count = k there are
/// k centerlines (with left/right separator topology), k+1 longitudinal
/// separators of which the outermost two are boundaries, plus crossing_count
/// pedestrian crossings perpendicular to the road. The ego origin lies
/// inside lane ceil(k/2).
inline Scene generate_synthetic(const SynthConfig& cfg,
                                const BevRange& range = BevRange{},
                                const std::string& scene_id = "synthetic",
                                Split split = Split::Train) {
  cfg.validate();
  range.validate();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  // The phase shifts the sampled window along the road. With nonzero
  // curvature this rotates the arcs relative to the BEV box, so different
  // seeds yield different clipped geometry.
  const double phase = -5.0 + 10.0 * u01(rng);

  const int k = cfg.lane_count;
  const double w = cfg.lane_width;
  const int ego_lane = (k + 1) / 2;  // ceil(k/2), 1-based

  std::vector<bool> dashed(static_cast<std::size_t>(k) + 1, false);
  for (int m = 1; m < k; ++m) {
    dashed[static_cast<std::size_t>(m)] = u01(rng) < cfg.dash_probability;
  }

  std::vector<double> crossing_pos;
  for (int c = 0; c < cfg.crossing_count; ++c) {
    double pos = 0.0;
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      pos = -25.0 + 50.0 * u01(rng);
      placed = true;
      for (double other : crossing_pos) {
        if (std::abs(pos - other) < 8.0) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) {
      pos = -20.0 + 20.0 * c;
    }
    crossing_pos.push_back(pos);
  }

  // Sample window long enough to cover the BEV box for any phase.
  const double half_span = 75.0;
  const double step = 1.0;

  auto sample_path = [&](double d) {
    std::vector<Vec3> pts;
    for (double t = phase - half_span; t <= phase + half_span + 1e-6;
         t += step) {
      pts.push_back(detail::road_point(cfg.curvature, d, t));
    }
    return pts;
  };

  VectorMap raw;
  raw.bev_range = range;

  // Separator m sits between lane m and lane m+1; m = 0 and m = k are the
  // road boundaries. Lateral offsets put the ego-lane center at d = 0.
  auto separator_offset = [&](int m) {
    return (static_cast<double>(ego_lane - m) - 0.5) * w;
  };
  auto lane_center_offset = [&](int i) {
    return static_cast<double>(ego_lane - i) * w;
  };

  for (int m = 0; m <= k; ++m) {
    MapClass cls = MapClass::Boundary;
    if (m != 0 && m != k) {
      cls = dashed[static_cast<std::size_t>(m)] ? MapClass::DashedDivider
                                                : MapClass::SolidDivider;
    }
    raw.elements.push_back(make_element("sep_" + std::to_string(m), cls,
                                        sample_path(separator_offset(m))));
  }

  for (int i = 1; i <= k; ++i) {
    MapElement cl = make_element("cl_" + std::to_string(i),
                                 MapClass::Centerline,
                                 sample_path(lane_center_offset(i)));
    cl.left_neighbor = "sep_" + std::to_string(i - 1);
    cl.right_neighbor = "sep_" + std::to_string(i);
    raw.elements.push_back(std::move(cl));
  }

  const double d_left = separator_offset(0);
  const double d_right = separator_offset(k);
  const double cross_half_len = 1.75;
  for (std::size_t c = 0; c < crossing_pos.size(); ++c) {
    const double t0 = crossing_pos[c] - cross_half_len;
    const double t1 = crossing_pos[c] + cross_half_len;
    std::vector<Vec3> corners = {
        detail::road_point(cfg.curvature, d_left, t0),
        detail::road_point(cfg.curvature, d_left, t1),
        detail::road_point(cfg.curvature, d_right, t1),
        detail::road_point(cfg.curvature, d_right, t0),
    };
    raw.elements.push_back(make_element("ped_" + std::to_string(c),
                                        MapClass::PedCrossing,
                                        std::move(corners)));
  }

  Scene scene;
  scene.scene_id = scene_id;
  scene.split = split;
  scene.map = clip_to_bev(raw, range);
  scene.map.validate();
  return scene;
}

}  // namespace mapcomp
