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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mapcomp/scene.hpp"
#include "mapcomp/synth.hpp"

using namespace mapcomp;

namespace {

Scene sample_scene() {
  SynthConfig cfg;
  cfg.lane_count = 2;
  cfg.curvature = 0.01;
  cfg.crossing_count = 1;
  cfg.seed = 42;
  return generate_synthetic(cfg, BevRange{}, "sample", Split::Val);
}

std::filesystem::path temp_dir() {
  const auto dir =
      std::filesystem::temp_directory_path() / "mapcomp_scene_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("scene save/load round trip is structurally equal and byte stable",
          "[scene_io]") {
  const Scene scene = sample_scene();
  const std::string once = scene_to_string(scene);
  const Scene loaded = scene_from_string(once);
  const std::string twice = scene_to_string(loaded);
  CHECK(once == twice);

  CHECK(loaded.scene_id == scene.scene_id);
  CHECK(loaded.split == scene.split);
  REQUIRE(loaded.map.elements.size() == scene.map.elements.size());
  for (std::size_t i = 0; i < scene.map.elements.size(); ++i) {
    const MapElement& a = scene.map.elements[i];
    const MapElement& b = loaded.map.elements[i];
    CHECK(a.id == b.id);
    CHECK(a.cls == b.cls);
    CHECK(a.closed == b.closed);
    CHECK(a.left_neighbor == b.left_neighbor);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t p = 0; p < a.points.size(); ++p) {
      // Full binary64 fidelity.
      CHECK(a.points[p].x == b.points[p].x);
      CHECK(a.points[p].y == b.points[p].y);
      CHECK(a.points[p].z == b.points[p].z);
    }
  }
}

TEST_CASE("scene file round trip through disk", "[scene_io]") {
  const Scene scene = sample_scene();
  const auto path = temp_dir() / "roundtrip.jsonl";
  save_scene(scene, path);
  const Scene loaded = load_scene(path);
  CHECK(scene_to_string(loaded) == scene_to_string(scene));
}

TEST_CASE("class string mapping", "[scene_io]") {
  CHECK(map_class_from_string("lane_divider_dashed") ==
        MapClass::DashedDivider);
  CHECK(map_class_from_string("lane_divider_solid") == MapClass::SolidDivider);
  CHECK(map_class_from_string("road_boundary") == MapClass::Boundary);
  CHECK(map_class_from_string("lane_centerline") == MapClass::Centerline);
  CHECK(map_class_from_string("ped_crossing") == MapClass::PedCrossing);
  CHECK_THROWS_WITH(map_class_from_string("divider"),
                    "unknown class \"divider\"");
}

TEST_CASE("loader reports missing fields with line numbers", "[scene_io]") {
  const std::string header =
      R"({"scene_id":"s","split":"train","bev_range":[-30.0,30.0,-15.0,15.0]})";
  const std::string good =
      R"({"id":"a","class":"road_boundary","closed":false,"points":[[0,0,0],[1,0,0]],"left_neighbor":null,"right_neighbor":null})";
  const std::string missing_points =
      R"({"id":"b","class":"road_boundary","closed":false,"left_neighbor":null,"right_neighbor":null})";

  CHECK_THROWS_WITH(
      scene_from_string(header + "\n" + good + "\n" + missing_points + "\n"),
      "missing field points at line 3");
}

TEST_CASE("loader rejects unknown class strings with line numbers",
          "[scene_io]") {
  const std::string header =
      R"({"scene_id":"s","split":"train","bev_range":[-30.0,30.0,-15.0,15.0]})";
  const std::string bad =
      R"({"id":"a","class":"lane_divider_dashed_x","closed":false,"points":[[0,0,0],[1,0,0]],"left_neighbor":null,"right_neighbor":null})";
  CHECK_THROWS_WITH(scene_from_string(header + "\n" + bad + "\n"),
                    Catch::Matchers::ContainsSubstring("unknown class") &&
                        Catch::Matchers::ContainsSubstring("at line 2"));
}

TEST_CASE("loader rejects malformed records and bad geometry", "[scene_io]") {
  const std::string header =
      R"({"scene_id":"s","split":"train","bev_range":[-30.0,30.0,-15.0,15.0]})";
  CHECK_THROWS_WITH(scene_from_string(header + "\nnot json\n"),
                    "malformed record at line 2");
  const std::string outside =
      R"({"id":"a","class":"road_boundary","closed":false,"points":[[0,0,0],[99,0,0]],"left_neighbor":null,"right_neighbor":null})";
  CHECK_THROWS_WITH(scene_from_string(header + "\n" + outside + "\n"),
                    "point outside bev_range at line 2");
  const std::string one_point =
      R"({"id":"a","class":"road_boundary","closed":false,"points":[[0,0,0]],"left_neighbor":null,"right_neighbor":null})";
  CHECK_THROWS_WITH(scene_from_string(header + "\n" + one_point + "\n"),
                    Catch::Matchers::ContainsSubstring("fewer than 2 points"));
  CHECK_THROWS_AS(scene_from_string(""), Error);
}

TEST_CASE("manifest round trip and duplicate detection", "[scene_io]") {
  DatasetManifest manifest;
  manifest.scenes.push_back({"a.jsonl", Split::Train});
  manifest.scenes.push_back({"b.jsonl", Split::Val});
  const auto path = temp_dir() / "manifest.json";
  save_manifest(manifest, path);
  const DatasetManifest loaded = load_manifest(path);
  REQUIRE(loaded.scenes.size() == 2);
  CHECK(loaded.scenes[0].path == "a.jsonl");
  CHECK(loaded.scenes[1].split == Split::Val);

  DatasetManifest dup;
  dup.scenes.push_back({"a.jsonl", Split::Train});
  dup.scenes.push_back({"a.jsonl", Split::Test});
  CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("missing files raise IoError", "[scene_io]") {
  CHECK_THROWS_AS(load_scene(temp_dir() / "does_not_exist.jsonl"), IoError);
  CHECK_THROWS_AS(load_manifest(temp_dir() / "does_not_exist.json"), IoError);
}
