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
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mapcomp/error.hpp"
#include "mapcomp/map.hpp"

namespace mapcomp {

using njson = nlohmann::ordered_json;

enum class Split { Train, Val, Test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw Error("unknown split \"" + s + "\"");
}

/// One sample of the dataset: a ground-truth vector map stored ego-centric
/// (the origin is the ego position) plus a dataset split tag.
struct Scene {
  std::string scene_id;
  Split split = Split::Train;
  VectorMap map;
};

struct ManifestEntry {
  std::string path;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> scenes;
  std::uint64_t seed = 0;

  void validate() const {
    std::unordered_set<std::string> paths;
    for (const ManifestEntry& e : scenes) {
      if (!paths.insert(e.path).second) {
        throw Error("duplicate scene reference \"" + e.path + "\" in manifest");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// File helpers. All writers go through a temp-file + rename so interrupted
// runs never leave partial files behind.

inline void write_atomic(const std::filesystem::path& path,
                         const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open \"" + tmp.string() + "\" for writing");
    }
    out << content;
    if (!out) {
      throw IoError("write failed for \"" + tmp.string() + "\"");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot rename \"" + tmp.string() + "\" to \"" +
                  path.string() + "\": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open \"" + path.string() + "\"");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline const njson& require_field(const njson& j, const char* key,
                                  std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error("missing field " + std::string(key) + " at line " +
                std::to_string(line_no));
  }
  return *it;
}

inline njson parse_line(const std::string& line, std::size_t line_no) {
  njson j = njson::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error("malformed record at line " + std::to_string(line_no));
  }
  return j;
}

inline njson points_to_json(const std::vector<Vec3>& pts) {
  njson arr = njson::array();
  for (const Vec3& p : pts) {
    arr.push_back(njson::array({p.x, p.y, p.z}));
  }
  return arr;
}

}  // namespace detail

/// Scene file: UTF-8, LF line endings. Line 1 carries scene metadata, every
/// further line one map element. Saving is canonical (fixed key order, full
/// binary64 fidelity), so save -> load -> save round-trips byte-identically.
inline std::string scene_to_string(const Scene& scene) {
  std::string out;
  {
    njson header;
    header["scene_id"] = scene.scene_id;
    header["split"] = to_string(scene.split);
    const BevRange& r = scene.map.bev_range;
    header["bev_range"] = njson::array({r.x_min, r.x_max, r.y_min, r.y_max});
    out += header.dump();
    out += '\n';
  }
  for (const MapElement& e : scene.map.elements) {
    njson j;
    j["id"] = e.id;
    j["class"] = to_string(e.cls);
    j["closed"] = e.closed;
    j["points"] = detail::points_to_json(e.points);
    j["left_neighbor"] = e.left_neighbor ? njson(*e.left_neighbor) : njson();
    j["right_neighbor"] = e.right_neighbor ? njson(*e.right_neighbor) : njson();
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_scene(const Scene& scene, const std::filesystem::path& path) {
  scene.map.validate();
  write_atomic(path, scene_to_string(scene));
}

inline Scene scene_from_string(const std::string& content) {
  Scene scene;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw Error("empty scene file");
  }
  ++line_no;
  {
    njson j = detail::parse_line(line, line_no);
    try {
      scene.scene_id =
          detail::require_field(j, "scene_id", line_no).get<std::string>();
      scene.split = split_from_string(
          detail::require_field(j, "split", line_no).get<std::string>());
      const njson& r = detail::require_field(j, "bev_range", line_no);
      if (!r.is_array() || r.size() != 4) {
        throw Error("field bev_range must be [x_min,x_max,y_min,y_max]");
      }
      scene.map.bev_range = {r[0].get<double>(), r[1].get<double>(),
                             r[2].get<double>(), r[3].get<double>()};
      scene.map.bev_range.validate();
    } catch (const njson::exception&) {
      throw Error("malformed record at line " + std::to_string(line_no));
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    njson j = detail::parse_line(line, line_no);
    MapElement e;
    try {
      e.id = detail::require_field(j, "id", line_no).get<std::string>();
      const std::string cls =
          detail::require_field(j, "class", line_no).get<std::string>();
      try {
        e.cls = map_class_from_string(cls);
      } catch (const Error& err) {
        throw Error(std::string(err.what()) + " at line " +
                    std::to_string(line_no));
      }
      e.closed = detail::require_field(j, "closed", line_no).get<bool>();
      const njson& pts = detail::require_field(j, "points", line_no);
      if (!pts.is_array()) {
        throw Error("field points must be an array at line " +
                    std::to_string(line_no));
      }
      for (const njson& p : pts) {
        if (!p.is_array() || p.size() != 3) {
          throw Error("field points must hold [x,y,z] triples at line " +
                      std::to_string(line_no));
        }
        e.points.push_back(
            {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
      }
      const njson& ln = detail::require_field(j, "left_neighbor", line_no);
      if (!ln.is_null()) {
        e.left_neighbor = ln.get<std::string>();
      }
      const njson& rn = detail::require_field(j, "right_neighbor", line_no);
      if (!rn.is_null()) {
        e.right_neighbor = rn.get<std::string>();
      }
    } catch (const Error&) {
      throw;
    } catch (const njson::exception&) {
      throw Error("malformed record at line " + std::to_string(line_no));
    }
    try {
      validate_element(e);
    } catch (const Error& err) {
      throw Error(std::string(err.what()) + " at line " +
                  std::to_string(line_no));
    }
    for (const Vec3& p : e.points) {
      if (!scene.map.bev_range.contains(p.x, p.y, kGeomEps)) {
        throw Error("point outside bev_range at line " +
                    std::to_string(line_no));
      }
    }
    scene.map.elements.push_back(std::move(e));
  }
  scene.map.validate();
  return scene;
}

inline Scene load_scene(const std::filesystem::path& path) {
  try {
    return scene_from_string(read_file(path));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Manifest: a JSON array of {"path": str, "split": str}. Paths are stored as
// written; relative paths resolve against the manifest's directory.

inline void save_manifest(const DatasetManifest& manifest,
                          const std::filesystem::path& path) {
  manifest.validate();
  njson arr = njson::array();
  for (const ManifestEntry& e : manifest.scenes) {
    njson j;
    j["path"] = e.path;
    j["split"] = to_string(e.split);
    arr.push_back(std::move(j));
  }
  write_atomic(path, arr.dump(2) + "\n");
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  njson arr = njson::parse(read_file(path), nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) {
    throw Error(path.string() + ": manifest must be a JSON array");
  }
  DatasetManifest manifest;
  for (const njson& j : arr) {
    if (!j.is_object() || !j.contains("path") || !j.contains("split")) {
      throw Error(path.string() +
                  ": manifest entries need \"path\" and \"split\"");
    }
    ManifestEntry e;
    e.path = j["path"].get<std::string>();
    e.split = split_from_string(j["split"].get<std::string>());
    manifest.scenes.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

inline std::filesystem::path resolve_scene_path(
    const std::filesystem::path& manifest_path, const std::string& scene_ref) {
  std::filesystem::path p(scene_ref);
  if (p.is_absolute()) {
    return p;
  }
  return manifest_path.parent_path() / p;
}

}  // namespace mapcomp
