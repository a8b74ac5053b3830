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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapcomp/error.hpp"
#include "mapcomp/geometry.hpp"
#include "mapcomp/map.hpp"
#include "mapcomp/scene.hpp"

namespace mapcomp {

/// Query block geometry: N_o2o one-to-one query rows, k one-to-many
/// repetitions of the same row count, V point queries per row.
struct QueryConfig {
  int n_o2o = 70;
  int k_repetitions = 5;
  int points_per_query = 20;  // V
  int d_model = 256;

  int n_o2m() const { return n_o2o * k_repetitions; }
  int total_rows() const { return n_o2o + n_o2m(); }

  void validate() const {
    if (n_o2o < 1 || k_repetitions < 1 || points_per_query < 2 ||
        d_model < 2) {
      throw Error("invalid query config");
    }
  }
};

/// The three point-query encoders. A uses the zero-padded prior point
/// directly as both embeddings. B adds the two-part learned prior embedding
/// to the content. C additionally replaces the positional embedding with a
/// learned one and takes the reference point straight from the prior point
/// coordinates instead of projecting.
enum class Encoder { A, B, C };

inline const char* to_string(Encoder e) {
  switch (e) {
    case Encoder::A:
      return "A";
    case Encoder::B:
      return "B";
    case Encoder::C:
      return "C";
  }
  return "?";
}

inline Encoder encoder_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Encoder::A;
  if (s == "B" || s == "b") return Encoder::B;
  if (s == "C" || s == "c") return Encoder::C;
  throw Error("unknown encoder \"" + s + "\" (expected A|B|C)");
}

/// SMP places prior queries only in the one-to-one block; MMP tiles them
/// into every one-to-many repetition as well.
enum class QuerySetDesign { SMP, MMP };

inline const char* to_string(QuerySetDesign d) {
  return d == QuerySetDesign::SMP ? "SMP" : "MMP";
}

inline QuerySetDesign design_from_string(const std::string& s) {
  if (s == "SMP" || s == "smp") return QuerySetDesign::SMP;
  if (s == "MMP" || s == "mmp") return QuerySetDesign::MMP;
  throw Error("unknown query set design \"" + s + "\" (expected SMP|MMP)");
}

/// Learned embedding tables. The toolkit does not train; tables are seeded
/// pseudo-random unit-variance vectors so the encoder algebra is concretely
/// testable and bit-reproducible.
struct EmbeddingTables {
  int d_model = 256;
  int rows = 0;  // n_o2o + n_o2m query slots
  int v = 0;     // point slots per row

  std::vector<double> learned_content;           // rows * v * d
  std::vector<double> learned_pos;               // rows * v * d
  std::vector<double> prior_class_embed;         // kNumClasses * d (E_pt part 1)
  std::vector<double> prior_point_embed;         // v * d          (E_pt part 2)
  std::vector<double> prior_pos_embed;           // d              (E_PE)
  std::vector<double> ref_projection;            // 2 * d, scaled 1/sqrt(d)

  static EmbeddingTables seeded(std::uint64_t seed, const QueryConfig& cfg) {
    cfg.validate();
    EmbeddingTables t;
    t.d_model = cfg.d_model;
    t.rows = cfg.total_rows();
    t.v = cfg.points_per_query;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    auto fill = [&](std::vector<double>& vec, std::size_t n, double scale) {
      vec.resize(n);
      for (double& x : vec) {
        x = n01(rng) * scale;
      }
    };
    const std::size_t d = static_cast<std::size_t>(t.d_model);
    const std::size_t slots =
        static_cast<std::size_t>(t.rows) * static_cast<std::size_t>(t.v);
    fill(t.learned_content, slots * d, 1.0);
    fill(t.learned_pos, slots * d, 1.0);
    fill(t.prior_class_embed, static_cast<std::size_t>(kNumClasses) * d, 1.0);
    fill(t.prior_point_embed, static_cast<std::size_t>(t.v) * d, 1.0);
    fill(t.prior_pos_embed, d, 1.0);
    // Scaled so projected reference logits of unit-variance embeddings stay
    // O(1) and sigmoid outputs remain strictly inside (0, 1) in binary64.
    fill(t.ref_projection, 2 * d, 1.0 / std::sqrt(static_cast<double>(d)));
    return t;
  }

  std::span<const double> learned_content_at(int slot, int vi) const {
    const std::size_t d = static_cast<std::size_t>(d_model);
    return {learned_content.data() +
                (static_cast<std::size_t>(slot) * v + vi) * d,
            d};
  }
  std::span<const double> learned_pos_at(int slot, int vi) const {
    const std::size_t d = static_cast<std::size_t>(d_model);
    return {learned_pos.data() + (static_cast<std::size_t>(slot) * v + vi) * d,
            d};
  }
  std::span<const double> class_embed(MapClass c) const {
    const std::size_t d = static_cast<std::size_t>(d_model);
    return {prior_class_embed.data() + static_cast<std::size_t>(c) * d, d};
  }
  std::span<const double> point_embed(int vi) const {
    const std::size_t d = static_cast<std::size_t>(d_model);
    return {prior_point_embed.data() + static_cast<std::size_t>(vi) * d, d};
  }
};

struct Provenance {
  enum class Kind { Prior, Learned };
  Kind kind = Kind::Learned;
  std::string element_id;  // Prior only
  int point_index = -1;    // Prior only
  int slot = -1;           // Learned only

  bool is_prior() const { return kind == Kind::Prior; }
};

/// One decoder point query: content and positional embedding plus the
/// reference point on the normalized BEV grid.
struct PointQuery {
  std::vector<double> content;     // Q_pt
  std::vector<double> positional;  // Q_PE
  std::array<double, 2> ref_point{0.0, 0.0};
  Provenance provenance;
};

struct PriorPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  MapClass cls = MapClass::Boundary;
};

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::array<double, 2> normalized_bev(double x, double y,
                                            const BevRange& r) {
  return {(x - r.x_min) / (r.x_max - r.x_min),
          (y - r.y_min) / (r.y_max - r.y_min)};
}

inline std::vector<double> zero_pad(const std::array<double, 2>& norm, int d) {
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  v[0] = norm[0];
  v[1] = norm[1];
  return v;
}

inline void add_in_place(std::vector<double>& dst, std::span<const double> a) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] += a[i];
  }
}

inline std::array<double, 2> project_ref(const std::vector<double>& pe,
                                         const EmbeddingTables& t) {
  const std::size_t d = static_cast<std::size_t>(t.d_model);
  double r0 = 0.0;
  double r1 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    r0 += t.ref_projection[j] * pe[j];
    r1 += t.ref_projection[d + j] * pe[j];
  }
  return {sigmoid(r0), sigmoid(r1)};
}

}  // namespace detail

/// Encodes one point query slot. With a prior point the embeddings follow
/// the chosen encoder design; without one the learned tables are used for
/// all encoders. `vi` is the point index within the query row.
inline PointQuery encode_point(Encoder encoder,
                               const std::optional<PriorPoint>& prior_point,
                               int slot, int vi, const EmbeddingTables& tables,
                               const BevRange& bev_range) {
  PointQuery q;
  if (!prior_point) {
    q.content.assign(tables.learned_content_at(slot, vi).begin(),
                     tables.learned_content_at(slot, vi).end());
    q.positional.assign(tables.learned_pos_at(slot, vi).begin(),
                        tables.learned_pos_at(slot, vi).end());
    q.ref_point = detail::project_ref(q.positional, tables);
    q.provenance = {Provenance::Kind::Learned, "", -1, slot};
    return q;
  }

  const PriorPoint& p = *prior_point;
  if (!bev_range.contains(p.x, p.y, kGeomEps)) {
    throw Error("prior point outside bev range");
  }
  const std::array<double, 2> norm =
      detail::normalized_bev(p.x, p.y, bev_range);
  const std::vector<double> padded = detail::zero_pad(norm, tables.d_model);

  switch (encoder) {
    case Encoder::A:
      q.content = padded;
      q.positional = padded;
      q.ref_point = detail::project_ref(q.positional, tables);
      break;
    case Encoder::B:
      q.content = padded;
      detail::add_in_place(q.content, tables.class_embed(p.cls));
      detail::add_in_place(q.content, tables.point_embed(vi));
      q.positional = padded;
      q.ref_point = detail::project_ref(q.positional, tables);
      break;
    case Encoder::C:
      q.content = padded;
      detail::add_in_place(q.content, tables.class_embed(p.cls));
      detail::add_in_place(q.content, tables.point_embed(vi));
      q.positional = tables.prior_pos_embed;
      q.ref_point = norm;  // taken from the prior point, no projection
      break;
  }
  q.provenance = {Provenance::Kind::Prior, "", vi, -1};
  return q;
}

/// The full decoder query block: an O2O block of n_o2o rows and an O2M
/// block of k repetitions of n_o2o rows, each row holding V point queries.
struct QuerySet {
  QuerySetDesign design = QuerySetDesign::SMP;
  Encoder encoder = Encoder::A;
  int n_o2o = 0;
  int k = 0;
  int v = 0;
  std::vector<PointQuery> o2o;  // n_o2o * v, row-major
  std::vector<PointQuery> o2m;  // k * n_o2o * v, (rep, row)-major

  const PointQuery& o2o_at(int row, int vi) const {
    return o2o[static_cast<std::size_t>(row) * v + vi];
  }
  const PointQuery& o2m_at(int rep, int row, int vi) const {
    return o2m[(static_cast<std::size_t>(rep) * n_o2o + row) * v + vi];
  }

  int o2o_rows() const { return n_o2o; }
  int o2m_rows() const { return k * n_o2o; }

  // Number of rows carrying prior provenance (row-level, over both blocks).
  int prior_row_count() const {
    int count = 0;
    for (int row = 0; row < n_o2o; ++row) {
      if (o2o_at(row, 0).provenance.is_prior()) {
        ++count;
      }
    }
    for (int rep = 0; rep < k; ++rep) {
      for (int row = 0; row < n_o2o; ++row) {
        if (o2m_at(rep, row, 0).provenance.is_prior()) {
          ++count;
        }
      }
    }
    return count;
  }
};

/// Builds the query set for a given prior map. Prior elements occupy the
/// first rows of the O2O block (and of every O2M repetition under MMP);
/// remaining rows use the learned tables with repetition-specific slots.
inline QuerySet build_query_set(const VectorMap& prior, QuerySetDesign design,
                                Encoder encoder, const EmbeddingTables& tables,
                                const QueryConfig& cfg,
                                const BevRange& bev_range) {
  cfg.validate();
  const int n_prior = static_cast<int>(prior.elements.size());
  if (n_prior > cfg.n_o2o) {
    throw Error("prior exceeds query budget");
  }
  if (tables.rows != cfg.total_rows() || tables.v != cfg.points_per_query ||
      tables.d_model != cfg.d_model) {
    throw Error("embedding tables do not match query config");
  }

  struct PriorRow {
    std::string id;
    MapClass cls;
    std::vector<Vec3> points;
  };
  std::vector<PriorRow> prior_rows;
  prior_rows.reserve(static_cast<std::size_t>(n_prior));
  for (const MapElement& e : prior.elements) {
    prior_rows.push_back({e.id, e.cls, resample(e, cfg.points_per_query).points});
  }

  QuerySet qs;
  qs.design = design;
  qs.encoder = encoder;
  qs.n_o2o = cfg.n_o2o;
  qs.k = cfg.k_repetitions;
  qs.v = cfg.points_per_query;
  qs.o2o.reserve(static_cast<std::size_t>(cfg.n_o2o) * cfg.points_per_query);
  qs.o2m.reserve(static_cast<std::size_t>(cfg.n_o2m()) * cfg.points_per_query);

  auto emit_row = [&](std::vector<PointQuery>& block, int slot,
                      const PriorRow* pr) {
    for (int vi = 0; vi < cfg.points_per_query; ++vi) {
      if (pr != nullptr) {
        const Vec3& pt = pr->points[static_cast<std::size_t>(vi)];
        PointQuery q = encode_point(
            encoder, PriorPoint{pt.x, pt.y, pt.z, pr->cls}, slot, vi, tables,
            bev_range);
        q.provenance.element_id = pr->id;
        block.push_back(std::move(q));
      } else {
        block.push_back(
            encode_point(encoder, std::nullopt, slot, vi, tables, bev_range));
      }
    }
  };

  // O2O block: identical for SMP and MMP.
  for (int row = 0; row < cfg.n_o2o; ++row) {
    emit_row(qs.o2o, row, row < n_prior ? &prior_rows[row] : nullptr);
  }

  // O2M block: k repetitions; MMP tiles the prior into each repetition.
  for (int rep = 0; rep < cfg.k_repetitions; ++rep) {
    for (int row = 0; row < cfg.n_o2o; ++row) {
      const int slot = cfg.n_o2o + rep * cfg.n_o2o + row;
      const bool prior_here =
          design == QuerySetDesign::MMP && row < n_prior;
      emit_row(qs.o2m, slot, prior_here ? &prior_rows[row] : nullptr);
    }
  }
  return qs;
}

// ---------------------------------------------------------------------------
// Exports.

namespace detail {

inline njson provenance_to_json(const Provenance& p) {
  njson j;
  if (p.is_prior()) {
    j["kind"] = "prior";
    j["element_id"] = p.element_id;
    j["point_index"] = p.point_index;
  } else {
    j["kind"] = "learned";
    j["slot"] = p.slot;
  }
  return j;
}

}  // namespace detail

/// JSON-lines export: one record per point query with block/row/rep/point
/// coordinates, provenance and the reference point. Embedding vectors go to
/// the binary export instead.
inline std::string query_set_to_jsonl(const QuerySet& qs) {
  std::string out;
  auto emit = [&out](const char* block, int row, int rep, int vi,
                     const PointQuery& q) {
    njson j;
    j["block"] = block;
    j["row"] = row;
    j["rep"] = rep >= 0 ? njson(rep) : njson();
    j["v"] = vi;
    j["provenance"] = detail::provenance_to_json(q.provenance);
    j["ref"] = njson::array({q.ref_point[0], q.ref_point[1]});
    out += j.dump();
    out += '\n';
  };
  for (int row = 0; row < qs.n_o2o; ++row) {
    for (int vi = 0; vi < qs.v; ++vi) {
      emit("o2o", row, -1, vi, qs.o2o_at(row, vi));
    }
  }
  for (int rep = 0; rep < qs.k; ++rep) {
    for (int row = 0; row < qs.n_o2o; ++row) {
      for (int vi = 0; vi < qs.v; ++vi) {
        emit("o2m", row, rep, vi, qs.o2m_at(rep, row, vi));
      }
    }
  }
  return out;
}

inline void save_query_set_jsonl(const QuerySet& qs,
                                 const std::filesystem::path& path) {
  write_atomic(path, query_set_to_jsonl(qs));
}

/// Flat binary64 dump of the embedding vectors: for every point query in
/// export order, the content vector followed by the positional vector.
inline void save_query_embeddings_f64(const QuerySet& qs,
                                      const std::filesystem::path& path) {
  std::string buf;
  auto append = [&buf](const std::vector<double>& vec) {
    buf.append(reinterpret_cast<const char*>(vec.data()),
               vec.size() * sizeof(double));
  };
  for (const PointQuery& q : qs.o2o) {
    append(q.content);
    append(q.positional);
  }
  for (const PointQuery& q : qs.o2m) {
    append(q.content);
    append(q.positional);
  }
  write_atomic(path, buf);
}

}  // namespace mapcomp
