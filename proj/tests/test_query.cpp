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
#include <sstream>

#include "mapcomp/query.hpp"
#include "mapcomp/synth.hpp"

using namespace mapcomp;

namespace {

QueryConfig small_config() {
  QueryConfig cfg;
  cfg.n_o2o = 12;
  cfg.k_repetitions = 3;
  cfg.points_per_query = 5;
  cfg.d_model = 16;
  return cfg;
}

VectorMap small_prior(int elements) {
  SynthConfig cfg;
  cfg.lane_count = 4;
  cfg.crossing_count = 2;
  cfg.seed = 19;
  const Scene scene = generate_synthetic(cfg);
  VectorMap prior;
  prior.bev_range = scene.map.bev_range;
  for (const MapElement& e : scene.map.elements) {
    if (static_cast<int>(prior.elements.size()) < elements) {
      prior.elements.push_back(e);
    }
  }
  REQUIRE(static_cast<int>(prior.elements.size()) == elements);
  return prior;
}

bool same_vector(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("encoder C reference point is the exact BEV normalization",
          "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(1, cfg);
  const BevRange range{-30, 30, -15, 15};

  // BEV center.
  const PointQuery center = encode_point(
      Encoder::C, PriorPoint{0.0, 0.0, 0.0, MapClass::Boundary}, 0, 0, tables,
      range);
  CHECK(center.ref_point[0] == 0.5);
  CHECK(center.ref_point[1] == 0.5);

  // Arbitrary point: zero error against the same normalization expression.
  const double x = 12.25;
  const double y = -7.5;
  const PointQuery q = encode_point(
      Encoder::C, PriorPoint{x, y, 0.0, MapClass::Centerline}, 0, 2, tables,
      range);
  CHECK(q.ref_point[0] == (x - range.x_min) / (range.x_max - range.x_min));
  CHECK(q.ref_point[1] == (y - range.y_min) / (range.y_max - range.y_min));
}

TEST_CASE("encoder A zero-pads the point into both embeddings", "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(2, cfg);
  const BevRange range{-30, 30, -15, 15};
  const PointQuery q = encode_point(
      Encoder::A, PriorPoint{6.0, 3.0, 0.0, MapClass::Boundary}, 0, 1, tables,
      range);
  CHECK(q.content[0] == (6.0 + 30.0) / 60.0);
  CHECK(q.content[1] == (3.0 + 15.0) / 30.0);
  for (std::size_t i = 2; i < q.content.size(); ++i) {
    CHECK(q.content[i] == 0.0);
    CHECK(q.positional[i] == 0.0);
  }
  CHECK(same_vector(q.content, q.positional));
}

TEST_CASE("encoders B and C share content but differ in positional parts",
          "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(3, cfg);
  const BevRange range{-30, 30, -15, 15};
  const PriorPoint p{4.0, -2.0, 0.0, MapClass::DashedDivider};
  const PointQuery b = encode_point(Encoder::B, p, 0, 3, tables, range);
  const PointQuery c = encode_point(Encoder::C, p, 0, 3, tables, range);
  CHECK(same_vector(b.content, c.content));
  CHECK_FALSE(same_vector(b.positional, c.positional));
  CHECK((b.ref_point[0] != c.ref_point[0] || b.ref_point[1] != c.ref_point[1]));
  // C's positional embedding is the learned prior positional embedding.
  CHECK(same_vector(c.positional, tables.prior_pos_embed));
}

TEST_CASE("projected reference points stay strictly inside the unit square",
          "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(4, cfg);
  const BevRange range{-30, 30, -15, 15};
  for (Encoder enc : {Encoder::A, Encoder::B}) {
    for (double x : {-29.9, 0.0, 29.9}) {
      for (double y : {-14.9, 0.0, 14.9}) {
        const PointQuery q = encode_point(
            enc, PriorPoint{x, y, 0.0, MapClass::Boundary}, 0, 0, tables,
            range);
        CHECK(q.ref_point[0] > 0.0);
        CHECK(q.ref_point[0] < 1.0);
        CHECK(q.ref_point[1] > 0.0);
        CHECK(q.ref_point[1] < 1.0);
      }
    }
  }
  // Learned slots go through the same projection.
  for (int slot = 0; slot < cfg.total_rows(); ++slot) {
    for (int vi = 0; vi < cfg.points_per_query; ++vi) {
      const PointQuery q =
          encode_point(Encoder::A, std::nullopt, slot, vi, tables, range);
      CHECK(q.ref_point[0] > 0.0);
      CHECK(q.ref_point[0] < 1.0);
      CHECK(q.ref_point[1] > 0.0);
      CHECK(q.ref_point[1] < 1.0);
    }
  }
}

TEST_CASE("prior points outside the range are rejected", "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(5, cfg);
  CHECK_THROWS_AS(
      encode_point(Encoder::C, PriorPoint{99.0, 0.0, 0.0, MapClass::Boundary},
                   0, 0, tables, BevRange{-30, 30, -15, 15}),
      Error);
}

TEST_CASE("empty prior produces identical fully learned sets", "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(6, cfg);
  VectorMap empty;
  empty.bev_range = BevRange{-30, 30, -15, 15};
  const QuerySet smp = build_query_set(empty, QuerySetDesign::SMP, Encoder::C,
                                       tables, cfg, empty.bev_range);
  const QuerySet mmp = build_query_set(empty, QuerySetDesign::MMP, Encoder::C,
                                       tables, cfg, empty.bev_range);
  CHECK(smp.prior_row_count() == 0);
  CHECK(mmp.prior_row_count() == 0);
  REQUIRE(smp.o2m.size() == mmp.o2m.size());
  for (std::size_t i = 0; i < smp.o2m.size(); ++i) {
    CHECK(same_vector(smp.o2m[i].content, mmp.o2m[i].content));
    CHECK(same_vector(smp.o2m[i].positional, mmp.o2m[i].positional));
    CHECK(smp.o2m[i].ref_point == mmp.o2m[i].ref_point);
  }
}

TEST_CASE("prior row counts for SMP vs MMP", "[query]") {
  QueryConfig cfg;
  cfg.n_o2o = 70;
  cfg.k_repetitions = 5;
  cfg.points_per_query = 4;
  cfg.d_model = 8;
  const EmbeddingTables tables = EmbeddingTables::seeded(7, cfg);
  const VectorMap prior = small_prior(10);

  const QuerySet smp = build_query_set(prior, QuerySetDesign::SMP, Encoder::C,
                                       tables, cfg, prior.bev_range);
  const QuerySet mmp = build_query_set(prior, QuerySetDesign::MMP, Encoder::C,
                                       tables, cfg, prior.bev_range);
  CHECK(smp.prior_row_count() == 10);
  CHECK(mmp.prior_row_count() == 60);  // 10 * (1 + 5)
}

TEST_CASE("default budget is 70 O2O and 350 O2M rows", "[query]") {
  QueryConfig cfg;  // defaults
  cfg.d_model = 16;  // smaller embedding width, same row geometry
  const EmbeddingTables tables = EmbeddingTables::seeded(8, cfg);
  const VectorMap prior = small_prior(6);
  for (QuerySetDesign design : {QuerySetDesign::SMP, QuerySetDesign::MMP}) {
    const QuerySet qs = build_query_set(prior, design, Encoder::A, tables, cfg,
                                        prior.bev_range);
    CHECK(qs.o2o_rows() == 70);
    CHECK(qs.o2m_rows() == 350);
    CHECK(qs.o2o.size() + qs.o2m.size() ==
          static_cast<std::size_t>((70 + 350) * cfg.points_per_query));
  }
}

TEST_CASE("prior exceeding the query budget is an error", "[query]") {
  QueryConfig cfg = small_config();
  cfg.n_o2o = 3;
  const EmbeddingTables tables = EmbeddingTables::seeded(9, cfg);
  const VectorMap prior = small_prior(4);
  CHECK_THROWS_WITH(build_query_set(prior, QuerySetDesign::SMP, Encoder::A,
                                    tables, cfg, prior.bev_range),
                    "prior exceeds query budget");
}

TEST_CASE("query construction is bit-deterministic", "[query]") {
  const QueryConfig cfg = small_config();
  const VectorMap prior = small_prior(5);
  const EmbeddingTables t1 = EmbeddingTables::seeded(10, cfg);
  const EmbeddingTables t2 = EmbeddingTables::seeded(10, cfg);
  CHECK(same_vector(t1.learned_content, t2.learned_content));
  CHECK(same_vector(t1.ref_projection, t2.ref_projection));

  const QuerySet a = build_query_set(prior, QuerySetDesign::MMP, Encoder::B,
                                     t1, cfg, prior.bev_range);
  const QuerySet b = build_query_set(prior, QuerySetDesign::MMP, Encoder::B,
                                     t2, cfg, prior.bev_range);
  REQUIRE(a.o2o.size() == b.o2o.size());
  for (std::size_t i = 0; i < a.o2o.size(); ++i) {
    CHECK(same_vector(a.o2o[i].content, b.o2o[i].content));
    CHECK(a.o2o[i].ref_point == b.o2o[i].ref_point);
  }
}

TEST_CASE("switching SMP to MMP never changes the O2O block", "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(11, cfg);
  const VectorMap prior = small_prior(4);
  const QuerySet smp = build_query_set(prior, QuerySetDesign::SMP, Encoder::C,
                                       tables, cfg, prior.bev_range);
  const QuerySet mmp = build_query_set(prior, QuerySetDesign::MMP, Encoder::C,
                                       tables, cfg, prior.bev_range);
  REQUIRE(smp.o2o.size() == mmp.o2o.size());
  for (std::size_t i = 0; i < smp.o2o.size(); ++i) {
    CHECK(same_vector(smp.o2o[i].content, mmp.o2o[i].content));
    CHECK(same_vector(smp.o2o[i].positional, mmp.o2o[i].positional));
    CHECK(smp.o2o[i].ref_point == mmp.o2o[i].ref_point);
    CHECK(smp.o2o[i].provenance.is_prior() == mmp.o2o[i].provenance.is_prior());
  }
}

TEST_CASE("every prior point query of encoder C has the exact prior ref",
          "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(12, cfg);
  const VectorMap prior = small_prior(6);
  const QuerySet qs = build_query_set(prior, QuerySetDesign::MMP, Encoder::C,
                                      tables, cfg, prior.bev_range);
  const BevRange& r = prior.bev_range;
  int checked = 0;
  for (int row = 0; row < qs.n_o2o; ++row) {
    for (int vi = 0; vi < qs.v; ++vi) {
      const PointQuery& q = qs.o2o_at(row, vi);
      if (!q.provenance.is_prior()) {
        continue;
      }
      const MapElement* e = prior.find(q.provenance.element_id);
      REQUIRE(e != nullptr);
      const Vec3 pt = resample(*e, qs.v).points[static_cast<std::size_t>(vi)];
      CHECK(q.ref_point[0] == (pt.x - r.x_min) / (r.x_max - r.x_min));
      CHECK(q.ref_point[1] == (pt.y - r.y_min) / (r.y_max - r.y_min));
      ++checked;
    }
  }
  CHECK(checked == 6 * qs.v);
}

TEST_CASE("query set export formats", "[query]") {
  const QueryConfig cfg = small_config();
  const EmbeddingTables tables = EmbeddingTables::seeded(13, cfg);
  const VectorMap prior = small_prior(3);
  const QuerySet qs = build_query_set(prior, QuerySetDesign::MMP, Encoder::C,
                                      tables, cfg, prior.bev_range);

  const std::string jsonl = query_set_to_jsonl(qs);
  std::size_t lines = 0;
  for (char ch : jsonl) {
    if (ch == '\n') {
      ++lines;
    }
  }
  CHECK(lines == qs.o2o.size() + qs.o2m.size());

  const auto dir = std::filesystem::temp_directory_path() / "mapcomp_query";
  std::filesystem::create_directories(dir);
  save_query_embeddings_f64(qs, dir / "embeddings.f64");
  const auto size = std::filesystem::file_size(dir / "embeddings.f64");
  CHECK(size == (qs.o2o.size() + qs.o2m.size()) * 2 *
                    static_cast<std::size_t>(cfg.d_model) * sizeof(double));
}
