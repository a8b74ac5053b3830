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

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mapcomp/baselines.hpp"
#include "mapcomp/error.hpp"
#include "mapcomp/metrics.hpp"
#include "mapcomp/prior.hpp"
#include "mapcomp/rng.hpp"
#include "mapcomp/scene.hpp"
#include "mapcomp/svg.hpp"
#include "mapcomp/synth.hpp"

namespace fs = std::filesystem;

namespace {

using namespace mapcomp;

// ---------------------------------------------------------------------------
// Small CLI helpers.

template <typename T>
struct Range {
  T lo{};
  T hi{};
};

Range<int> parse_int_range(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (...) {
    throw Error("cannot parse integer range \"" + s + "\" (expected a or a:b)");
  }
}

Range<double> parse_double_range(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      const double v = std::stod(s);
      return {v, v};
    }
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (...) {
    throw Error("cannot parse range \"" + s + "\" (expected a or a:b)");
  }
}

std::vector<ScenarioId> parse_scenarios(const std::string& s) {
  std::vector<ScenarioId> out;
  if (s == "all") {
    out.assign(kAllScenarios.begin(), kAllScenarios.end());
    return out;
  }
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) {
      out.push_back(scenario_from_string(item));
    }
  }
  if (out.empty()) {
    throw Error("no scenarios given");
  }
  return out;
}

// Runs fn(0..n-1) over `workers` threads. The caller is responsible for
// writing results into per-index slots; the fold over results afterwards is
// what keeps output independent of the worker count.
template <typename Fn>
void run_parallel(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) {
          first_error = std::current_exception();
        }
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int count = std::min<int>(workers, static_cast<int>(n));
  threads.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    threads.emplace_back(worker);
  }
  for (std::thread& t : threads) {
    t.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<Scene> scenes;  // manifest order
};

LoadedDataset load_dataset(const fs::path& manifest_path) {
  LoadedDataset ds;
  ds.manifest = load_manifest(manifest_path);
  ds.scenes.reserve(ds.manifest.scenes.size());
  std::set<std::string> ids;
  for (const ManifestEntry& entry : ds.manifest.scenes) {
    Scene scene = load_scene(resolve_scene_path(manifest_path, entry.path));
    scene.split = entry.split;
    if (!ids.insert(scene.scene_id).second) {
      throw Error("duplicate scene id \"" + scene.scene_id + "\" in dataset");
    }
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  int count = 10;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string lanes = "1:4";
  std::string lane_width = "3.5";
  std::string curvature = "-0.02:0.02";
  std::string crossings = "0:2";
  double dash_prob = 0.5;
  std::string split = "train";
};

int cmd_synth(const SynthArgs& args) {
  const Range<int> lanes = parse_int_range(args.lanes);
  const Range<double> width = parse_double_range(args.lane_width);
  const Range<double> curv = parse_double_range(args.curvature);
  const Range<int> crossings = parse_int_range(args.crossings);
  const Split split = split_from_string(args.split);

  DatasetManifest manifest;
  manifest.seed = args.seed;
  const fs::path out_dir(args.out_dir);
  for (int i = 0; i < args.count; ++i) {
    std::mt19937_64 rng(mix_seed(args.seed, static_cast<std::uint64_t>(i)));
    SynthConfig cfg;
    cfg.lane_count =
        std::uniform_int_distribution<int>(lanes.lo, lanes.hi)(rng);
    cfg.lane_width =
        std::uniform_real_distribution<double>(width.lo, width.hi)(rng);
    cfg.curvature =
        std::uniform_real_distribution<double>(curv.lo, curv.hi)(rng);
    cfg.crossing_count =
        std::uniform_int_distribution<int>(crossings.lo, crossings.hi)(rng);
    cfg.dash_probability = args.dash_prob;
    cfg.seed = rng();

    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04d", i);
    const Scene scene = generate_synthetic(cfg, BevRange{}, name, split);
    const std::string filename = std::string(name) + ".jsonl";
    save_scene(scene, out_dir / filename);
    manifest.scenes.push_back({filename, split});
  }
  save_manifest(manifest, out_dir / "manifest.json");
  std::cout << "wrote " << args.count << " scenes + manifest to "
            << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Shared scenario-set derivation for gen-scenarios / baseline / eval.

struct PairSpec {
  std::size_t scene_index;
  ScenarioId scenario;
};

std::vector<PairSpec> derive_pairs(const LoadedDataset& ds,
                                   const std::vector<ScenarioId>& scenarios,
                                   RegimeConfig::Mode mode,
                                   std::uint64_t seed) {
  RegimeConfig regime;
  regime.mode = mode;
  regime.scenario_list = scenarios;
  regime.seed = seed;
  std::vector<PairSpec> pairs;
  for (const ScenarioAssignment& a : build_scenario_set(ds.manifest, regime)) {
    pairs.push_back({a.scene_index, a.scenario});
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// gen-scenarios

struct GenScenariosArgs {
  std::string manifest;
  std::string scenarios = "all";
  std::string regime = "augment";
  std::string out_dir;
  std::uint64_t seed = 0;
};

int cmd_gen_scenarios(const GenScenariosArgs& args) {
  const LoadedDataset ds = load_dataset(args.manifest);
  const std::vector<PairSpec> pairs =
      derive_pairs(ds, parse_scenarios(args.scenarios),
                   regime_mode_from_string(args.regime), args.seed);

  const fs::path out_dir(args.out_dir);
  std::vector<ScenarioSetEntry> entries;
  entries.reserve(pairs.size());
  for (const PairSpec& pair : pairs) {
    const Scene& scene = ds.scenes[pair.scene_index];
    const PriorScenario ps = apply_prior(scene, pair.scenario);
    const std::string stem =
        scene.scene_id + "." + to_string(pair.scenario);
    Scene prior_scene{scene.scene_id, scene.split, ps.prior};
    Scene compl_scene{scene.scene_id, scene.split, ps.complement};
    write_atomic(out_dir / (stem + ".prior"), scene_to_string(prior_scene));
    write_atomic(out_dir / (stem + ".complement"),
                 scene_to_string(compl_scene));
    entries.push_back({scene.scene_id, pair.scenario});
  }
  save_scenario_set(entries, out_dir / "scenario_set.jsonl");
  std::cout << "wrote " << entries.size() << " prior/complement pairs to "
            << out_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// baseline

struct BaselineArgs {
  std::string manifest;
  std::string scenarios = "all";
  std::string regime = "augment";
  std::string kind = "perfect";
  double sigma = 0.0;
  double drop = 0.0;
  std::string out_file;
  std::uint64_t seed = 0;
  int workers = 1;
  int resample_n = 100;
};

int cmd_baseline(const BaselineArgs& args) {
  const LoadedDataset ds = load_dataset(args.manifest);
  const std::vector<PairSpec> pairs =
      derive_pairs(ds, parse_scenarios(args.scenarios),
                   regime_mode_from_string(args.regime), args.seed);
  BaselineSpec spec;
  spec.kind = baseline_kind_from_string(args.kind);
  spec.sigma = args.sigma;
  spec.drop_rate = args.drop;

  std::vector<std::vector<PredictionRecord>> per_pair(pairs.size());
  run_parallel(pairs.size(), args.workers, [&](std::size_t i) {
    const PairSpec& pair = pairs[i];
    const Scene& scene = ds.scenes[pair.scene_index];
    const PriorScenario ps = apply_prior(scene, pair.scenario);
    for (Prediction& pred : predict(spec, ps, args.seed, args.resample_n)) {
      per_pair[i].push_back(
          {scene.scene_id, to_string(pair.scenario), std::move(pred)});
    }
  });

  std::vector<PredictionRecord> records;
  for (std::vector<PredictionRecord>& chunk : per_pair) {
    for (PredictionRecord& r : chunk) {
      records.push_back(std::move(r));
    }
  }
  save_predictions(records, args.out_file);
  std::cout << "wrote " << records.size() << " predictions to "
            << args.out_file << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string manifest;
  std::string scenarios = "all";
  std::string regime = "augment";
  std::string baseline;
  double sigma = 0.0;
  double drop = 0.0;
  std::string predictions;
  std::string out_dir;
  std::vector<double> thresholds{0.5, 1.0, 1.5};
  int resample_n = 100;
  std::string prior_handling = "exclude";
  std::uint64_t seed = 0;
  int workers = 1;
  bool svg = false;
};

int cmd_eval(const EvalArgs& args) {
  if (args.baseline.empty() == args.predictions.empty()) {
    throw Error("exactly one of --baseline and --predictions must be given");
  }
  const LoadedDataset ds = load_dataset(args.manifest);
  const std::vector<PairSpec> pairs =
      derive_pairs(ds, parse_scenarios(args.scenarios),
                   regime_mode_from_string(args.regime), args.seed);

  MetricConfig metric;
  metric.thresholds = args.thresholds;
  metric.resample_n = args.resample_n;
  if (args.prior_handling == "exclude") {
    metric.prior_handling = MetricConfig::PriorHandling::ExcludeByProvenance;
  } else if (args.prior_handling == "all") {
    metric.prior_handling = MetricConfig::PriorHandling::EvaluateAll;
  } else {
    throw Error("unknown prior handling \"" + args.prior_handling +
                "\" (expected exclude|all)");
  }
  metric.validate();

  // External predictions grouped per (scene, scenario); references to pairs
  // outside the derived set go to the error report.
  std::map<std::pair<std::string, std::string>, std::vector<Prediction>>
      external;
  std::vector<std::string> errors;
  if (!args.predictions.empty()) {
    std::set<std::pair<std::string, std::string>> known;
    for (const PairSpec& pair : pairs) {
      known.insert({ds.scenes[pair.scene_index].scene_id,
                    to_string(pair.scenario)});
    }
    for (PredictionRecord& r : load_predictions(args.predictions)) {
      const std::pair<std::string, std::string> key{r.scene_id, r.scenario};
      if (!known.count(key)) {
        errors.push_back("unknown scene/scenario reference: " + r.scene_id +
                         "/" + r.scenario);
        continue;
      }
      external[key].push_back(std::move(r.pred));
    }
  }

  BaselineSpec spec;
  if (!args.baseline.empty()) {
    spec.kind = baseline_kind_from_string(args.baseline);
    spec.sigma = args.sigma;
    spec.drop_rate = args.drop;
  }

  const fs::path out_dir(args.out_dir);
  std::vector<SceneContribution> contributions(pairs.size());
  run_parallel(pairs.size(), args.workers, [&](std::size_t i) {
    const PairSpec& pair = pairs[i];
    const Scene& scene = ds.scenes[pair.scene_index];
    const PriorScenario ps = apply_prior(scene, pair.scenario);

    std::vector<Prediction> preds;
    if (!args.baseline.empty()) {
      preds = predict(spec, ps, args.seed, args.resample_n);
    } else {
      const auto it = external.find(
          {scene.scene_id, std::string(to_string(pair.scenario))});
      if (it != external.end()) {
        preds = it->second;
      }
    }

    std::vector<ScoredInstance> scored;
    scored.reserve(preds.size());
    for (const Prediction& p : preds) {
      ScoredInstance s = to_scored(p);
      if (metric.prior_handling ==
              MetricConfig::PriorHandling::ExcludeByProvenance &&
          s.prior_provenance) {
        continue;
      }
      scored.push_back(std::move(s));
    }
    contributions[i] = match_scene(scored, ps.complement, metric);
    if (args.svg) {
      save_scenario_svg(ps, scored,
                        out_dir / "svg" /
                            (scene.scene_id + "." + to_string(pair.scenario) +
                             ".svg"));
    }
  });

  // Deterministic fold: scenario rows in canonical scenario order, scene
  // contributions absorbed in pair order.
  std::map<int, ScenarioEvaluator> evaluators;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int key = static_cast<int>(pairs[i].scenario);
    auto it = evaluators.find(key);
    if (it == evaluators.end()) {
      it = evaluators.emplace(key, ScenarioEvaluator(metric)).first;
    }
    it->second.absorb(contributions[i]);
  }
  std::vector<ScenarioRow> rows;
  for (const auto& [key, evaluator] : evaluators) {
    rows.push_back(
        evaluator.finalize(to_string(static_cast<ScenarioId>(key))));
  }

  const CompletionReport report = aggregate(std::move(rows));
  const std::vector<ReportRow> printable = to_report_rows(report);
  write_atomic(out_dir / "report.csv", report_to_csv(printable));
  write_atomic(out_dir / "report.md", report_to_markdown(printable));

  if (!errors.empty()) {
    std::string error_report;
    for (const std::string& e : errors) {
      error_report += e;
      error_report += '\n';
    }
    write_atomic(out_dir / "errors.txt", error_report);
    std::cerr << "error: " << errors.size()
              << " prediction(s) referenced unknown scenes/scenarios, see "
              << (out_dir / "errors.txt").string() << "\n";
    return 2;
  }
  std::cout << "wrote report to " << (out_dir / "report.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string merge;
  std::string out_dir;
};

int cmd_report(const ReportArgs& args) {
  std::vector<ReportRow> rows = parse_report_csv(read_file(args.merge));
  std::erase_if(rows, [](const ReportRow& r) { return r.label == "Mean"; });
  if (rows.empty()) {
    throw Error("no rows to merge");
  }
  rows.push_back(mean_report_row(rows));
  const fs::path out_dir(args.out_dir);
  write_atomic(out_dir / "report.csv", report_to_csv(rows));
  write_atomic(out_dir / "report.md", report_to_markdown(rows));
  std::cout << "wrote merged report to " << (out_dir / "report.csv").string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HD map completion benchmark toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate synthetic scenes and a dataset manifest");
  synth->add_option("--count", synth_args.count, "number of scenes");
  synth->add_option("--out", synth_args.out_dir, "output directory")
      ->required();
  synth->add_option("--seed", synth_args.seed, "master seed")
      ->envname("MAPCOMP_SEED");
  synth->add_option("--lanes", synth_args.lanes, "lane count range a:b");
  synth->add_option("--lane-width", synth_args.lane_width,
                    "lane width (meters) or range a:b");
  synth->add_option("--curvature", synth_args.curvature,
                    "curvature (1/m) or range a:b");
  synth->add_option("--crossings", synth_args.crossings,
                    "crossing count range a:b");
  synth->add_option("--dash-prob", synth_args.dash_prob,
                    "probability of an inner divider being dashed");
  synth->add_option("--split", synth_args.split, "split tag: train|val|test");

  GenScenariosArgs gen_args;
  CLI::App* gen = app.add_subcommand(
      "gen-scenarios", "Derive prior/complement pairs from a dataset");
  gen->add_option("--manifest", gen_args.manifest, "dataset manifest")
      ->required();
  gen->add_option("--scenarios", gen_args.scenarios,
                  "comma-separated scenario names or \"all\"");
  gen->add_option("--regime", gen_args.regime, "naive|augment");
  gen->add_option("--out", gen_args.out_dir, "output directory")->required();
  gen->add_option("--seed", gen_args.seed, "seed for the naive split")
      ->envname("MAPCOMP_SEED");

  BaselineArgs base_args;
  CLI::App* base = app.add_subcommand(
      "baseline", "Run a reference predictor and write a prediction file");
  base->add_option("--manifest", base_args.manifest, "dataset manifest")
      ->required();
  base->add_option("--scenarios", base_args.scenarios,
                   "comma-separated scenario names or \"all\"");
  base->add_option("--regime", base_args.regime, "naive|augment");
  base->add_option("--kind", base_args.kind,
                   "passthrough|perfect|noisy|empty");
  base->add_option("--sigma", base_args.sigma, "noise sigma (meters)");
  base->add_option("--drop", base_args.drop, "element drop probability");
  base->add_option("--out", base_args.out_file, "output prediction file")
      ->required();
  base->add_option("--seed", base_args.seed, "seed")->envname("MAPCOMP_SEED");
  base->add_option("--workers", base_args.workers, "worker threads");
  base->add_option("--resample", base_args.resample_n,
                   "points per emitted element");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "Score predictions with the completion metric");
  eval->add_option("--manifest", eval_args.manifest, "dataset manifest")
      ->required();
  eval->add_option("--scenarios", eval_args.scenarios,
                   "comma-separated scenario names or \"all\"");
  eval->add_option("--regime", eval_args.regime, "naive|augment");
  eval->add_option("--baseline", eval_args.baseline,
                   "score a baseline: passthrough|perfect|noisy|empty");
  eval->add_option("--sigma", eval_args.sigma, "noise sigma (meters)");
  eval->add_option("--drop", eval_args.drop, "element drop probability");
  eval->add_option("--predictions", eval_args.predictions,
                   "score an external prediction file");
  eval->add_option("--out", eval_args.out_dir, "output directory")->required();
  eval->add_option("--thresholds", eval_args.thresholds,
                   "Chamfer thresholds in meters");
  eval->add_option("--resample", eval_args.resample_n,
                   "evaluation resampling density");
  eval->add_option("--prior-handling", eval_args.prior_handling,
                   "exclude|all");
  eval->add_option("--seed", eval_args.seed, "seed")->envname("MAPCOMP_SEED");
  eval->add_option("--workers", eval_args.workers, "worker threads");
  eval->add_flag("--svg", eval_args.svg, "write per-scene SVG overlays");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand(
      "report", "Merge precomputed per-scenario rows into a report");
  report->add_option("--merge", report_args.merge,
                     "CSV file with per-scenario rows")
      ->required();
  report->add_option("--out", report_args.out_dir, "output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_args);
    }
    if (gen->parsed()) {
      return cmd_gen_scenarios(gen_args);
    }
    if (base->parsed()) {
      return cmd_baseline(base_args);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_args);
    }
    if (report->parsed()) {
      return cmd_report(report_args);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
