#include "mvnbv/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>

#include "mvnbv/experiment.hpp"
#include "mvnbv/parallel.hpp"
#include "mvnbv/serialization.hpp"

namespace mvnbv {

namespace {

namespace fs = std::filesystem;

// Input problems that map to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Aabb parse_bounds(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      v.push_back(std::stod(cell));
    } catch (const std::logic_error&) {
      throw UsageError("--bounds: '" + cell + "' is not a number");
    }
  }
  if (v.size() != 6) throw UsageError("--bounds expects x0,y0,z0,x1,y1,z1");
  const Aabb box{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  if (!box.has_positive_extent()) throw UsageError("--bounds must have positive extent on every axis");
  return box;
}

Json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

int cmd_scene_gen(std::uint64_t seed, int rooms, const std::string& bounds_text, double resolution,
                  const std::string& out_prefix, std::ostream& out) {
  const Aabb bounds = parse_bounds(bounds_text);
  Scene scene = [&] {
    try {
      return generate_scene(seed, rooms, bounds, resolution);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }();
  const fs::path json_path = out_prefix + ".json";
  const fs::path grid_path = out_prefix + ".nbvg";
  write_text_file(json_path, to_json(scene.spec).dump(2) + "\n");
  scene.ground_truth.save(grid_path);
  out << json_path.string() << "\n" << grid_path.string() << "\n";
  return 0;
}

struct SimulateOverrides {
  std::optional<int> sensors;
  std::optional<int> rounds;
  std::optional<int> candidates;
  std::vector<std::string> methods;
  std::optional<int> seeds;
};

int cmd_simulate(const std::string& config_path, const std::string& out_dir, unsigned jobs,
                 const SimulateOverrides& over, std::ostream& out, std::ostream& err) {
  const auto wall_start = std::chrono::steady_clock::now();
  Json raw = config_path.empty() ? Json::object() : parse_json_file(config_path);
  if (over.sensors) raw["sensors"] = *over.sensors;
  if (over.rounds) raw["rounds"] = *over.rounds;
  if (over.candidates) raw["candidates_per_sensor"] = *over.candidates;
  if (!over.methods.empty()) raw["methods"] = over.methods;
  if (over.seeds) {
    Json seeds = Json::array();
    for (int s = 0; s < *over.seeds; ++s) seeds.push_back(s);
    raw["run_seeds"] = seeds;
  }
  const ExperimentConfig config = config_from_json(raw);

  fs::create_directories(out_dir);
  if (jobs == 0) jobs = default_thread_count();

  std::vector<EpisodeContext> contexts;
  contexts.reserve(config.scenes.size());
  for (const SceneEntry& entry : config.scenes) contexts.push_back(EpisodeContext::prepare(config, entry));

  struct Job {
    std::size_t scene;
    Method method;
    std::uint64_t seed;
  };
  std::vector<Job> job_list;
  for (std::size_t s = 0; s < contexts.size(); ++s)
    for (Method m : config.methods)
      for (std::uint64_t seed : config.run_seeds) job_list.push_back({s, m, seed});

  // Episode-level parallelism when there is enough of it, else parallel planning.
  const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(jobs, job_list.size()));
  const unsigned inner = std::max(1u, jobs / std::max(1u, outer));
  std::vector<std::optional<EpisodeResult>> results(job_list.size());
  std::vector<std::string> failures;
  std::mutex failure_mutex;
  parallel_for(job_list.size(), outer, [&](unsigned, std::size_t i) {
    const Job& job = job_list[i];
    try {
      results[i] = run_episode(config, contexts[job.scene], job.method, job.seed, inner);
    } catch (const std::exception& e) {
      std::lock_guard lock(failure_mutex);
      failures.push_back("scene " + std::to_string(config.scenes[job.scene].seed) + " " + to_string(job.method) +
                         " seed " + std::to_string(job.seed) + ": " + e.what());
    }
  });

  std::vector<MetricsRow> rows;
  Json episodes = Json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) continue;
    const auto r = metrics_rows(*results[i]);
    rows.insert(rows.end(), r.begin(), r.end());
    episodes.push_back(Json{{"scene_seed", results[i]->scene_seed},
                            {"method", to_string(results[i]->method)},
                            {"run_seed", results[i]->run_seed},
                            {"rounds", static_cast<int>(results[i]->rounds.size()) - 1},
                            {"truncated", results[i]->truncated}});
  }
  const fs::path csv_path = fs::path(out_dir) / "metrics.csv";
  const fs::path summary_path = fs::path(out_dir) / "summary.json";
  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  {
    std::ostringstream csv;
    write_metrics_csv(csv, rows);
    write_text_file(csv_path, csv.str());
  }
  write_text_file(summary_path, (rows.empty() ? Json::object() : summarize(rows)).dump(2) + "\n");

  Json scene_seeds = Json::array();
  for (const SceneEntry& s : config.scenes) scene_seeds.push_back(s.seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  Json manifest{{"tool_version", kToolVersion},
                {"config", to_json(config)},
                {"scene_seeds", scene_seeds},
                {"outputs", {{"metrics_csv", csv_path.string()}, {"summary_json", summary_path.string()}}},
                {"episodes", episodes},
                {"failures", failures},
                {"wall_clock_s", wall}};
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  out << csv_path.string() << "\n" << summary_path.string() << "\n" << manifest_path.string() << "\n";
  for (const auto& f : failures) err << "episode failed: " << f << "\n";
  return failures.empty() ? 0 : 1;
}

int cmd_plan(const std::string& map_path, const std::string& candidates_path, const std::string& method_name,
             std::optional<std::uint64_t> seed, std::ostream& out) {
  Method method;
  try {
    method = method_from_string(method_name);
  } catch (const InvalidConfiguration& e) {
    throw UsageError(e.what());
  }
  if (method == Method::random && !seed) throw UsageError("--seed is required for method random");

  VoxelGrid map = [&] {
    try {
      return VoxelGrid::load(map_path);
    } catch (const InvalidArgument& e) {
      throw UsageError(map_path + ": " + e.what());
    }
  }();
  const Json j = parse_json_file(candidates_path);
  std::vector<ViewPose> poses;
  ViewPartition partition;
  ExperimentConfig cfg;
  ScoreModel model;
  try {
    if (!j.is_object() || !j.contains("poses") || !j.contains("blocks")) {
      throw InvalidConfiguration("candidates file needs 'poses' and 'blocks'");
    }
    for (std::size_t i = 0; i < j["poses"].size(); ++i) {
      poses.push_back(pose_from_json(j["poses"][i], "poses[" + std::to_string(i) + "]"));
    }
    for (const auto& block : j["blocks"]) {
      std::vector<ViewId> ids;
      for (const auto& id : block) {
        const auto v = id.get<std::uint32_t>();
        if (v >= poses.size()) throw InvalidConfiguration("block references unknown pose " + std::to_string(v));
        ids.push_back(static_cast<ViewId>(v));
      }
      partition.blocks.push_back(ids);
    }
    partition.validate();
    Json settings = Json::object();
    for (const char* key : {"camera", "ray_fraction", "max_range", "score"}) {
      if (j.contains(key)) settings[key] = j[key];
    }
    cfg = config_from_json(settings);
    model = cfg.score.build(map);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(candidates_path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(candidates_path + ": " + e.what());
  }

  PlanResult result;
  if (method == Method::random) {
    const auto start = std::chrono::steady_clock::now();
    result.chosen = random_plan(partition, *seed);
    result.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  std::vector<ViewId> all;
  for (const auto& block : partition.blocks) all.insert(all.end(), block.begin(), block.end());
  const auto start = std::chrono::steady_clock::now();
  const VisibilityCache cache =
      score_candidates(map, poses, all, model, cfg.intrinsics(), cfg.sampling(), cfg.max_range, default_thread_count());
  const double cache_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (method == Method::ours) {
    result = greedy_plan(partition, cache);
  } else if (method == Method::exhaustive) {
    result = exhaustive_plan(partition, cache);
  } else if (method == Method::single) {
    result.chosen = single_sensor_plan(partition, cache);
  }
  if (method == Method::single || method == Method::random) {
    RunningBest running(cache.voxel_count);
    result.utility = 0.0;
    for (const Selection& s : result.chosen.selections) {
      const double m = marginal_utility(cache, running, s.view);
      result.marginals.push_back(m);
      result.utility += m;
      running.absorb(cache.at(s.view));
    }
  }
  result.elapsed_s += cache_time;
  out << plan_to_json(result, 0, method_name, poses).dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& csv_path, const std::string& out_path, std::ostream& out) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  std::vector<MetricsRow> rows;
  try {
    rows = read_metrics_csv(in);
  } catch (const InvalidArgument& e) {
    throw UsageError(csv_path + ": " + e.what());
  }
  if (rows.empty()) throw UsageError(csv_path + ": no metric rows");
  const std::string text = summarize(rows).dump(2) + "\n";
  if (!out_path.empty()) write_text_file(out_path, text);
  out << text;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coordinated multi-sensor next-best-view planning and simulation", "mvnbv"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  auto* scene = app.add_subcommand("scene", "Procedural scene tools");
  scene->require_subcommand(1);
  auto* gen = scene->add_subcommand("gen", "Generate a scene spec (JSON) and its voxelized ground truth (.nbvg)");
  std::uint64_t seed = 0;
  int rooms = 1;
  std::string bounds = "0,0,0,8,8,3";
  double resolution = 0.05;
  std::string out_prefix;
  gen->add_option("--seed", seed, "Generator seed")->required();
  gen->add_option("--rooms", rooms, "Number of rooms")->check(CLI::PositiveNumber);
  gen->add_option("--bounds", bounds, "x0,y0,z0,x1,y1,z1 in meters");
  gen->add_option("--resolution", resolution, "Voxel edge length (m)")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_prefix, "Output path prefix")->required();

  auto* sim = app.add_subcommand("simulate", "Run the scene x method x seed experiment matrix");
  std::string config_path;
  std::string out_dir;
  unsigned jobs = 0;
  SimulateOverrides over;
  sim->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--jobs", jobs, "Worker threads (default: all cores)");
  sim->add_option("--sensors", over.sensors, "Override sensors");
  sim->add_option("--rounds", over.rounds, "Override rounds");
  sim->add_option("--candidates", over.candidates, "Override candidates_per_sensor");
  sim->add_option("--methods", over.methods, "Override methods");
  sim->add_option("--seeds", over.seeds, "Override run seeds with 0..N-1");

  auto* plan = app.add_subcommand("plan", "Plan one round from a map dump and candidate poses");
  std::string map_path;
  std::string candidates_path;
  std::string method = "ours";
  std::optional<std::uint64_t> plan_seed;
  plan->add_option("--map", map_path, "Grid dump (.nbvg)")->required()->check(CLI::ExistingFile);
  plan->add_option("--candidates", candidates_path, "Candidate poses and blocks (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  plan->add_option("--method", method, "ours | single | random | exhaustive");
  plan->add_option("--seed", plan_seed, "Seed (required for random)");

  auto* eval = app.add_subcommand("eval", "Recompute AUC summaries from a metrics CSV");
  std::string csv_path;
  std::string eval_out;
  eval->add_option("--csv", csv_path, "metrics.csv")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "Write the summary JSON here as well");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kToolVersion) + "\n" : app.help());
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_scene_gen(seed, rooms, bounds, resolution, out_prefix, out);
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, jobs, over, out, err);
    if (plan->parsed()) return cmd_plan(map_path, candidates_path, method, plan_seed, out);
    if (eval->parsed()) return cmd_eval(csv_path, eval_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const InvalidConfiguration& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mvnbv
