#include "mvnbv/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "mvnbv/parallel.hpp"

namespace mvnbv {

std::string to_string(Method m) {
  switch (m) {
    case Method::ours: return "ours";
    case Method::single: return "single";
    case Method::random: return "random";
    case Method::exhaustive: return "exhaustive";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  if (name == "ours") return Method::ours;
  if (name == "single") return Method::single;
  if (name == "random") return Method::random;
  if (name == "exhaustive") return Method::exhaustive;
  throw InvalidConfiguration("unknown method '" + name + "'");
}

ScoreModel ScoreConfig::build(const VoxelGrid& grid) const {
  if (weight != WeightKind::roi_masked) return ScoreModel(gain, weight);
  if (!roi) throw InvalidConfiguration("score.roi is required for roi_masked weights");
  std::vector<VoxelIndex> voxels;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const VoxelIndex v = grid.voxel_index(idx);
    if (roi->contains(grid.center(v))) voxels.push_back(v);
  }
  if (voxels.empty()) throw InvalidConfiguration("score.roi contains no voxel centers");
  return ScoreModel::with_roi(gain, grid, voxels);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidConfiguration("config field '" + field + "': " + why);
  };
  if (sensors < 1) fail("sensors", "must be >= 1");
  if (candidates_per_sensor < 1) fail("candidates_per_sensor", "must be >= 1");
  if (rounds < 0) fail("rounds", "must be >= 0");
  if (initial_random_views < 0) fail("initial_random_views", "must be >= 0");
  if (initial_random_views > candidates_per_sensor) fail("initial_random_views", "exceeds candidates_per_sensor");
  if (!(sensor.p_hit > 0.5 && sensor.p_hit < 1.0)) fail("p_hit", "must lie in (0.5, 1)");
  if (!(sensor.p_miss > 0.0 && sensor.p_miss < 0.5)) fail("p_miss", "must lie in (0, 0.5)");
  if (!(sensor.clamp > 0.0)) fail("clamp", "must be positive");
  if (!(resolution > 0.0)) fail("resolution", "must be positive");
  if (!(max_range > 0.0)) fail("max_range", "must be positive");
  if (!(ray_fraction > 0.0 && ray_fraction <= 1.0)) fail("ray_fraction", "must lie in (0, 1]");
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) fail("camera.hfov_deg", "must lie in (0, 180)");
  if (image_width < 1 || image_height < 1) fail("camera", "image size must be positive");
  if (!(coverage_tolerance >= 0.0)) fail("coverage_tolerance", "must be non-negative");
  if (methods.empty()) fail("methods", "must list at least one method");
  if (run_seeds.empty()) fail("run_seeds", "must list at least one seed");
  if (scenes.empty()) fail("scenes", "must list at least one scene");
  for (const SceneEntry& s : scenes) {
    if (!s.bounds.has_positive_extent()) fail("scenes.bounds", "must have positive extent");
    if (s.room_count < 1) fail("scenes.room_count", "must be >= 1");
  }
  if (!(scene.obstacle_min_size > 0.0 && scene.obstacle_min_size <= scene.obstacle_max_size)) {
    fail("scene_options.obstacle_min_size", "must be positive and <= obstacle_max_size");
  }
  if (!(scene.obstacle_max_height > 0.0)) fail("scene_options.obstacle_max_height", "must be positive");
  if (scene.min_obstacles < 0 || scene.min_obstacles > scene.max_obstacles) {
    fail("scene_options.min_obstacles", "must lie in [0, max_obstacles]");
  }
  if (score.weight == WeightKind::roi_masked && !score.roi) fail("score.roi", "required for roi_masked weights");
}

ExperimentConfig ExperimentConfig::tabletop() {
  ExperimentConfig c;
  c.sensors = 2;
  c.candidates_per_sensor = 20;
  c.rounds = 8;
  c.layout = ViewLayout::hemisphere;
  c.candidates.layout = ViewLayout::hemisphere;
  c.candidates.radius_fraction = 0.6;
  c.candidates.target_height = 0.3;
  c.scene.obstacle_min_size = 0.1;
  c.scene.obstacle_max_size = 0.35;
  c.scene.obstacle_max_height = 0.4;
  c.methods = {Method::exhaustive, Method::single, Method::random};
  c.scenes = {SceneEntry{0, 1, Aabb{Vec3(0, 0, 0), Vec3(2, 2, 1.5)}}};
  return c;
}

CandidateSet sample_candidate_views(const ExperimentConfig& config, const Scene& scene, std::uint64_t seed) {
  CandidateOptions options = config.candidates;
  options.layout = config.layout;
  return sample_candidate_views(scene, config.sensors, config.candidates_per_sensor, seed, options);
}

EpisodeContext EpisodeContext::prepare(const ExperimentConfig& config, const SceneEntry& entry) {
  Scene scene = generate_scene(entry.seed, entry.room_count, entry.bounds, config.resolution, config.scene);
  CandidateSet candidates = sample_candidate_views(config, scene, entry.seed);
  // Reference reconstruction from every candidate image.
  VoxelGrid all_views = VoxelGrid::from_bounds(entry.bounds, config.resolution);
  const auto intr = config.intrinsics();
  const auto sampling = config.sampling();
  for (const ViewPose& pose : candidates.poses) {
    const DepthImage img = render_depth(scene.ground_truth, pose, intr, sampling, config.max_range);
    update_from_depth(all_views, pose, intr, img, config.sensor, config.max_range);
  }
  std::vector<std::uint8_t> observable(all_views.updated_data().begin(), all_views.updated_data().end());
  const auto count = static_cast<std::size_t>(std::count(observable.begin(), observable.end(), 1));
  SurfaceCoverage coverage(scene.ground_truth, config.coverage_tolerance);
  return EpisodeContext{std::move(scene), std::move(candidates), std::move(observable), count, std::move(coverage)};
}

VisibilityCache score_candidates(const VoxelGrid& map, const std::vector<ViewPose>& poses,
                                 const std::vector<ViewId>& active, const ScoreModel& model,
                                 const CameraIntrinsics& intr, const RaySampling& sampling, double max_range,
                                 unsigned threads) {
  VisibilityCache cache;
  cache.voxel_count = map.size();
  cache.views.resize(poses.size());
  threads = std::max(1u, threads);
  std::vector<GainAccumulator> scratch(std::min<std::size_t>(threads, std::max<std::size_t>(1, active.size())),
                                       GainAccumulator(map.size()));
  parallel_for(active.size(), threads, [&](unsigned worker, std::size_t i) {
    const ViewId id = active[i];
    const auto traces = cast_view(map, poses[to_index(id)], intr, sampling, max_range);
    cache.views[to_index(id)] = score_view(model, map, traces, scratch[worker]);
  });
  return cache;
}

namespace {

// splitmix64 finalizer; decorrelates the per-round random-plan seeds.
std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RoundMetrics measure(const EpisodeContext& ctx, const VoxelGrid& map, int round, int views_per_sensor,
                     double plan_time) {
  RoundMetrics m;
  m.round = round;
  m.views_per_sensor = views_per_sensor;
  std::size_t explored = 0;
  std::size_t updated = 0;
  const auto flags = map.updated_data();
  for (std::size_t idx = 0; idx < flags.size(); ++idx) {
    if (!flags[idx]) continue;
    ++updated;
    explored += ctx.observable[idx];
  }
  m.explored_frac = ctx.observable_count ? static_cast<double>(explored) / ctx.observable_count : 0.0;
  m.explored_frac_grid = static_cast<double>(updated) / static_cast<double>(map.size());
  m.surface_cov = ctx.coverage(map);
  m.unknown_cm3 = map.explored_stats(map.bounds()).unknown_volume_cm3;
  m.plan_time_s = plan_time;
  return m;
}

}  // namespace

EpisodeResult run_episode(const ExperimentConfig& config, const EpisodeContext& ctx, Method method,
                          std::uint64_t run_seed, unsigned threads) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  const auto intr = config.intrinsics();
  const auto sampling = config.sampling();
  const auto& poses = ctx.candidates.poses;

  EpisodeResult result;
  result.method = method;
  result.scene_seed = ctx.scene.spec.seed;
  result.room_count = ctx.scene.spec.room_count;
  result.run_seed = run_seed;

  VoxelGrid map = VoxelGrid::from_bounds(ctx.scene.spec.bounds, config.resolution);
  const ScoreModel model = config.score.build(map);
  auto integrate = [&](ViewId id) {
    const ViewPose& pose = poses[to_index(id)];
    const DepthImage img = render_depth(ctx.scene.ground_truth, pose, intr, sampling, config.max_range);
    update_from_depth(map, pose, intr, img, config.sensor, config.max_range);
  };

  // Shared prior: depends on the run seed only, never on the method.
  ViewPartition remaining = ctx.candidates.partition;
  std::mt19937_64 init_rng(run_seed);
  for (auto& block : remaining.blocks) {
    for (int v = 0; v < config.initial_random_views; ++v) {
      std::uniform_int_distribution<std::size_t> pick(0, block.size() - 1);
      const std::size_t at = pick(init_rng);
      result.initial_views.push_back(block[at]);
      block.erase(block.begin() + static_cast<std::ptrdiff_t>(at));
    }
  }
  for (ViewId id : result.initial_views) integrate(id);

  int views_per_sensor = config.initial_random_views;
  double plan_time = 0.0;
  result.rounds.push_back(measure(ctx, map, 0, views_per_sensor, plan_time));

  for (int round = 1; round <= config.rounds; ++round) {
    if (std::any_of(remaining.blocks.begin(), remaining.blocks.end(), [](const auto& b) { return b.empty(); })) {
      result.truncated = true;
      break;
    }
    const auto start = Clock::now();
    IndependentSet plan;
    if (method == Method::random) {
      plan = random_plan(remaining, mix_seed(run_seed * 1000003ULL + static_cast<std::uint64_t>(round)));
    } else {
      std::vector<ViewId> active;
      for (const auto& block : remaining.blocks) active.insert(active.end(), block.begin(), block.end());
      const VisibilityCache cache =
          score_candidates(map, poses, active, model, intr, sampling, config.max_range, threads);
      if (method == Method::ours) {
        plan = greedy_plan(remaining, cache).chosen;
      } else if (method == Method::exhaustive) {
        plan = exhaustive_plan(remaining, cache).chosen;
      } else {
        plan = single_sensor_plan(remaining, cache);
      }
    }
    plan_time += std::chrono::duration<double>(Clock::now() - start).count();

    for (const Selection& s : plan.by_block().selections) integrate(s.view);
    if (config.consume_views) {
      for (const Selection& s : plan.selections) {
        auto& block = remaining.blocks[s.block];
        block.erase(std::find(block.begin(), block.end(), s.view));
      }
    }
    result.plans.push_back(std::move(plan));
    ++views_per_sensor;
    result.rounds.push_back(measure(ctx, map, round, views_per_sensor, plan_time));
  }
  return result;
}

}  // namespace mvnbv
