#ifndef MVNBV_EXPERIMENT_HPP_
#define MVNBV_EXPERIMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvnbv/metrics.hpp"
#include "mvnbv/planner.hpp"
#include "mvnbv/scene.hpp"
#include "mvnbv/scoring.hpp"
#include "mvnbv/sensing.hpp"

namespace mvnbv {

enum class Method {
  ours,        // greedy over the overlap-aware utility
  single,      // independent per-sensor argmax of the naive ray-score sum
  random,      // uniform pick per sensor
  exhaustive,  // optimal overlap-aware independent set (small n only)
};

std::string to_string(Method m);
/// Throws InvalidConfiguration for unknown names.
Method method_from_string(const std::string& name);

struct SceneEntry {
  std::uint64_t seed = 0;
  int room_count = 3;
  Aabb bounds{Vec3(0, 0, 0), Vec3(8, 8, 3)};
};

struct ScoreConfig {
  GainKind gain = GainKind::entropy;
  WeightKind weight = WeightKind::unit;
  std::optional<Aabb> roi;  // required for roi_masked

  ScoreModel build(const VoxelGrid& grid) const;
};

struct ExperimentConfig {
  int sensors = 4;
  int candidates_per_sensor = 20;
  int rounds = 20;
  int initial_random_views = 1;
  SensorModel sensor;  // p_hit 0.9, p_miss 0.1, clamp 10
  double resolution = 0.05;
  double max_range = 10.0;
  double ray_fraction = 0.1;
  double hfov_deg = 60.0;
  int image_width = 320;
  int image_height = 240;
  double coverage_tolerance = 0.05;
  bool consume_views = true;
  ViewLayout layout = ViewLayout::ring;
  CandidateOptions candidates;
  SceneOptions scene;
  ScoreConfig score;
  std::vector<Method> methods{Method::ours, Method::single, Method::random};
  std::vector<std::uint64_t> run_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<SceneEntry> scenes{SceneEntry{}};

  /// Throws InvalidConfiguration naming the offending field.
  void validate() const;
  CameraIntrinsics intrinsics() const { return CameraIntrinsics::from_hfov(hfov_deg, image_width, image_height); }
  RaySampling sampling() const { return RaySampling::from_fraction(ray_fraction); }

  /// Two sensors, 20 hemisphere candidates each, 8 rounds, exhaustive search for ours.
  static ExperimentConfig tabletop();
};

struct RoundMetrics {
  int round = 0;
  int views_per_sensor = 0;
  double explored_frac = 0.0;       // relative to voxels seen from all candidate poses
  double explored_frac_grid = 0.0;  // relative to the whole grid
  double surface_cov = 0.0;
  double unknown_cm3 = 0.0;
  double plan_time_s = 0.0;  // cumulative
};

struct EpisodeResult {
  Method method = Method::ours;
  std::uint64_t scene_seed = 0;
  int room_count = 0;
  std::uint64_t run_seed = 0;
  std::vector<RoundMetrics> rounds;     // rounds[0] is the post-initialization point
  std::vector<IndependentSet> plans;    // plans[r - 1] was executed in round r
  std::vector<ViewId> initial_views;
  bool truncated = false;
};

/// Everything about a scene that does not depend on method or run seed.
struct EpisodeContext {
  Scene scene;
  CandidateSet candidates;
  std::vector<std::uint8_t> observable;  // voxels updated when integrating every candidate pose
  std::size_t observable_count = 0;
  SurfaceCoverage coverage;

  static EpisodeContext prepare(const ExperimentConfig& config, const SceneEntry& entry);
};

/// Candidate views for a generated scene under the configured layout; seeded by the scene seed.
CandidateSet sample_candidate_views(const ExperimentConfig& config, const Scene& scene, std::uint64_t seed);

/// One closed-loop episode: shared random initial views, then `rounds` rounds of
/// cast -> cache -> plan -> render -> integrate. Planning work spreads over `threads` workers.
EpisodeResult run_episode(const ExperimentConfig& config, const EpisodeContext& context, Method method,
                          std::uint64_t run_seed, unsigned threads = 1);

/// Scores every listed candidate against `map` (traces are not retained).
VisibilityCache score_candidates(const VoxelGrid& map, const std::vector<ViewPose>& poses,
                                 const std::vector<ViewId>& active, const ScoreModel& model,
                                 const CameraIntrinsics& intr, const RaySampling& sampling, double max_range,
                                 unsigned threads);

}  // namespace mvnbv

#endif  // MVNBV_EXPERIMENT_HPP_
