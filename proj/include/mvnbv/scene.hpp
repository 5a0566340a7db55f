#ifndef MVNBV_SCENE_HPP_
#define MVNBV_SCENE_HPP_

#include <cstdint>
#include <vector>

#include "mvnbv/geometry.hpp"
#include "mvnbv/occupancy_grid.hpp"
#include "mvnbv/planner.hpp"
#include "mvnbv/sensing.hpp"

namespace mvnbv {

/// Procedural indoor layout: perimeter walls, floor, ceiling, dividing walls with door gaps and box obstacles.
struct SceneSpec {
  Aabb bounds;
  std::vector<Aabb> boxes;
  std::uint64_t seed = 0;
  int room_count = 1;

  /// Throws InvalidArgument unless there is at least one box and every box lies inside bounds.
  void validate() const;
};

struct Scene {
  SceneSpec spec;
  VoxelGrid ground_truth;  // occupied voxels at +clamp log-odds, free at -clamp, all updated
};

struct SceneOptions {
  double wall_thickness = 0.1;  // raised to two voxels on coarse grids
  double door_width = 0.9;
  double door_height = 2.0;
  double min_room_width = 1.5;
  int min_obstacles = 3;
  int max_obstacles = 10;
  double obstacle_min_size = 0.3;  // footprint side (m)
  double obstacle_max_size = 1.2;
  double obstacle_max_height = 1.5;
  int max_attempts = 200;
};

/// Deterministic for a given (seed, room_count, bounds, resolution). Every generated layout
/// passes the flood-fill validator. Throws InvalidArgument when room_count does not fit.
Scene generate_scene(std::uint64_t seed, int room_count, const Aabb& bounds, double resolution,
                     const SceneOptions& options = {});

/// Binary ground truth: voxels whose centers lie in any box are occupied.
VoxelGrid voxelize(const SceneSpec& spec, double resolution, double clamp = 10.0);

/// True when every free voxel of the ground truth is 6-connected to the free voxel nearest `from`.
bool free_space_connected(const VoxelGrid& ground_truth, const Vec3& from);

enum class ViewLayout {
  ring,        // one circle inside the scene, cameras aimed near the center
  hemisphere,  // tabletop: poses on a dome over the workspace, aimed at its center
};

struct CandidateOptions {
  ViewLayout layout = ViewLayout::ring;
  double radius_fraction = 0.7;  // of the smaller horizontal half-extent
  double height = 1.4;           // above bounds.min.z (ring)
  double target_height = 0.8;    // above bounds.min.z
  double target_jitter = 0.25;   // fraction of the horizontal extent
  double clearance = 0.2;        // free radius required around a camera (m)
  int max_retries = 100;
};

struct CandidateSet {
  std::vector<ViewPose> poses;  // indexed by ViewId
  ViewPartition partition;
};

/// sensors * per_sensor poses ordered by angle; block i gets every sensors-th pose starting
/// at i. Poses in or near occupied voxels are resampled; throws std::runtime_error when
/// retries run out.
CandidateSet sample_candidate_views(const Scene& scene, int sensors, int per_sensor, std::uint64_t seed,
                                    const CandidateOptions& options = {});

}  // namespace mvnbv

#endif  // MVNBV_SCENE_HPP_
