#ifndef MVNBV_SENSING_HPP_
#define MVNBV_SENSING_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "mvnbv/geometry.hpp"
#include "mvnbv/occupancy_grid.hpp"

namespace mvnbv {

/// Pinhole intrinsics. Camera frame: x right, y down, z along the optical axis.
struct CameraIntrinsics {
  double fx = 277.128;
  double fy = 277.128;
  double cx = 159.5;
  double cy = 119.5;
  int width = 320;
  int height = 240;

  /// Square-pixel camera with the given horizontal field of view, principal point at the image center.
  static CameraIntrinsics from_hfov(double hfov_deg, int width, int height);
  void validate() const;
};

/// Camera-to-world rigid transform.
struct ViewPose {
  Vec3 translation = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  /// Camera at `eye` with its optical axis through `target`; image y points away from `up`.
  static ViewPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());
  /// Throws InvalidArgument unless rotation is orthonormal with det +1 (1e-9).
  void validate() const;
};

/// Unit ray direction through pixel (x, y), camera frame.
Vec3 pixel_ray_direction(const CameraIntrinsics& intr, double x, double y);

/// Pinhole projection of a camera-frame point with z > 0.
Eigen::Vector2d project(const CameraIntrinsics& intr, const Vec3& p_camera);

/// Regular pixel lattice with integer strides; pixel (x, y) is sampled when
/// x = off_x + m * stride_x and y = off_y + n * stride_y.
struct RaySampling {
  int stride_x = 3;
  int stride_y = 3;

  /// Square stride s minimizing |1/s^2 - fraction|; the smaller stride wins ties.
  static RaySampling from_fraction(double fraction);
  static RaySampling full() { return {1, 1}; }

  int offset_x() const { return (stride_x - 1) / 2; }
  int offset_y() const { return (stride_y - 1) / 2; }
  int columns(const CameraIntrinsics& intr) const { return intr.width / stride_x; }
  int rows(const CameraIntrinsics& intr) const { return intr.height / stride_y; }
  std::size_t ray_count(const CameraIntrinsics& intr) const {
    return static_cast<std::size_t>(columns(intr)) * static_cast<std::size_t>(rows(intr));
  }
};

struct PixelRay {
  int x = 0;
  int y = 0;
  Vec3 direction;  // unit, camera frame
};

/// Sampled pixels in row-major order with their camera-frame directions.
std::vector<PixelRay> sampled_pixel_rays(const CameraIntrinsics& intr, const RaySampling& sampling);

enum class RayTermination { hit_surface, max_range, left_grid };

struct RayTrace {
  std::vector<VoxelIndex> cells;
  RayTermination terminal = RayTermination::left_grid;
  double length = 0.0;  // meters from the ray origin to where the trace ends
};

/// One voxel pierced by a ray: the ray occupies it for t in [t_in, t_out].
struct CellVisit {
  VoxelIndex cell;
  std::size_t linear = 0;
  double t_in = 0.0;
  double t_out = 0.0;
};

enum class WalkEnd { stopped, max_range, left_grid };

/// Incremental parametric voxel stepping over the segment [origin, origin + max_len * dir].
///
/// Visits each pierced cell once, in order. A cell is visited when its entry parameter
/// t_in is strictly below max_len, so a segment ending exactly on a face stops in the cell
/// before that face. Axes whose boundary crossings tie exactly are stepped together
/// (edge or corner move). An origin outside the grid is advanced to the grid entry.
/// `visit(const CellVisit&)` returns false to stop the walk.
template <typename Visitor>
WalkEnd walk_ray(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir, double max_len, Visitor&& visit) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Aabb box = grid.bounds();
  const double res = grid.resolution();
  const auto& dims = grid.dims();

  // Slab test for the parametric interval inside the grid box.
  double t_enter = 0.0;
  double t_exit = kInf;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return WalkEnd::left_grid;
      continue;
    }
    double t0 = (box.min[a] - origin[a]) / dir[a];
    double t1 = (box.max[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (!(t_exit > t_enter)) return WalkEnd::left_grid;
  if (t_enter >= max_len) return WalkEnd::max_range;

  const Vec3 start = origin + t_enter * dir;
  int cell[3];
  int step[3];
  double t_max[3];
  double inv_dir[3];
  for (int a = 0; a < 3; ++a) {
    cell[a] = std::clamp(static_cast<int>(std::floor((start[a] - grid.origin()[a]) / res)), 0, dims[a] - 1);
    if (dir[a] > 0.0) {
      step[a] = 1;
    } else if (dir[a] < 0.0) {
      step[a] = -1;
    } else {
      step[a] = 0;
    }
    inv_dir[a] = step[a] != 0 ? 1.0 / dir[a] : 0.0;
  }
  // Boundary crossings are recomputed from the cell index each step so that no
  // error accumulates along long rays.
  auto next_crossing = [&](int a) {
    if (step[a] == 0) return kInf;
    const double face = grid.origin()[a] + (cell[a] + (step[a] > 0 ? 1 : 0)) * res;
    return (face - origin[a]) * inv_dir[a];
  };
  for (int a = 0; a < 3; ++a) t_max[a] = next_crossing(a);

  const auto nx = static_cast<std::size_t>(dims[0]);
  const auto nxy = nx * static_cast<std::size_t>(dims[1]);
  double t_in = t_enter;
  while (true) {
    const double t_out = std::min({t_max[0], t_max[1], t_max[2]});
    CellVisit v;
    v.cell = {cell[0], cell[1], cell[2]};
    v.linear = static_cast<std::size_t>(cell[0]) + nx * static_cast<std::size_t>(cell[1]) +
               nxy * static_cast<std::size_t>(cell[2]);
    v.t_in = t_in;
    v.t_out = t_out;
    if (!visit(static_cast<const CellVisit&>(v))) return WalkEnd::stopped;
    if (t_out >= max_len) return WalkEnd::max_range;
    for (int a = 0; a < 3; ++a) {
      if (t_max[a] == t_out) {
        cell[a] += step[a];
        if (cell[a] < 0 || cell[a] >= dims[a]) return WalkEnd::left_grid;
      }
    }
    for (int a = 0; a < 3; ++a) {
      if (t_max[a] == t_out) t_max[a] = next_crossing(a);
    }
    t_in = t_out;
  }
}

/// Every voxel pierced by the segment, in order. Never terminates on occupancy.
RayTrace traverse(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir, double max_len);

/// Pixels never rendered carry NaN; pixels with no return within range carry 0.
struct DepthImage {
  static constexpr double kNoReturn = 0.0;

  int width = 0;
  int height = 0;
  std::vector<double> depths;  // meters, row-major

  DepthImage() = default;
  DepthImage(int w, int h)
      : width(w), height(h), depths(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN()) {}

  double& at(int x, int y) { return depths[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return depths[static_cast<std::size_t>(y) * width + x]; }
  static bool sampled(double d) { return !std::isnan(d); }
  static bool returned(double d) { return sampled(d) && d > 0.0; }

  /// 16-bit little-endian PGM in millimeters, 0 for no return or unsampled. Debug output only.
  void save_pgm(const std::filesystem::path& path) const;
  static DepthImage load_pgm(const std::filesystem::path& path);
};

/// Depth to the entry face of the first voxel with occupancy > 0.5 along each sampled pixel ray.
DepthImage render_depth(const VoxelGrid& ground_truth, const ViewPose& pose, const CameraIntrinsics& intr,
                        const RaySampling& sampling, double max_range);

/// Integrates one depth image: misses along each ray before the measured depth, a hit in the
/// voxel containing the measured point. No-return pixels add misses out to max_range.
void update_from_depth(VoxelGrid& map, const ViewPose& pose, const CameraIntrinsics& intr, const DepthImage& img,
                       const SensorModel& model, double max_range);

/// Planning-time visibility: one trace per sampled pixel, ending at (and including) the first
/// voxel believed occupied (occupancy > occupied_threshold), at max_range, or at the grid exit.
std::vector<RayTrace> cast_view(const VoxelGrid& map, const ViewPose& pose, const CameraIntrinsics& intr,
                                const RaySampling& sampling, double max_range, double occupied_threshold = 0.5);

}  // namespace mvnbv

#endif  // MVNBV_SENSING_HPP_
