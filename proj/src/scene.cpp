#include "mvnbv/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mvnbv {

void SceneSpec::validate() const {
  if (!bounds.has_positive_extent()) throw InvalidArgument("scene bounds must have positive extent");
  if (boxes.empty()) throw InvalidArgument("scene has no boxes");
  for (const Aabb& box : boxes) {
    if (!bounds.contains(box)) throw InvalidArgument("scene box lies outside the scene bounds");
  }
}

VoxelGrid voxelize(const SceneSpec& spec, double resolution, double clamp) {
  VoxelGrid grid = VoxelGrid::from_bounds(spec.bounds, resolution);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) grid.set_log_odds_at(idx, -clamp);
  const auto& dims = grid.dims();
  for (const Aabb& box : spec.boxes) {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::ceil((box.min[a] - grid.origin()[a]) / resolution - 0.5)));
      hi[a] = std::min(dims[a] - 1, static_cast<int>(std::floor((box.max[a] - grid.origin()[a]) / resolution - 0.5)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) grid.set_log_odds_at(grid.linear_index({i, j, k}), clamp);
  }
  return grid;
}

bool free_space_connected(const VoxelGrid& gt, const Vec3& from) {
  const std::size_t n = gt.size();
  std::size_t free_total = 0;
  for (std::size_t idx = 0; idx < n; ++idx) free_total += gt.log_odds_at(idx) <= 0.0 ? 1 : 0;
  if (free_total == 0) return false;

  // Seed: free voxel whose center is nearest to `from`.
  std::size_t seed = n;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (gt.log_odds_at(idx) > 0.0) continue;
    const double d = (gt.center(gt.voxel_index(idx)) - from).squaredNorm();
    if (d < best) {
      best = d;
      seed = idx;
    }
  }
  std::vector<std::uint8_t> seen(n, 0);
  std::deque<std::size_t> queue{seed};
  seen[seed] = 1;
  std::size_t reached = 0;
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const std::size_t idx = queue.front();
    queue.pop_front();
    ++reached;
    const VoxelIndex v = gt.voxel_index(idx);
    for (const auto& o : kOffsets) {
      const VoxelIndex w{v.i + o[0], v.j + o[1], v.k + o[2]};
      if (!gt.contains(w)) continue;
      const std::size_t widx = gt.linear_index(w);
      if (seen[widx] || gt.log_odds_at(widx) > 0.0) continue;
      seen[widx] = 1;
      queue.push_back(widx);
    }
  }
  return reached == free_total;
}

namespace {

struct Rect {
  double x0, y0, x1, y1;
  double width(int axis) const { return axis == 0 ? x1 - x0 : y1 - y0; }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

Aabb make_box(double x0, double y0, double z0, double x1, double y1, double z1) {
  return {Vec3(x0, y0, z0), Vec3(x1, y1, z1)};
}

}  // namespace

Scene generate_scene(std::uint64_t seed, int room_count, const Aabb& bounds, double resolution,
                     const SceneOptions& options) {
  if (!bounds.has_positive_extent()) throw InvalidArgument("scene bounds must have positive extent");
  if (!(resolution > 0.0)) throw InvalidArgument("resolution must be positive");
  if (room_count < 1) throw InvalidArgument("room_count must be >= 1");
  if (!(options.obstacle_min_size > 0.0 && options.obstacle_min_size <= options.obstacle_max_size) ||
      !(options.obstacle_max_height > 0.0) || options.min_obstacles < 0 ||
      options.min_obstacles > options.max_obstacles) {
    throw InvalidArgument("invalid obstacle options");
  }

  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto snap = [&](double x, int axis) {
    return bounds.min[axis] + std::round((x - bounds.min[axis]) / resolution) * resolution;
  };

  const double t = snap(bounds.min[0] + std::max(options.wall_thickness, 2.0 * resolution), 0) - bounds.min[0];
  const double floor_top = bounds.min.z() + t;
  const double ceiling = snap(bounds.max.z() - t, 2);
  if (!(ceiling - floor_top > 0.5) || bounds.extent().x() < 2 * t + options.min_room_width ||
      bounds.extent().y() < 2 * t + options.min_room_width) {
    throw InvalidArgument("scene bounds too small for walls and a room");
  }
  const double x_in1 = snap(bounds.max.x() - t, 0);
  const double y_in1 = snap(bounds.max.y() - t, 1);

  SceneSpec spec;
  spec.bounds = bounds;
  spec.seed = seed;
  spec.room_count = room_count;
  const Vec3& lo = bounds.min;
  const Vec3& hi = bounds.max;
  std::vector<Aabb> structure = {
      make_box(lo.x(), lo.y(), lo.z(), hi.x(), hi.y(), floor_top),   // floor
      make_box(lo.x(), lo.y(), ceiling, hi.x(), hi.y(), hi.z()),      // ceiling
      make_box(lo.x(), lo.y(), lo.z(), lo.x() + t, hi.y(), hi.z()),   // -x wall
      make_box(x_in1, lo.y(), lo.z(), hi.x(), hi.y(), hi.z()),        // +x wall
      make_box(lo.x(), lo.y(), lo.z(), hi.x(), lo.y() + t, hi.z()),   // -y wall
      make_box(lo.x(), y_in1, lo.z(), hi.x(), hi.y(), hi.z()),        // +y wall
  };

  // Split the largest room along its longer side until room_count rooms exist.
  std::vector<Rect> rooms = {{lo.x() + t, lo.y() + t, x_in1, y_in1}};
  std::vector<Aabb> keepouts;
  const double door_top = std::min(floor_top + options.door_height, ceiling);
  for (int r = 1; r < room_count; ++r) {
    std::size_t pick = rooms.size();
    for (std::size_t q = 0; q < rooms.size(); ++q) {
      const Rect& room = rooms[q];
      const double longest = std::max(room.width(0), room.width(1));
      if (longest < 2 * options.min_room_width + t) continue;
      if (pick == rooms.size() || room.area() > rooms[pick].area()) pick = q;
    }
    if (pick == rooms.size()) {
      throw InvalidArgument("room_count " + std::to_string(room_count) + " does not fit in the scene bounds");
    }
    const Rect room = rooms[pick];
    const int axis = room.width(0) >= room.width(1) ? 0 : 1;
    const int other = 1 - axis;
    const double a0 = axis == 0 ? room.x0 : room.y0;
    const double a1 = axis == 0 ? room.x1 : room.y1;
    const double b0 = other == 0 ? room.x0 : room.y0;
    const double b1 = other == 0 ? room.x1 : room.y1;
    const double pos = snap(uniform(a0 + options.min_room_width, a1 - options.min_room_width - t), axis);
    const double half_door = 0.5 * options.door_width;
    const double margin = std::min(0.2, 0.5 * (b1 - b0) - half_door);
    const double door_c = snap(uniform(b0 + margin + half_door, b1 - margin - half_door), other);
    const double d0 = snap(door_c - half_door, other);
    const double d1 = snap(door_c + half_door, other);

    auto wall = [&](double s0, double s1, double z0, double z1) {
      Vec3 mn, mx;
      mn[axis] = pos;
      mx[axis] = pos + t;
      mn[other] = s0;
      mx[other] = s1;
      mn[2] = z0;
      mx[2] = z1;
      return Aabb{mn, mx};
    };
    if (d0 > b0) structure.push_back(wall(b0, d0, floor_top, ceiling));
    if (b1 > d1) structure.push_back(wall(d1, b1, floor_top, ceiling));
    if (ceiling > door_top) structure.push_back(wall(d0, d1, door_top, ceiling));
    Aabb keep = wall(d0, d1, floor_top, door_top);
    keep.min[axis] -= 0.6;
    keep.max[axis] += 0.6;
    keepouts.push_back(keep);

    Rect first = room, second = room;
    if (axis == 0) {
      first.x1 = pos;
      second.x0 = pos + t;
    } else {
      first.y1 = pos;
      second.y0 = pos + t;
    }
    rooms[pick] = first;
    rooms.push_back(second);
  }

  const double interior_h = ceiling - floor_top;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    spec.boxes = structure;
    const int count = std::uniform_int_distribution<int>(options.min_obstacles, options.max_obstacles)(rng);
    for (int o = 0; o < count; ++o) {
      for (int tries = 0; tries < 20; ++tries) {
        const Rect& room = rooms[std::uniform_int_distribution<std::size_t>(0, rooms.size() - 1)(rng)];
        const double sx = std::min(uniform(options.obstacle_min_size, options.obstacle_max_size), room.width(0) - 0.2);
        const double sy = std::min(uniform(options.obstacle_min_size, options.obstacle_max_size), room.width(1) - 0.2);
        const double h_lo = std::min(0.3, 0.5 * options.obstacle_max_height);
        const double h = uniform(h_lo, std::min(options.obstacle_max_height, interior_h - 0.3));
        const double x0 = snap(uniform(room.x0, room.x1 - sx), 0);
        const double y0 = snap(uniform(room.y0, room.y1 - sy), 1);
        const Aabb box = make_box(x0, y0, floor_top, snap(x0 + sx, 0), snap(y0 + sy, 1), snap(floor_top + h, 2));
        if (!box.has_positive_extent() || !bounds.contains(box)) continue;
        if (std::any_of(keepouts.begin(), keepouts.end(), [&](const Aabb& k) { return k.intersects(box); })) continue;
        spec.boxes.push_back(box);
        break;
      }
    }
    VoxelGrid gt = voxelize(spec, resolution);
    if (free_space_connected(gt, bounds.center())) return Scene{std::move(spec), std::move(gt)};
  }
  throw std::runtime_error("could not generate a connected scene for seed " + std::to_string(seed));
}

namespace {

bool clear_of_obstacles(const VoxelGrid& gt, const Vec3& p, double clearance) {
  if (!gt.voxel_at(p)) return false;
  const double res = gt.resolution();
  const int r = static_cast<int>(std::ceil(clearance / res));
  const VoxelIndex c = *gt.voxel_at(p);
  for (int dk = -r; dk <= r; ++dk)
    for (int dj = -r; dj <= r; ++dj)
      for (int di = -r; di <= r; ++di) {
        const VoxelIndex v{c.i + di, c.j + dj, c.k + dk};
        if (!gt.contains(v)) return false;
        if ((gt.center(v) - p).norm() > clearance + 0.5 * std::sqrt(3.0) * res) continue;
        if (gt.log_odds_at(gt.linear_index(v)) > 0.0) return false;
      }
  return true;
}

}  // namespace

CandidateSet sample_candidate_views(const Scene& scene, int sensors, int per_sensor, std::uint64_t seed,
                                    const CandidateOptions& options) {
  if (sensors < 1) throw InvalidArgument("sensor count must be >= 1");
  if (per_sensor < 1) throw InvalidArgument("candidates per sensor must be >= 1");
  const Aabb& b = scene.spec.bounds;
  const Vec3 center = b.center();
  const double half = 0.5 * std::min(b.extent().x(), b.extent().y());
  const double radius = options.radius_fraction * half;
  const int total = sensors * per_sensor;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  CandidateSet out;
  out.poses.reserve(total);
  for (int k = 0; k < total; ++k) {
    const double base = 2.0 * std::numbers::pi * k / total;
    const double spread = 0.3 * 2.0 * std::numbers::pi / total;
    bool placed = false;
    for (int attempt = 0; attempt < options.max_retries && !placed; ++attempt) {
      // Later retries widen the radial band and the angular window so a dividing wall
      // crossing the ring does not exhaust the slot.
      const double widen = std::min(1.0, attempt / 20.0);
      const double window = spread + widen * 0.3;
      const double az = base + uniform(-window, window);
      Vec3 eye, target;
      if (options.layout == ViewLayout::ring) {
        const double r = radius * uniform(0.9 - 0.5 * widen, 1.1);
        eye = Vec3(center.x() + r * std::cos(az), center.y() + r * std::sin(az),
                   b.min.z() + options.height + uniform(-0.2, 0.2));
        target = Vec3(center.x() + options.target_jitter * b.extent().x() * uniform(-1.0, 1.0),
                      center.y() + options.target_jitter * b.extent().y() * uniform(-1.0, 1.0),
                      b.min.z() + options.target_height);
      } else {
        const double el = uniform(20.0, 60.0) * std::numbers::pi / 180.0;
        const double r = radius * uniform(0.9 - 0.3 * widen, 1.1);
        eye = Vec3(center.x() + r * std::cos(el) * std::cos(az), center.y() + r * std::cos(el) * std::sin(az),
                   b.min.z() + options.target_height + r * std::sin(el));
        target = Vec3(center.x(), center.y(), b.min.z() + options.target_height);
      }
      if (!clear_of_obstacles(scene.ground_truth, eye, options.clearance)) continue;
      out.poses.push_back(ViewPose::look_at(eye, target));
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error("no obstacle-free camera pose found near angular slot " + std::to_string(k));
    }
  }
  out.partition.blocks.assign(sensors, {});
  for (int k = 0; k < total; ++k) out.partition.blocks[k % sensors].push_back(static_cast<ViewId>(k));
  return out;
}

}  // namespace mvnbv
