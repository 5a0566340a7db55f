#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "mvnbv/sensing.hpp"
#include "oracles.hpp"

namespace mvnbv {
namespace {

using testing::sample_ray_cells;

TEST(PixelRayTest, PrincipalPointLooksAlongAxis) {
  const CameraIntrinsics intr;
  const Vec3 d = pixel_ray_direction(intr, intr.cx, intr.cy);
  EXPECT_NEAR((d - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(PixelRayTest, FocalOffsetGives45Degrees) {
  const CameraIntrinsics intr{100, 100, 50, 40, 200, 100};
  const Vec3 d = pixel_ray_direction(intr, 150, 40);
  EXPECT_NEAR((d - Vec3(1, 0, 1).normalized()).norm(), 0.0, 1e-12);
}

TEST(PixelRayTest, DefaultCornerHalfAngle) {
  const CameraIntrinsics intr;
  EXPECT_NEAR(intr.fx, 160.0 / std::tan(std::numbers::pi / 6), 1e-3);
  const CameraIntrinsics fov = CameraIntrinsics::from_hfov(60.0, 320, 240);
  EXPECT_NEAR(fov.fx, 277.128, 1e-3);
  EXPECT_EQ(fov.cx, 159.5);
  EXPECT_EQ(fov.cy, 119.5);
  const Vec3 d = pixel_ray_direction(intr, 0, 0);
  const double half = std::atan2(-d.x(), d.z()) * 180.0 / std::numbers::pi;
  EXPECT_NEAR(half, 30.0, 0.2);
  EXPECT_LT(d.y(), 0.0);
  EXPECT_NEAR(d.norm(), 1.0, 1e-12);
}

TEST(PixelRayTest, OutOfRangeThrows) {
  const CameraIntrinsics intr;
  EXPECT_THROW(pixel_ray_direction(intr, -1, 0), InvalidArgument);
  EXPECT_THROW(pixel_ray_direction(intr, 0, 240), InvalidArgument);
}

TEST(PixelRayTest, ProjectionRoundTrip) {
  const CameraIntrinsics intr;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0, 319), uy(0, 239), depth(0.1, 20);
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng), y = uy(rng);
    const Vec3 p = pixel_ray_direction(intr, x, y) * depth(rng);
    const auto q = project(intr, p);
    EXPECT_NEAR(q.x(), x, 1e-9);
    EXPECT_NEAR(q.y(), y, 1e-9);
  }
}

TEST(ViewPoseTest, LookAtIsRightHanded) {
  const ViewPose pose = ViewPose::look_at(Vec3(0, 0, 1), Vec3(2, 0, 1));
  EXPECT_NO_THROW(pose.validate());
  EXPECT_NEAR((pose.rotation.col(2) - Vec3(1, 0, 0)).norm(), 0.0, 1e-12);
  // Image y points down.
  EXPECT_NEAR((pose.rotation.col(1) - Vec3(0, 0, -1)).norm(), 0.0, 1e-12);
  ViewPose bad;
  bad.rotation(0, 0) = -1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(RaySamplingTest, DefaultFractionGivesStrideThree) {
  const CameraIntrinsics intr;
  const RaySampling s = RaySampling::from_fraction(0.1);
  EXPECT_EQ(s.stride_x, 3);
  EXPECT_EQ(s.stride_y, 3);
  EXPECT_EQ(s.ray_count(intr), 8480u);
  EXPECT_EQ(sampled_pixel_rays(intr, s).size(), 8480u);
  EXPECT_EQ(RaySampling::from_fraction(1.0).stride_x, 1);
  EXPECT_EQ(RaySampling::from_fraction(0.25).stride_x, 2);
}

TEST(TraverseTest, AxisAlignedHalfOpenEndpoint) {
  const VoxelGrid grid(Vec3::Zero(), 0.1, {10, 3, 3});
  const Vec3 origin(0.05, 0.15, 0.15);
  // Endpoint at 0.35 lies inside cell 3.
  auto trace = traverse(grid, origin, Vec3::UnitX(), 0.3);
  ASSERT_EQ(trace.cells.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(trace.cells[i], (VoxelIndex{i, 1, 1}));
  EXPECT_EQ(trace.terminal, RayTermination::max_range);
  // Endpoint exactly on the face between cells 2 and 3 stays in cell 2.
  trace = traverse(grid, Vec3(0.0, 0.15, 0.15), Vec3::UnitX(), 0.3);
  ASSERT_EQ(trace.cells.size(), 3u);
  EXPECT_EQ(trace.cells.back(), (VoxelIndex{2, 1, 1}));
}

TEST(TraverseTest, ShortRayIsSingleCell) {
  const VoxelGrid grid(Vec3::Zero(), 0.1, {4, 4, 4});
  const auto trace = traverse(grid, Vec3(0.15, 0.15, 0.15), Vec3(1, 1, 1).normalized(), 0.01);
  ASSERT_EQ(trace.cells.size(), 1u);
  EXPECT_EQ(trace.cells[0], (VoxelIndex{1, 1, 1}));
}

TEST(TraverseTest, LeavesGrid) {
  const VoxelGrid grid(Vec3::Zero(), 0.1, {4, 4, 4});
  const auto trace = traverse(grid, Vec3(0.05, 0.05, 0.05), Vec3::UnitY(), 10.0);
  EXPECT_EQ(trace.cells.size(), 4u);
  EXPECT_EQ(trace.terminal, RayTermination::left_grid);
  EXPECT_THROW(traverse(grid, Vec3::Zero(), Vec3(2, 0, 0), 1.0), InvalidArgument);
}

TEST(TraverseTest, CornerToCornerDiagonal) {
  const VoxelGrid grid(Vec3::Zero(), 1.0, {2, 2, 2});
  const Vec3 origin(0, 0, 0);
  const Vec3 dir = Vec3(1, 1, 1).normalized();
  const double len = std::sqrt(3.0) * 2;
  const auto trace = traverse(grid, origin, dir, len);
  const auto expected = sample_ray_cells(grid, origin, dir, len);
  EXPECT_EQ(trace.cells, expected);
  ASSERT_EQ(trace.cells.size(), 2u);
  EXPECT_EQ(trace.cells[0], (VoxelIndex{0, 0, 0}));
  EXPECT_EQ(trace.cells[1], (VoxelIndex{1, 1, 1}));
}

TEST(TraverseTest, RandomRaysMatchSamplingOracle) {
  const VoxelGrid grid(Vec3(-0.3, 0.2, 0.0), 0.1, {12, 9, 7});
  const Aabb box = grid.bounds();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  int mismatches = 0;
  for (int r = 0; r < 1000; ++r) {
    const Vec3 origin = box.min + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(box.extent());
    Vec3 dir(n(rng), n(rng), n(rng));
    dir.normalize();
    const double len = 0.05 + 1.5 * u(rng);
    const auto trace = traverse(grid, origin, dir, len);
    const auto oracle = sample_ray_cells(grid, origin, dir, len);
    if (trace.cells != oracle) ++mismatches;
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(TraverseTest, OriginOutsideGridEntersAtBoundary) {
  const VoxelGrid grid(Vec3::Zero(), 0.1, {5, 5, 5});
  const Vec3 origin(-0.4, 0.25, 0.25);
  const auto trace = traverse(grid, origin, Vec3::UnitX(), 2.0);
  EXPECT_EQ(trace.cells, sample_ray_cells(grid, origin, Vec3::UnitX(), 2.0));
  ASSERT_EQ(trace.cells.size(), 5u);
  EXPECT_EQ(trace.cells.front(), (VoxelIndex{0, 2, 2}));
}

// Ground truth with a wall slab occupying x in [wall_x, wall_x + thickness).
VoxelGrid wall_scene(double wall_x) {
  VoxelGrid gt(Vec3(0, -2, -2), 0.05, {60, 80, 80});
  for (std::size_t idx = 0; idx < gt.size(); ++idx) {
    const Vec3 c = gt.center(gt.voxel_index(idx));
    gt.set_log_odds_at(idx, (c.x() >= wall_x && c.x() < wall_x + 0.2) ? 10.0 : -10.0);
  }
  return gt;
}

TEST(RenderDepthTest, WallAtOneMeter) {
  const VoxelGrid gt = wall_scene(1.0);
  const ViewPose pose = ViewPose::look_at(Vec3(0.0, 0.0, 0.0), Vec3(1, 0, 0));
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(60, 64, 48);
  const DepthImage img = render_depth(gt, pose, intr, RaySampling::full(), 10.0);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 d = pixel_ray_direction(intr, x, y);
      // Range to the plane x = 1 along this pixel ray.
      const double analytic = 1.0 / d.z();
      EXPECT_NEAR(img.at(x, y), analytic, 0.05) << x << "," << y;
      // The perpendicular depth is about 1 m.
      EXPECT_NEAR(img.at(x, y) * d.z(), 1.0, 0.05);
    }
  }
}

TEST(RenderDepthTest, EmptySceneHasNoReturns) {
  VoxelGrid gt(Vec3(-1, -1, -1), 0.1, {20, 20, 20});
  for (std::size_t idx = 0; idx < gt.size(); ++idx) gt.set_log_odds_at(idx, -10.0);
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(60, 32, 24);
  const DepthImage img = render_depth(gt, ViewPose::look_at(Vec3::Zero(), Vec3(1, 0, 0)), intr, RaySampling::full(), 10);
  for (double d : img.depths) EXPECT_EQ(d, DepthImage::kNoReturn);
}

TEST(RenderDepthTest, SingleVoxelEntryFace) {
  const double res = 0.05;
  VoxelGrid gt(Vec3(-0.5, -0.5, -0.5), res, {20, 20, 20});
  for (std::size_t idx = 0; idx < gt.size(); ++idx) gt.set_log_odds_at(idx, -10.0);
  const auto target = gt.voxel_at(Vec3(0.5 - 1e-6, 0.0, 0.0));
  ASSERT_TRUE(target.has_value());
  gt.set_log_odds(*target, 10.0);
  // Eye at the origin, occupied voxel spans x in [0.45, 0.5).
  const Vec3 eye = Vec3::Zero();
  const CameraIntrinsics intr{20, 20, 10, 10, 21, 21};
  const DepthImage img = render_depth(gt, ViewPose::look_at(eye, Vec3(1, 0, 0)), intr, RaySampling::full(), 10);
  const double d = img.at(10, 10);
  EXPECT_GE(d, 0.5 - res - 1e-12);
  EXPECT_LE(d, 0.5 + 1e-12);
}

TEST(UpdateFromDepthTest, ThreeVoxelRayGivesTwoMissesOneHit) {
  VoxelGrid map(Vec3(0, -0.05, -0.05), 0.1, {10, 1, 1});
  const CameraIntrinsics intr{1, 1, 0, 0, 1, 1};
  const ViewPose pose = ViewPose::look_at(Vec3(0.0, 0.0, 0.0), Vec3(1, 0, 0));
  DepthImage img(1, 1);
  img.at(0, 0) = 0.25;
  const SensorModel model;
  update_from_depth(map, pose, intr, img, model, 10.0);
  EXPECT_NEAR(map.log_odds({0, 0, 0}), logit(0.1), 1e-12);
  EXPECT_NEAR(map.log_odds({1, 0, 0}), logit(0.1), 1e-12);
  EXPECT_NEAR(map.log_odds({2, 0, 0}), logit(0.9), 1e-12);
  for (int i = 3; i < 10; ++i) EXPECT_FALSE(map.updated({i, 0, 0}));
}

TEST(UpdateFromDepthTest, SharedTerminalVoxelGetsOneHitPerRay) {
  VoxelGrid map(Vec3(0, -0.5, -0.5), 1.0, {3, 1, 1});
  const CameraIntrinsics intr{100, 100, 0.5, 0, 2, 1};
  const ViewPose pose = ViewPose::look_at(Vec3(0.0, 0.0, 0.0), Vec3(1, 0, 0));
  DepthImage img(2, 1);
  img.at(0, 0) = 2.5;
  img.at(1, 0) = 2.5;
  update_from_depth(map, pose, intr, img, SensorModel{}, 10.0);
  EXPECT_NEAR(map.log_odds({2, 0, 0}), 2 * logit(0.9), 1e-12);
  EXPECT_NEAR(map.log_odds({0, 0, 0}), 2 * logit(0.1), 1e-12);
}

TEST(UpdateFromDepthTest, NoReturnMissesToMaxRange) {
  VoxelGrid map(Vec3(0, -0.5, -0.5), 0.5, {30, 1, 1});
  const CameraIntrinsics intr{1, 1, 0, 0, 1, 1};
  const ViewPose pose = ViewPose::look_at(Vec3(0.0, 0.0, 0.0), Vec3(1, 0, 0));
  DepthImage img(1, 1);
  img.at(0, 0) = DepthImage::kNoReturn;
  update_from_depth(map, pose, intr, img, SensorModel{}, 10.0);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(map.log_odds({i, 0, 0}), logit(0.1), 1e-12) << i;
  for (int i = 20; i < 30; ++i) EXPECT_FALSE(map.updated({i, 0, 0})) << i;
}

TEST(UpdateFromDepthTest, RenderThenIntegrateMarksWallOccupied) {
  const VoxelGrid gt = wall_scene(1.0);
  VoxelGrid map(gt.origin(), gt.resolution(), gt.dims());
  const ViewPose pose = ViewPose::look_at(Vec3(0.0, 0.0, 0.0), Vec3(1, 0, 0));
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(60, 32, 24);
  const DepthImage img = render_depth(gt, pose, intr, RaySampling::full(), 10.0);
  update_from_depth(map, pose, intr, img, SensorModel{}, 10.0);
  for (std::size_t idx = 0; idx < map.size(); ++idx) {
    if (!map.updated_at(idx)) continue;
    // Free voxels never receive hits and wall voxels never receive misses.
    if (map.log_odds_at(idx) > 0) {
      EXPECT_GT(gt.log_odds_at(idx), 0) << idx;
    } else {
      EXPECT_LT(gt.log_odds_at(idx), 0) << idx;
    }
  }
}

TEST(DepthImageTest, PgmRoundTrip) {
  DepthImage img(3, 2);
  img.at(0, 0) = 1.234;
  img.at(1, 0) = DepthImage::kNoReturn;
  img.at(2, 1) = 9.999;
  const auto path = std::filesystem::temp_directory_path() / "mvnbv_depth.pgm";
  img.save_pgm(path);
  const DepthImage back = DepthImage::load_pgm(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.width, 3);
  EXPECT_NEAR(back.at(0, 0), 1.234, 1e-3);
  EXPECT_NEAR(back.at(2, 1), 9.999, 1e-3);
  EXPECT_FALSE(DepthImage::returned(back.at(1, 0)));
}

TEST(CastViewTest, UnknownMapRunsToRangeOrExit) {
  const VoxelGrid map(Vec3(-1, -1, -1), 0.1, {20, 20, 20});
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(60, 30, 24);
  const auto traces = cast_view(map, ViewPose::look_at(Vec3::Zero(), Vec3(1, 0, 0)), intr, RaySampling::from_fraction(0.1), 10);
  EXPECT_EQ(traces.size(), 80u);
  for (const auto& t : traces) EXPECT_EQ(t.terminal, RayTermination::left_grid);
  const auto shortened =
      cast_view(map, ViewPose::look_at(Vec3::Zero(), Vec3(1, 0, 0)), intr, RaySampling::from_fraction(0.1), 0.3);
  for (const auto& t : shortened) EXPECT_EQ(t.terminal, RayTermination::max_range);
}

TEST(CastViewTest, BelievedWallStopsTraces) {
  VoxelGrid map(Vec3(0, -2, -2), 0.05, {60, 80, 80});
  for (std::size_t idx = 0; idx < map.size(); ++idx) {
    const Vec3 c = map.center(map.voxel_index(idx));
    if (c.x() >= 1.0 && c.x() < 1.05) map.set_log_odds_at(idx, 3.0);
  }
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(60, 32, 24);
  const auto traces = cast_view(map, ViewPose::look_at(Vec3::Zero(), Vec3(1, 0, 0)), intr, RaySampling::full(), 10);
  EXPECT_EQ(traces.size(), 32u * 24u);
  for (const auto& t : traces) {
    ASSERT_EQ(t.terminal, RayTermination::hit_surface);
    EXPECT_GT(map.occupancy(t.cells.back()), 0.5);
    for (std::size_t j = 0; j + 1 < t.cells.size(); ++j) EXPECT_LE(map.occupancy(t.cells[j]), 0.5);
    for (const auto& c : t.cells) EXPECT_LT(map.center(c).x(), 1.05);
  }
}

TEST(CastViewTest, VisibilityShrinksAsOccupancyGrows) {
  // Adding occupied belief never lengthens a trace.
  VoxelGrid map(Vec3(-1, -1, -1), 0.1, {20, 20, 20});
  const ViewPose pose = ViewPose::look_at(Vec3(-0.5, 0.1, 0.05), Vec3(1, 0, 0));
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(70, 24, 18);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, map.size() - 1);
  auto before = cast_view(map, pose, intr, RaySampling::full(), 10);
  for (int step = 0; step < 10; ++step) {
    for (int i = 0; i < 40; ++i) map.set_log_odds_at(pick(rng), 5.0);
    const auto after = cast_view(map, pose, intr, RaySampling::full(), 10);
    ASSERT_EQ(after.size(), before.size());
    for (std::size_t r = 0; r < after.size(); ++r) {
      ASSERT_LE(after[r].cells.size(), before[r].cells.size());
      for (std::size_t j = 0; j < after[r].cells.size(); ++j) EXPECT_EQ(after[r].cells[j], before[r].cells[j]);
    }
    before = after;
  }
}

}  // namespace
}  // namespace mvnbv
