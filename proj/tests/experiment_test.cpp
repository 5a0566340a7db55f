#include <gtest/gtest.h>

#include "mvnbv/experiment.hpp"

namespace mvnbv {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.sensors = 2;
  c.candidates_per_sensor = 6;
  c.rounds = 3;
  c.resolution = 0.1;
  c.ray_fraction = 1.0 / 64;
  c.scenes = {SceneEntry{4, 2, Aabb{Vec3(0, 0, 0), Vec3(5, 4, 2.5)}}};
  c.run_seeds = {0, 1};
  return c;
}

TEST(ExperimentTest, MethodNames) {
  for (Method m : {Method::ours, Method::single, Method::random, Method::exhaustive}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_THROW(method_from_string("best"), InvalidConfiguration);
}

TEST(ExperimentTest, ValidationNamesField) {
  ExperimentConfig c = small_config();
  c.sensor.p_hit = 0.4;
  try {
    c.validate();
    FAIL();
  } catch (const InvalidConfiguration& e) {
    EXPECT_NE(std::string(e.what()).find("p_hit"), std::string::npos);
  }
  c = small_config();
  c.rounds = -1;
  EXPECT_THROW(c.validate(), InvalidConfiguration);
  c = small_config();
  c.score.weight = WeightKind::roi_masked;
  EXPECT_THROW(c.validate(), InvalidConfiguration);
}

TEST(ExperimentTest, InitialViewsSharedAcrossMethods) {
  const ExperimentConfig c = small_config();
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  const auto ours = run_episode(c, ctx, Method::ours, 7);
  const auto random = run_episode(c, ctx, Method::random, 7);
  const auto single = run_episode(c, ctx, Method::single, 7);
  EXPECT_EQ(ours.initial_views, random.initial_views);
  EXPECT_EQ(ours.initial_views, single.initial_views);
  EXPECT_EQ(ours.initial_views.size(), 2u);
  EXPECT_EQ(ours.rounds[0].explored_frac, random.rounds[0].explored_frac);
  EXPECT_EQ(ours.rounds[0].surface_cov, random.rounds[0].surface_cov);
  EXPECT_NE(run_episode(c, ctx, Method::ours, 8).initial_views, std::vector<ViewId>{});
}

TEST(ExperimentTest, ZeroRoundsReportsInitializationOnly) {
  ExperimentConfig c = small_config();
  c.rounds = 0;
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  const auto r = run_episode(c, ctx, Method::ours, 0);
  ASSERT_EQ(r.rounds.size(), 1u);
  EXPECT_EQ(r.rounds[0].round, 0);
  EXPECT_GT(r.rounds[0].explored_frac, 0.0);
  EXPECT_TRUE(r.plans.empty());
}

TEST(ExperimentTest, MetricsAreMonotoneAndBounded) {
  const ExperimentConfig c = small_config();
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  for (Method m : {Method::ours, Method::single, Method::random, Method::exhaustive}) {
    const auto r = run_episode(c, ctx, m, 1);
    ASSERT_EQ(r.rounds.size(), 4u);
    EXPECT_FALSE(r.truncated);
    for (std::size_t k = 0; k < r.rounds.size(); ++k) {
      const auto& q = r.rounds[k];
      EXPECT_EQ(q.views_per_sensor, static_cast<int>(k) + 1);
      EXPECT_GE(q.explored_frac, 0.0);
      EXPECT_LE(q.explored_frac, 1.0 + 1e-12);
      EXPECT_LE(q.surface_cov, 1.0);
      if (k == 0) continue;
      const auto& p = r.rounds[k - 1];
      EXPECT_GE(q.explored_frac, p.explored_frac);
      EXPECT_GE(q.explored_frac_grid, p.explored_frac_grid);
      EXPECT_LE(q.unknown_cm3, p.unknown_cm3);
      EXPECT_GE(q.plan_time_s, p.plan_time_s);
      // One view per sensor per round, never repeated.
      EXPECT_EQ(r.plans[k - 1].selections.size(), 2u);
    }
    std::vector<ViewId> used = r.initial_views;
    for (const auto& plan : r.plans) {
      for (ViewId v : plan.views()) {
        EXPECT_EQ(std::count(used.begin(), used.end(), v), 0);
        used.push_back(v);
      }
    }
  }
}

TEST(ExperimentTest, TruncatesWhenBlocksRunOut) {
  ExperimentConfig c = small_config();
  c.rounds = 8;
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  const auto r = run_episode(c, ctx, Method::random, 2);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.rounds.size(), 6u);
  EXPECT_NEAR(r.rounds.back().explored_frac, 1.0, 1e-12);
}

TEST(ExperimentTest, DeterministicAcrossThreadCounts) {
  const ExperimentConfig c = small_config();
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  const auto a = run_episode(c, ctx, Method::ours, 3, 1);
  const auto b = run_episode(c, ctx, Method::ours, 3, 3);
  EXPECT_EQ(a.plans, b.plans);
  for (std::size_t k = 0; k < a.rounds.size(); ++k) {
    EXPECT_EQ(a.rounds[k].explored_frac, b.rounds[k].explored_frac);
    EXPECT_EQ(a.rounds[k].surface_cov, b.rounds[k].surface_cov);
  }
}

TEST(ExperimentTest, OneSensorGreedyMatchesExhaustive) {
  ExperimentConfig c = small_config();
  c.sensors = 1;
  c.candidates_per_sensor = 8;
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  const auto ours = run_episode(c, ctx, Method::ours, 0);
  const auto exhaustive = run_episode(c, ctx, Method::exhaustive, 0);
  EXPECT_EQ(ours.plans, exhaustive.plans);
}

TEST(ExperimentTest, ScoreCandidatesSkipsInactive) {
  const ExperimentConfig c = small_config();
  const EpisodeContext ctx = EpisodeContext::prepare(c, c.scenes[0]);
  const VoxelGrid map = VoxelGrid::from_bounds(c.scenes[0].bounds, c.resolution);
  const auto cache = score_candidates(map, ctx.candidates.poses, {ViewId{2}, ViewId{5}}, ScoreModel{}, c.intrinsics(),
                                      c.sampling(), c.max_range, 1);
  EXPECT_GT(cache.views[2].total, 0.0);
  EXPECT_GT(cache.views[5].total, 0.0);
  EXPECT_EQ(cache.views[0].size(), 0u);
}

TEST(ExperimentTest, TabletopPreset) {
  const ExperimentConfig c = ExperimentConfig::tabletop();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.sensors, 2);
  EXPECT_EQ(c.methods.front(), Method::exhaustive);
}

}  // namespace
}  // namespace mvnbv
