#ifndef MVNBV_PLANNER_HPP_
#define MVNBV_PLANNER_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvnbv/scoring.hpp"

namespace mvnbv {

/// Candidate views split into pairwise-disjoint per-sensor blocks; one pick per block.
struct ViewPartition {
  std::vector<std::vector<ViewId>> blocks;

  std::size_t sensor_count() const { return blocks.size(); }
  std::size_t view_count() const;
  /// Throws InvalidArgument on an empty block or a view id shared between blocks.
  void validate() const;
};

struct Selection {
  std::size_t block = 0;
  ViewId view{};

  bool operator==(const Selection&) const = default;
};

/// At most one view per block, in the order the views were chosen.
struct IndependentSet {
  std::vector<Selection> selections;

  std::vector<ViewId> views() const;
  /// Same selections, ordered by block index.
  IndependentSet by_block() const;
  bool operator==(const IndependentSet&) const = default;
};

/// Current g_v(I) per voxel; absent voxels count as 0. Values only grow.
class RunningBest {
 public:
  explicit RunningBest(std::size_t voxel_count) : best_(voxel_count, 0.0) {}

  double at(std::uint32_t voxel) const { return best_[voxel]; }
  /// g_v(I + {x}) = max(g_v(I), g_v({x})) for every voxel visible from x.
  void absorb(const ViewScores& view);

 private:
  std::vector<double> best_;
};

struct PlanResult {
  IndependentSet chosen;
  double utility = 0.0;
  std::vector<double> marginals;
  double elapsed_s = 0.0;
};

/// f(I) = sum_v max_{x in I} g_v({x}); f of the empty set is 0. Defined for arbitrary
/// subsets of candidate views, not only independent sets. Throws InvalidState for
/// views missing from the cache.
double overlap_aware_utility(const VisibilityCache& cache, std::span<const ViewId> views);
double overlap_aware_utility(const VisibilityCache& cache, const IndependentSet& set);

/// sum_{v visible from x} max(0, g_v({x}) - running[v]).
double marginal_utility(const VisibilityCache& cache, const RunningBest& running, ViewId x);

/// Greedy selection under the partition matroid; ties go to the lowest view id.
PlanResult greedy_plan(const ViewPartition& partition, const VisibilityCache& cache);

inline constexpr std::uint64_t kDefaultExhaustiveBudget = 1'000'000;

/// Optimal independent set by enumerating the block product. Refuses (InvalidArgument)
/// when the product of block sizes exceeds `budget`. Ties resolve to the
/// lexicographically smallest id tuple.
PlanResult exhaustive_plan(const ViewPartition& partition, const VisibilityCache& cache,
                           std::uint64_t budget = kDefaultExhaustiveBudget);

/// Per block, the view maximizing its naive per-ray score sum; no coordination between blocks.
IndependentSet single_sensor_plan(const ViewPartition& partition, std::span<const double> naive_scores);
/// Same, reading the naive sums stored in the cache.
IndependentSet single_sensor_plan(const ViewPartition& partition, const VisibilityCache& cache);
/// Same, computing each view's sum over rays of s(r) from its traces.
IndependentSet single_sensor_plan(const ViewPartition& partition, std::span<const std::vector<RayTrace>> view_traces,
                                  const ScoreModel& model, const VoxelGrid& map);

/// Uniform independent pick per block from a seeded generator.
IndependentSet random_plan(const ViewPartition& partition, std::uint64_t seed);

}  // namespace mvnbv

#endif  // MVNBV_PLANNER_HPP_
