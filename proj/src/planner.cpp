#include "mvnbv/planner.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <unordered_set>

namespace mvnbv {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_non_empty_blocks(const ViewPartition& partition) {
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    if (partition.blocks[b].empty()) throw InvalidArgument("block " + std::to_string(b) + " has no candidate views");
  }
}

}  // namespace

std::size_t ViewPartition::view_count() const {
  std::size_t n = 0;
  for (const auto& block : blocks) n += block.size();
  return n;
}

void ViewPartition::validate() const {
  require_non_empty_blocks(*this);
  std::unordered_set<std::uint32_t> seen;
  for (const auto& block : blocks) {
    for (ViewId id : block) {
      if (!seen.insert(to_index(id)).second) {
        throw InvalidArgument("view " + std::to_string(to_index(id)) + " appears in more than one block");
      }
    }
  }
}

std::vector<ViewId> IndependentSet::views() const {
  std::vector<ViewId> out;
  out.reserve(selections.size());
  for (const auto& s : selections) out.push_back(s.view);
  return out;
}

IndependentSet IndependentSet::by_block() const {
  IndependentSet out = *this;
  std::sort(out.selections.begin(), out.selections.end(),
            [](const Selection& a, const Selection& b) { return a.block < b.block; });
  return out;
}

void RunningBest::absorb(const ViewScores& view) {
  for (std::size_t e = 0; e < view.voxels.size(); ++e) {
    double& slot = best_[view.voxels[e]];
    slot = std::max(slot, view.gains[e]);
  }
}

double overlap_aware_utility(const VisibilityCache& cache, std::span<const ViewId> views) {
  if (views.empty()) return 0.0;
  std::vector<double> best(cache.voxel_count, 0.0);
  std::vector<std::uint32_t> touched;
  for (ViewId id : views) {
    const ViewScores& view = cache.at(id);
    for (std::size_t e = 0; e < view.voxels.size(); ++e) {
      const std::uint32_t v = view.voxels[e];
      if (v >= best.size()) throw InvalidState("cached voxel id exceeds cache voxel count");
      if (best[v] == 0.0) touched.push_back(v);
      best[v] = std::max(best[v], view.gains[e]);
    }
  }
  // Sum in voxel order so the result does not depend on the order of `views`.
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  double total = 0.0;
  for (std::uint32_t v : touched) total += best[v];
  return total;
}

double overlap_aware_utility(const VisibilityCache& cache, const IndependentSet& set) {
  const auto views = set.views();
  return overlap_aware_utility(cache, views);
}

double marginal_utility(const VisibilityCache& cache, const RunningBest& running, ViewId x) {
  const ViewScores& view = cache.at(x);
  double gain = 0.0;
  for (std::size_t e = 0; e < view.voxels.size(); ++e) {
    const double diff = view.gains[e] - running.at(view.voxels[e]);
    if (diff > 0.0) gain += diff;
  }
  return gain;
}

PlanResult greedy_plan(const ViewPartition& partition, const VisibilityCache& cache) {
  const auto start = Clock::now();
  partition.validate();
  PlanResult result;
  RunningBest running(cache.voxel_count);
  std::vector<bool> block_used(partition.blocks.size(), false);
  for (std::size_t iteration = 0; iteration < partition.blocks.size(); ++iteration) {
    std::optional<Selection> best;
    double best_gain = -1.0;
    for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
      if (block_used[b]) continue;
      for (ViewId id : partition.blocks[b]) {
        const double gain = marginal_utility(cache, running, id);
        if (gain > best_gain || (gain == best_gain && to_index(id) < to_index(best->view))) {
          best_gain = gain;
          best = Selection{b, id};
        }
      }
    }
    block_used[best->block] = true;
    running.absorb(cache.at(best->view));
    result.chosen.selections.push_back(*best);
    result.marginals.push_back(best_gain);
    result.utility += best_gain;
  }
  result.elapsed_s = seconds_since(start);
  return result;
}

PlanResult exhaustive_plan(const ViewPartition& partition, const VisibilityCache& cache, std::uint64_t budget) {
  const auto start = Clock::now();
  partition.validate();
  std::uint64_t combos = 1;
  for (const auto& block : partition.blocks) {
    if (combos > budget / block.size()) {
      throw InvalidArgument("exhaustive search over more than " + std::to_string(budget) +
                            " independent sets refused; use greedy planning");
    }
    combos *= block.size();
  }
  // Enumerate each block in ascending id order so the first optimum found is the
  // lexicographically smallest id tuple.
  std::vector<std::vector<ViewId>> sorted = partition.blocks;
  for (auto& block : sorted) {
    std::sort(block.begin(), block.end(), [](ViewId a, ViewId b) { return to_index(a) < to_index(b); });
  }
  const std::size_t n = sorted.size();
  std::vector<std::size_t> odometer(n, 0);
  std::vector<ViewId> current(n);
  std::vector<ViewId> best_views;
  double best_utility = -1.0;
  for (std::uint64_t c = 0; c < combos; ++c) {
    for (std::size_t b = 0; b < n; ++b) current[b] = sorted[b][odometer[b]];
    const double f = overlap_aware_utility(cache, current);
    if (f > best_utility) {
      best_utility = f;
      best_views = current;
    }
    for (std::size_t b = n; b-- > 0;) {
      if (++odometer[b] < sorted[b].size()) break;
      odometer[b] = 0;
    }
  }
  PlanResult result;
  for (std::size_t b = 0; b < n; ++b) result.chosen.selections.push_back({b, best_views[b]});
  result.utility = best_utility;
  // Marginals along the block order, so they still sum to the utility.
  RunningBest running(cache.voxel_count);
  for (ViewId id : best_views) {
    result.marginals.push_back(marginal_utility(cache, running, id));
    running.absorb(cache.at(id));
  }
  result.elapsed_s = seconds_since(start);
  return result;
}

IndependentSet single_sensor_plan(const ViewPartition& partition, std::span<const double> naive_scores) {
  partition.validate();
  IndependentSet out;
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    std::optional<ViewId> best;
    double best_score = 0.0;
    for (ViewId id : partition.blocks[b]) {
      if (to_index(id) >= naive_scores.size()) {
        throw InvalidState("no naive score for view " + std::to_string(to_index(id)));
      }
      const double s = naive_scores[to_index(id)];
      if (!best || s > best_score || (s == best_score && to_index(id) < to_index(*best))) {
        best = id;
        best_score = s;
      }
    }
    out.selections.push_back({b, *best});
  }
  return out;
}

IndependentSet single_sensor_plan(const ViewPartition& partition, const VisibilityCache& cache) {
  std::vector<double> naive(cache.views.size());
  for (std::size_t i = 0; i < naive.size(); ++i) naive[i] = cache.views[i].naive_sum;
  return single_sensor_plan(partition, naive);
}

IndependentSet single_sensor_plan(const ViewPartition& partition, std::span<const std::vector<RayTrace>> view_traces,
                                  const ScoreModel& model, const VoxelGrid& map) {
  std::vector<double> naive(view_traces.size(), 0.0);
  for (std::size_t i = 0; i < view_traces.size(); ++i) {
    for (const RayTrace& ray : view_traces[i]) naive[i] += ray_score(model, map, ray);
  }
  return single_sensor_plan(partition, naive);
}

IndependentSet random_plan(const ViewPartition& partition, std::uint64_t seed) {
  require_non_empty_blocks(partition);
  std::mt19937_64 rng(seed);
  IndependentSet out;
  for (std::size_t b = 0; b < partition.blocks.size(); ++b) {
    std::uniform_int_distribution<std::size_t> pick(0, partition.blocks[b].size() - 1);
    out.selections.push_back({b, partition.blocks[b][pick(rng)]});
  }
  return out;
}

}  // namespace mvnbv
