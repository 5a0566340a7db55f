#include "mvnbv/scoring.hpp"

#include <algorithm>
#include <numeric>

#include "mvnbv/parallel.hpp"

namespace mvnbv {

ScoreModel::ScoreModel(GainKind gain, WeightKind weight) : gain_(gain), weight_(weight) {
  if (weight == WeightKind::roi_masked) throw InvalidArgument("roi_masked weight needs a region of interest");
}

ScoreModel ScoreModel::with_roi(GainKind gain, const VoxelGrid& grid, std::span<const VoxelIndex> roi) {
  if (roi.empty()) throw InvalidArgument("region of interest is empty");
  ScoreModel model;
  model.gain_ = gain;
  model.weight_ = WeightKind::roi_masked;
  model.roi_mask_.assign(grid.size(), 0);
  for (const VoxelIndex& v : roi) {
    if (!grid.contains(v)) throw InvalidArgument("region of interest voxel " + to_string(v) + " out of bounds");
    model.roi_mask_[grid.linear_index(v)] = 1;
  }
  return model;
}

void ScoreModel::check_compatible(const VoxelGrid& map) const {
  if (weight_ == WeightKind::roi_masked && roi_mask_.size() != map.size()) {
    throw InvalidArgument("region of interest was built for a different grid");
  }
}

namespace {

// Calls emit(linear, weighted_gain) for each cell of the ray in order.
template <typename Emit>
void for_each_weighted_gain(const ScoreModel& model, const VoxelGrid& map, const RayTrace& ray, Emit&& emit) {
  double weight = 1.0;
  for (const VoxelIndex& cell : ray.cells) {
    const std::size_t idx = map.linear_index(cell);
    double w = weight;
    if (model.weight() == WeightKind::roi_masked) w = model.in_roi(idx) ? 1.0 : 0.0;
    emit(idx, w * model.gain_at(map, idx));
    if (model.weight() == WeightKind::occlusion_aware) weight *= 1.0 - map.occupancy_at(idx);
  }
}

}  // namespace

PerVoxelGain per_voxel_gains(const ScoreModel& model, const VoxelGrid& map, const RayTrace& ray) {
  model.check_compatible(map);
  PerVoxelGain out;
  out.entries.reserve(ray.cells.size());
  std::size_t j = 0;
  for_each_weighted_gain(model, map, ray, [&](std::size_t, double g) { out.entries.emplace_back(ray.cells[j++], g); });
  return out;
}

double ray_score(const ScoreModel& model, const VoxelGrid& map, const RayTrace& ray) {
  model.check_compatible(map);
  double s = 0.0;
  for_each_weighted_gain(model, map, ray, [&](std::size_t, double g) { s += g; });
  return s;
}

ViewScores ViewScores::from_entries(std::vector<std::pair<std::uint32_t, double>> entries, double naive_sum) {
  std::sort(entries.begin(), entries.end());
  ViewScores out;
  out.naive_sum = naive_sum;
  for (const auto& [voxel, gain] : entries) {
    if (gain < 0.0 || !std::isfinite(gain)) throw InvalidArgument("voxel gains must be finite and non-negative");
    if (!out.voxels.empty() && out.voxels.back() == voxel) {
      out.gains.back() = std::max(out.gains.back(), gain);
    } else {
      out.voxels.push_back(voxel);
      out.gains.push_back(gain);
    }
  }
  out.total = std::accumulate(out.gains.begin(), out.gains.end(), 0.0);
  return out;
}

ViewScores GainAccumulator::take(double naive_sum) {
  std::sort(touched_.begin(), touched_.end());
  ViewScores out;
  out.naive_sum = naive_sum;
  out.voxels = touched_;
  out.gains.reserve(touched_.size());
  for (std::uint32_t v : touched_) {
    out.gains.push_back(best_[v]);
    out.total += best_[v];
    best_[v] = -1.0;
  }
  touched_.clear();
  return out;
}

ViewScores score_view(const ScoreModel& model, const VoxelGrid& map, std::span<const RayTrace> traces,
                      GainAccumulator& scratch) {
  model.check_compatible(map);
  double naive = 0.0;
  for (const RayTrace& ray : traces) {
    for_each_weighted_gain(model, map, ray, [&](std::size_t idx, double g) {
      scratch.add(idx, g);
      naive += g;
    });
  }
  return scratch.take(naive);
}

const ViewScores& VisibilityCache::at(ViewId id) const {
  if (!has(id)) throw InvalidState("view " + std::to_string(to_index(id)) + " missing from visibility cache");
  return views[to_index(id)];
}

VisibilityCache build_cache(const VoxelGrid& map, std::span<const std::vector<RayTrace>> view_traces,
                            const ScoreModel& model, unsigned threads) {
  VisibilityCache cache;
  cache.voxel_count = map.size();
  cache.views.resize(view_traces.size());
  threads = std::max(1u, threads);
  std::vector<GainAccumulator> scratch(std::min<std::size_t>(threads, std::max<std::size_t>(1, view_traces.size())),
                                       GainAccumulator(map.size()));
  parallel_for(view_traces.size(), threads, [&](unsigned worker, std::size_t i) {
    cache.views[i] = score_view(model, map, view_traces[i], scratch[worker]);
  });
  return cache;
}

}  // namespace mvnbv
