#ifndef MVNBV_SCORING_HPP_
#define MVNBV_SCORING_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mvnbv/geometry.hpp"
#include "mvnbv/occupancy_grid.hpp"
#include "mvnbv/sensing.hpp"

namespace mvnbv {

/// Information gain c(v) available at a voxel.
enum class GainKind {
  entropy,            // Bernoulli occupancy entropy in bits
  unknown_indicator,  // 1 for never-updated voxels, else 0
};

/// Weight applied to the gain of the j-th voxel along a ray.
enum class WeightKind {
  unit,             // always 1
  occlusion_aware,  // prod_{i<j} (1 - P(v_i))
  roi_masked,       // 1 if v_j lies in the region of interest, else 0
};

class ScoreModel {
 public:
  ScoreModel() = default;
  /// Throws InvalidArgument for roi_masked; use with_roi for that.
  ScoreModel(GainKind gain, WeightKind weight);
  /// roi_masked model over `grid`; roi must be non-empty and in bounds.
  static ScoreModel with_roi(GainKind gain, const VoxelGrid& grid, std::span<const VoxelIndex> roi);

  GainKind gain() const { return gain_; }
  WeightKind weight() const { return weight_; }

  double gain_at(const VoxelGrid& map, std::size_t idx) const {
    if (gain_ == GainKind::entropy) return binary_entropy(map.occupancy_at(idx));
    return map.updated_at(idx) ? 0.0 : 1.0;
  }
  bool in_roi(std::size_t idx) const { return idx < roi_mask_.size() && roi_mask_[idx] != 0; }
  /// Throws InvalidArgument if an roi model is applied to a grid of a different size.
  void check_compatible(const VoxelGrid& map) const;

 private:
  GainKind gain_ = GainKind::entropy;
  WeightKind weight_ = WeightKind::unit;
  std::vector<std::uint8_t> roi_mask_;
};

/// Weighted gains w_j * c(v_j) in ray order.
struct PerVoxelGain {
  std::vector<std::pair<VoxelIndex, double>> entries;
};

PerVoxelGain per_voxel_gains(const ScoreModel& model, const VoxelGrid& map, const RayTrace& ray);

/// s(r): sum of the ray's weighted gains.
double ray_score(const ScoreModel& model, const VoxelGrid& map, const RayTrace& ray);

enum class ViewId : std::uint32_t {};
inline constexpr std::uint32_t to_index(ViewId id) { return static_cast<std::uint32_t>(id); }

/// Best per-voxel weighted gain g_v({x}) of one candidate view, sorted by voxel id.
struct ViewScores {
  std::vector<std::uint32_t> voxels;
  std::vector<double> gains;
  double total = 0.0;      // f({x}) = sum of gains
  double naive_sum = 0.0;  // sum over rays of s(r), duplicates within the view included

  /// Collapses duplicate voxels by max and sorts.
  static ViewScores from_entries(std::vector<std::pair<std::uint32_t, double>> entries, double naive_sum = 0.0);
  std::size_t size() const { return voxels.size(); }
};

/// Per-voxel scratch buffer for max-aggregation over one view's rays. Reusable across views.
class GainAccumulator {
 public:
  explicit GainAccumulator(std::size_t voxel_count) : best_(voxel_count, -1.0) {}
  void add(std::size_t voxel, double gain) {
    double& slot = best_[voxel];
    if (slot < 0.0) {
      touched_.push_back(static_cast<std::uint32_t>(voxel));
      slot = gain;
    } else if (gain > slot) {
      slot = gain;
    }
  }
  /// Emits the aggregated view and clears the buffer.
  ViewScores take(double naive_sum);

 private:
  std::vector<double> best_;
  std::vector<std::uint32_t> touched_;
};

/// g_v({x}) for every voxel crossed by the view's traces, plus f({x}) and the naive per-ray sum.
ViewScores score_view(const ScoreModel& model, const VoxelGrid& map, std::span<const RayTrace> traces,
                      GainAccumulator& scratch);

/// Cache over all candidate views. Views are addressed by ViewId = position in `views`.
struct VisibilityCache {
  std::size_t voxel_count = 0;
  std::vector<ViewScores> views;

  /// Throws InvalidState for unknown ids.
  const ViewScores& at(ViewId id) const;
  bool has(ViewId id) const { return to_index(id) < views.size(); }
};

/// Scores every view's traces against one map snapshot; views are independent and run on `threads` workers.
VisibilityCache build_cache(const VoxelGrid& map, std::span<const std::vector<RayTrace>> view_traces,
                            const ScoreModel& model, unsigned threads = 1);

}  // namespace mvnbv

#endif  // MVNBV_SCORING_HPP_
