#ifndef MVNBV_OCCUPANCY_GRID_HPP_
#define MVNBV_OCCUPANCY_GRID_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mvnbv/geometry.hpp"

namespace mvnbv {

enum class Observation { hit, miss };

inline double logit(double p) { return std::log(p / (1.0 - p)); }
// e / (1 + e) reproduces p exactly for p = 0.9 where 1 / (1 + exp(-l)) is one ulp low.
inline double sigmoid(double l) {
  if (l > 30.0) return 1.0 / (1.0 + std::exp(-l));
  const double e = std::exp(l);
  return e / (1.0 + e);
}

/// Base-2 Bernoulli entropy, 0 at p in {0, 1}.
double binary_entropy(double p);

/// Hit/miss inverse sensor model in natural-log log-odds units.
struct SensorModel {
  double p_hit = 0.9;
  double p_miss = 0.1;
  double clamp = 10.0;

  /// Throws InvalidConfiguration unless p_hit > 0.5 > p_miss, both in (0,1), and clamp > 0.
  void validate() const;
  double increment(Observation z) const { return z == Observation::hit ? logit(p_hit) : logit(p_miss); }
};

/// Counts over the voxels whose centers lie inside a region of interest.
struct ExploredStats {
  std::size_t roi_count = 0;
  std::size_t updated_count = 0;
  double updated_volume_cm3 = 0.0;
  double unknown_volume_cm3 = 0.0;
};

// Dense log-odds voxel map, x-fastest storage. Voxels never observed keep
// log-odds 0 (P = 0.5) and updated = false.
class VoxelGrid {
 public:
  VoxelGrid(const Vec3& origin, double resolution, const std::array<int, 3>& dims);

  /// dims = ceil(extent / resolution) per axis; all voxels at P = 0.5.
  static VoxelGrid from_bounds(const Aabb& bounds, double resolution);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const { return log_odds_.size(); }
  Aabb bounds() const;
  bool same_geometry(const VoxelGrid& other) const;

  bool contains(const VoxelIndex& v) const {
    return v.i >= 0 && v.j >= 0 && v.k >= 0 && v.i < dims_[0] && v.j < dims_[1] && v.k < dims_[2];
  }
  std::size_t linear_index(const VoxelIndex& v) const {
    return static_cast<std::size_t>(v.i) +
           static_cast<std::size_t>(dims_[0]) * (static_cast<std::size_t>(v.j) +
                                                 static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(v.k));
  }
  VoxelIndex voxel_index(std::size_t linear) const;
  /// Voxel containing a world point, if inside the grid.
  std::optional<VoxelIndex> voxel_at(const Vec3& p) const;
  Vec3 center(const VoxelIndex& v) const;

  // Checked accessors; throw InvalidArgument on out-of-bounds indices.
  double log_odds(const VoxelIndex& v) const { return log_odds_[checked(v)]; }
  double occupancy(const VoxelIndex& v) const { return sigmoid(log_odds(v)); }
  double entropy(const VoxelIndex& v) const { return binary_entropy(occupancy(v)); }
  bool updated(const VoxelIndex& v) const { return updated_[checked(v)] != 0; }

  // Unchecked linear-index accessors for inner loops.
  double log_odds_at(std::size_t idx) const { return log_odds_[idx]; }
  double occupancy_at(std::size_t idx) const { return sigmoid(log_odds_[idx]); }
  bool updated_at(std::size_t idx) const { return updated_[idx] != 0; }

  /// Adds the model's log-odds increment, clamps to [-clamp, clamp] and marks the voxel updated.
  void apply_observation(const VoxelIndex& v, Observation z, const SensorModel& model);
  void apply_observation_at(std::size_t idx, Observation z, const SensorModel& model) {
    const double l = log_odds_[idx] + model.increment(z);
    log_odds_[idx] = std::clamp(l, -model.clamp, model.clamp);
    updated_[idx] = 1;
  }
  /// Direct write used for hand-built beliefs and ground truth; marks the voxel updated.
  void set_log_odds(const VoxelIndex& v, double l);
  void set_log_odds_at(std::size_t idx, double l) {
    log_odds_[idx] = l;
    updated_[idx] = 1;
  }
  /// Returns a voxel to the unobserved prior.
  void reset(const VoxelIndex& v);

  ExploredStats explored_stats(const Aabb& roi) const;

  std::span<const double> log_odds_data() const { return log_odds_; }
  std::span<const std::uint8_t> updated_data() const { return updated_; }

  void save(const std::filesystem::path& path) const;
  static VoxelGrid load(const std::filesystem::path& path);
  std::vector<std::uint8_t> serialize() const;
  static VoxelGrid deserialize(std::span<const std::uint8_t> bytes);

 private:
  std::size_t checked(const VoxelIndex& v) const;

  Vec3 origin_;
  double resolution_;
  std::array<int, 3> dims_;
  std::vector<double> log_odds_;
  std::vector<std::uint8_t> updated_;
};

}  // namespace mvnbv

#endif  // MVNBV_OCCUPANCY_GRID_HPP_
