#ifndef MVNBV_METRICS_HPP_
#define MVNBV_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mvnbv/occupancy_grid.hpp"

namespace mvnbv {

/// Occupied ground-truth voxels with at least one free 6-neighbor, as linear indices.
std::vector<std::uint32_t> surface_voxels(const VoxelGrid& ground_truth);

/// Fraction of ground-truth surface points with a reconstructed point (map voxel with P > 0.5)
/// within `tolerance` meters. Grids must share geometry. Throws InvalidArgument on an empty surface.
double surface_coverage(const VoxelGrid& ground_truth, const VoxelGrid& map, double tolerance = 0.05);

/// Precomputed variant for repeated evaluation against the same ground truth.
class SurfaceCoverage {
 public:
  SurfaceCoverage(const VoxelGrid& ground_truth, double tolerance);
  double operator()(const VoxelGrid& map) const;
  std::size_t surface_size() const { return surface_.size(); }

 private:
  std::array<int, 3> dims_;
  Vec3 origin_;
  double resolution_;
  std::vector<std::uint32_t> surface_;
  std::vector<std::array<int, 3>> offsets_;  // nearest first
};

/// Mean of the per-round values times 100.
double auc(std::span<const double> values);

struct MeanInterval {
  double mean = 0.0;
  double half_width = 0.0;  // 95% Student-t; 0 for fewer than two samples
  std::size_t count = 0;
};

MeanInterval mean_confidence_95(std::span<const double> samples);

/// 95% half-width of mean(a) - mean(b) under the pooled-variance two-sample t model.
double pooled_difference_half_width_95(std::span<const double> a, std::span<const double> b);

}  // namespace mvnbv

#endif  // MVNBV_METRICS_HPP_
