#include "mvnbv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace mvnbv {

std::vector<std::uint32_t> surface_voxels(const VoxelGrid& gt) {
  static constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<std::uint32_t> out;
  for (std::size_t idx = 0; idx < gt.size(); ++idx) {
    if (gt.log_odds_at(idx) <= 0.0) continue;
    const VoxelIndex v = gt.voxel_index(idx);
    for (const auto& o : kOffsets) {
      const VoxelIndex w{v.i + o[0], v.j + o[1], v.k + o[2]};
      if (gt.contains(w) && gt.log_odds_at(gt.linear_index(w)) <= 0.0) {
        out.push_back(static_cast<std::uint32_t>(idx));
        break;
      }
    }
  }
  return out;
}

SurfaceCoverage::SurfaceCoverage(const VoxelGrid& gt, double tolerance)
    : dims_(gt.dims()), origin_(gt.origin()), resolution_(gt.resolution()), surface_(surface_voxels(gt)) {
  if (surface_.empty()) throw InvalidArgument("ground truth has no surface voxels");
  if (!(tolerance >= 0.0)) throw InvalidArgument("coverage tolerance must be non-negative");
  // Lattice offsets whose center distance is within tolerance.
  const int r = static_cast<int>(std::floor(tolerance / resolution_ + 1e-9));
  const double tol2 = tolerance * tolerance * (1.0 + 1e-9);
  for (int dk = -r; dk <= r; ++dk)
    for (int dj = -r; dj <= r; ++dj)
      for (int di = -r; di <= r; ++di) {
        const double d2 = (di * di + dj * dj + dk * dk) * resolution_ * resolution_;
        if (d2 <= tol2) offsets_.push_back({di, dj, dk});
      }
  std::sort(offsets_.begin(), offsets_.end(), [](const auto& a, const auto& b) {
    return a[0] * a[0] + a[1] * a[1] + a[2] * a[2] < b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
  });
}

double SurfaceCoverage::operator()(const VoxelGrid& map) const {
  if (map.dims() != dims_ || map.resolution() != resolution_ || map.origin() != origin_) {
    throw InvalidArgument("surface coverage needs the map and ground truth on the same grid");
  }
  std::size_t covered = 0;
  for (std::uint32_t idx : surface_) {
    const VoxelIndex v = map.voxel_index(idx);
    for (const auto& o : offsets_) {
      const VoxelIndex w{v.i + o[0], v.j + o[1], v.k + o[2]};
      if (map.contains(w) && map.log_odds_at(map.linear_index(w)) > 0.0) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(surface_.size());
}

double surface_coverage(const VoxelGrid& gt, const VoxelGrid& map, double tolerance) {
  return SurfaceCoverage(gt, tolerance)(map);
}

double auc(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("AUC of an empty series");
  return 100.0 * std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

double sample_variance(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

double t_quantile_975(double dof) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), 0.975);
}

}  // namespace

MeanInterval mean_confidence_95(std::span<const double> samples) {
  MeanInterval out;
  out.count = samples.size();
  if (samples.empty()) return out;
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  if (samples.size() < 2) return out;
  const double n = static_cast<double>(samples.size());
  out.half_width = t_quantile_975(n - 1.0) * std::sqrt(sample_variance(samples, out.mean) / n);
  return out;
}

double pooled_difference_half_width_95(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("pooled interval needs two samples per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
  const double pooled = ((na - 1.0) * sample_variance(a, ma) + (nb - 1.0) * sample_variance(b, mb)) / (na + nb - 2.0);
  return t_quantile_975(na + nb - 2.0) * std::sqrt(pooled * (1.0 / na + 1.0 / nb));
}

}  // namespace mvnbv
