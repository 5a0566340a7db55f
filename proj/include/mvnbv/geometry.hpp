#ifndef MVNBV_GEOMETRY_HPP_
#define MVNBV_GEOMETRY_HPP_

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mvnbv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a configuration value is outside its valid domain.
class InvalidConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an object is queried in a state that cannot answer.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Integer voxel address. Bounds are checked by the owning grid.
struct VoxelIndex {
  int i = 0;
  int j = 0;
  int k = 0;

  auto operator<=>(const VoxelIndex&) const = default;
};

/// Axis-aligned box in world coordinates (meters).
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool has_positive_extent() const { return (max - min).minCoeff() > 0.0; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool contains(const Aabb& other) const { return contains(other.min) && contains(other.max); }
  bool intersects(const Aabb& other) const {
    return (min.array() < other.max.array()).all() && (other.min.array() < max.array()).all();
  }
};

std::string to_string(const VoxelIndex& v);

}  // namespace mvnbv

#endif  // MVNBV_GEOMETRY_HPP_
