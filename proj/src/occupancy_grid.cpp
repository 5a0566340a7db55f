#include "mvnbv/occupancy_grid.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mvnbv {

std::string to_string(const VoxelIndex& v) {
  return "(" + std::to_string(v.i) + "," + std::to_string(v.j) + "," + std::to_string(v.k) + ")";
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

void SensorModel::validate() const {
  if (!(p_hit > 0.5 && p_hit < 1.0)) {
    throw InvalidConfiguration("p_hit must lie in (0.5, 1), got " + std::to_string(p_hit));
  }
  if (!(p_miss > 0.0 && p_miss < 0.5)) {
    throw InvalidConfiguration("p_miss must lie in (0, 0.5), got " + std::to_string(p_miss));
  }
  if (!(clamp > 0.0)) {
    throw InvalidConfiguration("log-odds clamp must be positive");
  }
}

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution, const std::array<int, 3>& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw InvalidArgument("grid resolution must be positive");
  }
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    throw InvalidArgument("grid dims must be >= 1 on every axis");
  }
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  log_odds_.assign(n, 0.0);
  updated_.assign(n, 0);
}

VoxelGrid VoxelGrid::from_bounds(const Aabb& bounds, double resolution) {
  if (!(resolution > 0.0)) throw InvalidArgument("grid resolution must be positive");
  if (!bounds.has_positive_extent()) throw InvalidArgument("grid bounds must have positive extent on all axes");
  std::array<int, 3> dims{};
  const Vec3 extent = bounds.extent();
  for (int a = 0; a < 3; ++a) {
    // Tolerate float noise so that 1.0 / 0.05 gives 20 cells, not 21.
    const double cells = extent[a] / resolution;
    dims[a] = std::max(1, static_cast<int>(std::ceil(cells - 1e-9)));
  }
  return VoxelGrid(bounds.min, resolution, dims);
}

Aabb VoxelGrid::bounds() const {
  const Vec3 extent(dims_[0] * resolution_, dims_[1] * resolution_, dims_[2] * resolution_);
  return {origin_, origin_ + extent};
}

bool VoxelGrid::same_geometry(const VoxelGrid& other) const {
  return dims_ == other.dims_ && resolution_ == other.resolution_ && origin_ == other.origin_;
}

VoxelIndex VoxelGrid::voxel_index(std::size_t linear) const {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny), static_cast<int>(linear / (nx * ny))};
}

std::optional<VoxelIndex> VoxelGrid::voxel_at(const Vec3& p) const {
  const Vec3 q = (p - origin_) / resolution_;
  const VoxelIndex v{static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                     static_cast<int>(std::floor(q.z()))};
  if (!contains(v)) return std::nullopt;
  return v;
}

Vec3 VoxelGrid::center(const VoxelIndex& v) const {
  return origin_ + resolution_ * Vec3(v.i + 0.5, v.j + 0.5, v.k + 0.5);
}

std::size_t VoxelGrid::checked(const VoxelIndex& v) const {
  if (!contains(v)) throw InvalidArgument("voxel index " + to_string(v) + " out of bounds");
  return linear_index(v);
}

void VoxelGrid::apply_observation(const VoxelIndex& v, Observation z, const SensorModel& model) {
  apply_observation_at(checked(v), z, model);
}

void VoxelGrid::set_log_odds(const VoxelIndex& v, double l) {
  const std::size_t idx = checked(v);
  log_odds_[idx] = l;
  updated_[idx] = 1;
}

void VoxelGrid::reset(const VoxelIndex& v) {
  const std::size_t idx = checked(v);
  log_odds_[idx] = 0.0;
  updated_[idx] = 0;
}

ExploredStats VoxelGrid::explored_stats(const Aabb& roi) const {
  ExploredStats stats;
  // Voxel range whose centers fall inside roi.
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::ceil((roi.min[a] - origin_[a]) / resolution_ - 0.5)));
    hi[a] = std::min(dims_[a] - 1, static_cast<int>(std::floor((roi.max[a] - origin_[a]) / resolution_ - 0.5)));
    if (lo[a] > hi[a]) return stats;
  }
  for (int k = lo[2]; k <= hi[2]; ++k) {
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int i = lo[0]; i <= hi[0]; ++i) {
        ++stats.roi_count;
        if (updated_[linear_index({i, j, k})]) ++stats.updated_count;
      }
    }
  }
  const double voxel_cm3 = std::pow(resolution_ * 100.0, 3);
  stats.updated_volume_cm3 = static_cast<double>(stats.updated_count) * voxel_cm3;
  stats.unknown_volume_cm3 = static_cast<double>(stats.roi_count - stats.updated_count) * voxel_cm3;
  return stats;
}

// Binary dump: "NBVG", u32 version, 3 x u32 dims, f64 resolution, 3 x f64 origin,
// f32 log-odds, then updated flags packed LSB-first. All little-endian.
namespace {

constexpr std::uint32_t kDumpVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 + 12 + 8 + 24;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  if (pos + sizeof(U) > in.size()) throw InvalidArgument("grid dump truncated");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(in[pos + b]) << (8 * b);
  pos += sizeof(U);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::vector<std::uint8_t> VoxelGrid::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + 4 * size() + (size() + 7) / 8);
  for (char c : {'N', 'B', 'V', 'G'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le(out, kDumpVersion);
  for (int d : dims_) put_le(out, static_cast<std::uint32_t>(d));
  put_le(out, resolution_);
  for (int a = 0; a < 3; ++a) put_le(out, origin_[a]);
  for (double l : log_odds_) put_le(out, static_cast<float>(l));
  std::vector<std::uint8_t> bits((size() + 7) / 8, 0);
  for (std::size_t i = 0; i < size(); ++i) {
    if (updated_[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

VoxelGrid VoxelGrid::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), "NBVG", 4) != 0) {
    throw InvalidArgument("not a grid dump (bad magic)");
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kDumpVersion) throw InvalidArgument("unsupported grid dump version " + std::to_string(version));
  std::array<int, 3> dims{};
  for (int& d : dims) d = static_cast<int>(get_le<std::uint32_t>(bytes, pos));
  const double resolution = get_le<double>(bytes, pos);
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = get_le<double>(bytes, pos);
  VoxelGrid grid(origin, resolution, dims);
  const std::size_t n = grid.size();
  if (bytes.size() != kHeaderSize + 4 * n + (n + 7) / 8) throw InvalidArgument("grid dump size mismatch");
  for (std::size_t i = 0; i < n; ++i) grid.log_odds_[i] = get_le<float>(bytes, pos);
  for (std::size_t i = 0; i < n; ++i) grid.updated_[i] = (bytes[pos + i / 8] >> (i % 8)) & 1u;
  return grid;
}

void VoxelGrid::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const auto bytes = serialize();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

VoxelGrid VoxelGrid::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace mvnbv
