#include "mvnbv/sensing.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <numbers>
#include <sstream>

namespace mvnbv {

CameraIntrinsics CameraIntrinsics::from_hfov(double hfov_deg, int width, int height) {
  CameraIntrinsics intr;
  const double half = 0.5 * hfov_deg * std::numbers::pi / 180.0;
  intr.fx = intr.fy = 0.5 * width / std::tan(half);
  intr.cx = 0.5 * (width - 1);
  intr.cy = 0.5 * (height - 1);
  intr.width = width;
  intr.height = height;
  intr.validate();
  return intr;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
}

ViewPose ViewPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  if (!z.allFinite()) throw InvalidArgument("look_at target coincides with eye");
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
  x.normalize();
  const Vec3 y = z.cross(x);
  ViewPose pose;
  pose.translation = eye;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  return pose;
}

void ViewPose::validate() const {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw InvalidArgument("view rotation is not a proper rotation matrix");
  }
}

Vec3 pixel_ray_direction(const CameraIntrinsics& intr, double x, double y) {
  if (!(x >= 0.0 && x < intr.width && y >= 0.0 && y < intr.height)) {
    throw InvalidArgument("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside image");
  }
  return Vec3((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0).normalized();
}

Eigen::Vector2d project(const CameraIntrinsics& intr, const Vec3& p) {
  if (!(p.z() > 0.0)) throw InvalidArgument("point behind the camera");
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

RaySampling RaySampling::from_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("ray fraction must lie in (0, 1]");
  int best = 1;
  double best_err = std::abs(1.0 - fraction);
  for (int s = 2; s <= 64; ++s) {
    const double err = std::abs(1.0 / (s * s) - fraction);
    if (err < best_err) {
      best = s;
      best_err = err;
    }
  }
  return {best, best};
}

std::vector<PixelRay> sampled_pixel_rays(const CameraIntrinsics& intr, const RaySampling& sampling) {
  intr.validate();
  if (sampling.stride_x < 1 || sampling.stride_y < 1) throw InvalidArgument("ray strides must be >= 1");
  std::vector<PixelRay> rays;
  rays.reserve(sampling.ray_count(intr));
  for (int n = 0; n < sampling.rows(intr); ++n) {
    const int y = sampling.offset_y() + n * sampling.stride_y;
    for (int m = 0; m < sampling.columns(intr); ++m) {
      const int x = sampling.offset_x() + m * sampling.stride_x;
      rays.push_back({x, y, pixel_ray_direction(intr, x, y)});
    }
  }
  return rays;
}

RayTrace traverse(const VoxelGrid& grid, const Vec3& origin, const Vec3& dir, double max_len) {
  if (!(max_len > 0.0)) throw InvalidArgument("max_len must be positive");
  if (std::abs(dir.norm() - 1.0) > 1e-9) throw InvalidArgument("ray direction must be unit length");
  RayTrace trace;
  double end = 0.0;
  const WalkEnd how = walk_ray(grid, origin, dir, max_len, [&](const CellVisit& v) {
    trace.cells.push_back(v.cell);
    end = v.t_out;
    return true;
  });
  trace.terminal = how == WalkEnd::left_grid ? RayTermination::left_grid : RayTermination::max_range;
  trace.length = trace.cells.empty() ? 0.0 : std::min(end, max_len);
  return trace;
}

DepthImage render_depth(const VoxelGrid& ground_truth, const ViewPose& pose, const CameraIntrinsics& intr,
                        const RaySampling& sampling, double max_range) {
  DepthImage img(intr.width, intr.height);
  for (const PixelRay& ray : sampled_pixel_rays(intr, sampling)) {
    const Vec3 dir = pose.rotation * ray.direction;
    double depth = DepthImage::kNoReturn;
    walk_ray(ground_truth, pose.translation, dir, max_range, [&](const CellVisit& v) {
      // The voxel holding the camera center never occludes.
      if (v.t_in > 0.0 && ground_truth.log_odds_at(v.linear) > 0.0) {
        depth = v.t_in;
        return false;
      }
      return true;
    });
    img.at(ray.x, ray.y) = depth;
  }
  return img;
}

void update_from_depth(VoxelGrid& map, const ViewPose& pose, const CameraIntrinsics& intr, const DepthImage& img,
                       const SensorModel& model, double max_range) {
  if (img.width != intr.width || img.height != intr.height) throw InvalidArgument("depth image size mismatch");
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double d = img.at(x, y);
      if (!DepthImage::sampled(d)) continue;
      const Vec3 dir = pose.rotation * pixel_ray_direction(intr, x, y);
      if (!DepthImage::returned(d)) {
        walk_ray(map, pose.translation, dir, max_range, [&](const CellVisit& v) {
          map.apply_observation_at(v.linear, Observation::miss, model);
          return true;
        });
        continue;
      }
      // Hit voxel: the one whose interval [t_in, t_out) holds the measured depth.
      walk_ray(map, pose.translation, dir, d + map.resolution(), [&](const CellVisit& v) {
        if (v.t_in <= d && d < v.t_out) {
          map.apply_observation_at(v.linear, Observation::hit, model);
          return false;
        }
        map.apply_observation_at(v.linear, Observation::miss, model);
        return true;
      });
    }
  }
}

std::vector<RayTrace> cast_view(const VoxelGrid& map, const ViewPose& pose, const CameraIntrinsics& intr,
                                const RaySampling& sampling, double max_range, double occupied_threshold) {
  const double occupied_log_odds = logit(occupied_threshold);
  const auto rays = sampled_pixel_rays(intr, sampling);
  std::vector<RayTrace> traces(rays.size());
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const Vec3 dir = pose.rotation * rays[r].direction;
    RayTrace& trace = traces[r];
    double end = 0.0;
    bool hit = false;
    const WalkEnd how = walk_ray(map, pose.translation, dir, max_range, [&](const CellVisit& v) {
      trace.cells.push_back(v.cell);
      end = v.t_out;
      if (map.log_odds_at(v.linear) > occupied_log_odds) {
        hit = true;
        end = v.t_in;
        return false;
      }
      return true;
    });
    if (hit) {
      trace.terminal = RayTermination::hit_surface;
    } else {
      trace.terminal = how == WalkEnd::left_grid ? RayTermination::left_grid : RayTermination::max_range;
    }
    trace.length = trace.cells.empty() ? 0.0 : std::min(end, max_range);
  }
  return traces;
}

void DepthImage::save_pgm(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n65535\n";
  for (double d : depths) {
    const double mm = returned(d) ? std::round(d * 1000.0) : 0.0;
    const auto v = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
    const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(bytes, 2);
  }
}

DepthImage DepthImage::load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 65535) throw InvalidArgument("unsupported depth PGM");
  DepthImage img(w, h);
  for (double& d : img.depths) {
    unsigned char bytes[2];
    if (!in.read(reinterpret_cast<char*>(bytes), 2)) throw InvalidArgument("depth PGM truncated");
    const int mm = bytes[0] | (bytes[1] << 8);
    d = mm / 1000.0;
  }
  return img;
}

}  // namespace mvnbv
