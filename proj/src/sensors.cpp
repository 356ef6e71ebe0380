// SPDX-License-Identifier: Apache-2.0
#include "viloop/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "viloop/error.hpp"

namespace viloop {
namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;
constexpr double kGridTolerance = 1e-9;

bool is_integral(double x) { return std::abs(x - std::round(x)) < kGridTolerance; }

// Per-frame obstacle data for a fixed ray origin. Box entries reuse exactly
// the arithmetic of ray_box() so hits match the unaccelerated test bit for bit.
struct PreparedVolume {
  const ObstacleVolume* volume;
  Mat3 to_local;      // box only
  Vec3 local_origin;  // box only
  bool is_box;
};

std::vector<PreparedVolume> prepare(const Scene& scene, const Vec3& origin) {
  std::vector<PreparedVolume> out;
  out.reserve(scene.obstacles.size());
  for (const auto& v : scene.obstacles) {
    PreparedVolume p{&v, Mat3::Identity(), Vec3::Zero(), false};
    if (const auto* box = std::get_if<OrientedBox>(&v.shape)) {
      p.is_box = true;
      p.to_local = box->rotation.transpose();
      p.local_origin = p.to_local * (origin - box->center);
    }
    out.push_back(p);
  }
  return out;
}

// Closest positive hit over `candidates`; ties keep the earlier (lower id)
// volume.
double closest_hit(const std::vector<const PreparedVolume*>& candidates, const Ray& ray,
                   const ObstacleVolume** hit_volume) {
  double best = std::numeric_limits<double>::infinity();
  for (const PreparedVolume* p : candidates) {
    const ObstacleVolume& v = *p->volume;
    if (!ray_may_hit_sphere(ray, v.bound_center, v.bound_radius)) continue;
    if (p->is_box) {
      const auto& box = std::get<OrientedBox>(v.shape);
      const Vec3 d = p->to_local * ray.direction;
      if (auto t = slab_hit(p->local_origin, d, box.half_extents); t && *t < best) {
        best = *t;
        if (hit_volume) *hit_volume = &v;
      }
    } else {
      const auto& mesh = std::get<MeshShape>(v.shape);
      for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
        if (auto t = ray_triangle(ray, mesh.triangle(i)); t && *t < best) {
          best = *t;
          if (hit_volume) *hit_volume = &v;
        }
      }
    }
  }
  return best;
}

template <typename RowFn>
void for_rows(std::size_t rows, unsigned workers, RowFn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rows)));
  if (workers == 1) {
    for (std::size_t r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t r = w; r < rows; r += workers) fn(r);
    });
  }
}

}  // namespace

void LidarConfig::validate() const {
  if (!(h_fov_deg > 0.0 && h_fov_deg <= 360.0 && v_fov_deg > 0.0 && v_fov_deg <= 180.0)) {
    throw Error(Errc::InvalidConfig, "lidar fields of view must be positive");
  }
  if (!(h_res_deg > 0.0 && v_res_deg > 0.0)) {
    throw Error(Errc::InvalidConfig, "lidar resolutions must be positive");
  }
  if (!is_integral(h_fov_deg / h_res_deg) || !is_integral(v_fov_deg / v_res_deg)) {
    throw Error(Errc::InvalidConfig, "lidar resolution must divide the field of view");
  }
  if (!(max_range > 0.0)) throw Error(Errc::InvalidConfig, "lidar max_range must be positive");
}

std::size_t LidarConfig::rows() const {
  return static_cast<std::size_t>(std::llround(v_fov_deg / v_res_deg)) + 1;
}

std::size_t LidarConfig::cols() const {
  return static_cast<std::size_t>(std::llround(h_fov_deg / h_res_deg));
}

std::optional<std::size_t> LidarScan::horizon_row() const {
  for (std::size_t r = 0; r < rows; ++r) {
    if (std::abs(config.elevation_deg(r)) < kGridTolerance) return r;
  }
  return std::nullopt;
}

Vec3 lidar_direction(const LidarConfig& cfg, std::size_t row, std::size_t col) {
  const double az = cfg.azimuth_deg(col) * kRadPerDeg;
  const double el = cfg.elevation_deg(row) * kRadPerDeg;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

LidarScan cast_lidar(const Scene& scene, const RigidTransform& twin_pose, const LidarConfig& cfg,
                     unsigned workers) {
  cfg.validate();
  LidarScan scan;
  scan.config = cfg;
  scan.rows = cfg.rows();
  scan.cols = cfg.cols();
  scan.ranges.assign(scan.rows * scan.cols, cfg.miss_value());

  const RigidTransform sensor = compose(twin_pose, cfg.mount);
  const Vec3 origin = sensor.translation();
  const auto prepared = prepare(scene, origin);
  std::vector<const PreparedVolume*> all;
  for (const auto& p : prepared) all.push_back(&p);

  for_rows(scan.rows, workers, [&](std::size_t r) {
    for (std::size_t c = 0; c < scan.cols; ++c) {
      const Ray ray{origin, sensor.rotate(lidar_direction(cfg, r, c))};
      const double t = closest_hit(all, ray, nullptr);
      if (t <= cfg.max_range) scan.ranges[r * scan.cols + c] = t;
    }
  });
  return scan;
}

ThreeRays downsample_three(const LidarScan& scan) {
  const auto row = scan.horizon_row();
  if (!row) throw Error(Errc::MissingRay, "scan has no elevation-0 row");
  auto column_for = [&](double az_deg) -> std::size_t {
    for (std::size_t c = 0; c < scan.cols; ++c) {
      const double diff = std::remainder(scan.config.azimuth_deg(c) - az_deg, 360.0);
      if (std::abs(diff) < kGridTolerance) return c;
    }
    throw Error(Errc::MissingRay, "scan has no ray at azimuth " + std::to_string(az_deg));
  };
  auto sample = [&](double az_deg) {
    const double r = scan.at(*row, column_for(az_deg));
    return scan.is_miss(r) ? scan.config.max_range : r;
  };
  ThreeRays out;
  out.front = sample(0.0);
  out.left = sample(30.0);
  out.right = sample(-30.0);
  return out;
}

void CameraConfig::validate() const {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidConfig, "camera size must be positive");
  if (!(h_fov_deg > 0.0 && h_fov_deg < 180.0)) {
    throw Error(Errc::InvalidConfig, "camera h_fov must lie in (0, 180)");
  }
  if (!(max_range > 0.0)) throw Error(Errc::InvalidConfig, "camera max_range must be positive");
}

double CameraConfig::focal_px() const {
  return (static_cast<double>(width) / 2.0) / std::tan(h_fov_deg * kRadPerDeg / 2.0);
}

Vec3 camera_direction(const CameraConfig& cfg, int u, int v) {
  const double f = cfg.focal_px();
  return {1.0, -(static_cast<double>(u) - cfg.cx()) / f, -(static_cast<double>(v) - cfg.cy()) / f};
}

SemanticDepthImage render_semantic_depth(const Scene& scene, const RigidTransform& twin_pose,
                                         const CameraConfig& cfg, unsigned workers) {
  cfg.validate();
  SemanticDepthImage img;
  img.width = cfg.width;
  img.height = cfg.height;
  const std::size_t n = static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height);
  img.depth.assign(n, 0.0);
  img.valid.assign(n, 0);
  img.semantic.assign(n, SemanticClass::Background);

  const RigidTransform camera = compose(twin_pose, cfg.mount);
  const Vec3 origin = camera.translation();
  const auto prepared = prepare(scene, origin);
  const double f = cfg.focal_px();

  // Conservative pixel rectangle per volume from its bounding sphere's box in
  // the camera frame; volumes entirely behind the image plane are dropped.
  struct Footprint {
    const PreparedVolume* p;
    int u0, u1, v0, v1;
  };
  std::vector<Footprint> footprints;
  const Mat3 to_camera = camera.rotation().transpose();
  for (const auto& p : prepared) {
    const Vec3 c = to_camera * (p.volume->bound_center - origin);
    const double r = p.volume->bound_radius * (1.0 + 1e-9) + 1e-9;
    if (c.x() + r <= 0.0) continue;
    Footprint fp{&p, 0, cfg.width - 1, 0, cfg.height - 1};
    if (c.x() - r > 1e-6) {
      auto ratio_range = [&](double center) {
        const double hi = center + r >= 0.0 ? (center + r) / (c.x() - r) : (center + r) / (c.x() + r);
        const double lo = center - r >= 0.0 ? (center - r) / (c.x() + r) : (center - r) / (c.x() - r);
        return std::pair{lo, hi};
      };
      const auto [ylo, yhi] = ratio_range(c.y());
      const auto [zlo, zhi] = ratio_range(c.z());
      auto to_px = [](double x, int lo, int hi) {
        return static_cast<int>(std::clamp(x, static_cast<double>(lo), static_cast<double>(hi)));
      };
      fp.u0 = to_px(std::floor(cfg.cx() - f * yhi) - 2.0, 0, cfg.width - 1);
      fp.u1 = to_px(std::ceil(cfg.cx() - f * ylo) + 2.0, 0, cfg.width - 1);
      fp.v0 = to_px(std::floor(cfg.cy() - f * zhi) - 2.0, 0, cfg.height - 1);
      fp.v1 = to_px(std::ceil(cfg.cy() - f * zlo) + 2.0, 0, cfg.height - 1);
      if (cfg.cx() - f * yhi > cfg.width + 2.0 || cfg.cx() - f * ylo < -2.0 ||
          cfg.cy() - f * zhi > cfg.height + 2.0 || cfg.cy() - f * zlo < -2.0) {
        continue;
      }
    }
    footprints.push_back(fp);
  }

  for_rows(static_cast<std::size_t>(cfg.height), workers, [&](std::size_t row) {
    const int v = static_cast<int>(row);
    std::vector<const Footprint*> in_row;
    for (const auto& fp : footprints) {
      if (v >= fp.v0 && v <= fp.v1) in_row.push_back(&fp);
    }
    std::vector<const PreparedVolume*> candidates;
    for (int u = 0; u < cfg.width; ++u) {
      candidates.clear();
      for (const Footprint* fp : in_row) {
        if (u >= fp->u0 && u <= fp->u1) candidates.push_back(fp->p);
      }
      if (candidates.empty()) continue;
      const Ray ray{origin, camera.rotate(camera_direction(cfg, u, v))};
      const ObstacleVolume* hit = nullptr;
      const double t = closest_hit(candidates, ray, &hit);
      if (hit == nullptr || t * ray.direction.norm() > cfg.max_range) continue;
      const std::size_t i = img.index(u, v);
      img.depth[i] = t;
      img.valid[i] = 1;
      img.semantic[i] = hit->semantic;
    }
  });
  return img;
}

bool pedestrian_visible(const SemanticDepthImage& img, std::size_t min_pixels) {
  const auto count = static_cast<std::size_t>(
      std::count(img.semantic.begin(), img.semantic.end(), SemanticClass::Pedestrian));
  return count >= min_pixels;
}

}  // namespace viloop
