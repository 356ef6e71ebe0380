// SPDX-License-Identifier: Apache-2.0
//
// Ray-cast sensors: a 3D scanning LiDAR and a pinhole camera producing depth
// plus per-pixel semantic class.
#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "viloop/frames.hpp"
#include "viloop/world.hpp"

namespace viloop {

struct LidarConfig {
  double h_fov_deg = 360.0;
  double v_fov_deg = 30.0;
  double h_res_deg = 1.0;
  double v_res_deg = 1.0;
  double max_range = 30.0;
  RigidTransform mount = RigidTransform::from_translation(Vec3(0.0, 0.0, 0.3));

  // Throws Error(InvalidConfig).
  void validate() const;
  std::size_t rows() const;  // elevations, both ends of the fov included
  std::size_t cols() const;  // azimuths over [0, h_fov)
  double azimuth_deg(std::size_t col) const { return static_cast<double>(col) * h_res_deg; }
  double elevation_deg(std::size_t row) const {
    return -v_fov_deg / 2.0 + static_cast<double>(row) * v_res_deg;
  }
  double miss_value() const { return max_range + 1.0; }
};

// Row-major [elevation][azimuth]. Azimuth grows counter-clockwise (to the
// left), elevation grows upward.
struct LidarScan {
  LidarConfig config;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> ranges;

  double at(std::size_t row, std::size_t col) const { return ranges[row * cols + col]; }
  bool is_miss(double r) const { return r > config.max_range; }
  // Row whose elevation is 0, if the grid has one.
  std::optional<std::size_t> horizon_row() const;
};

// Unit direction of ray (row, col) in the sensor frame.
Vec3 lidar_direction(const LidarConfig& cfg, std::size_t row, std::size_t col);

// Optional row-parallel evaluation; the result does not depend on `workers`.
LidarScan cast_lidar(const Scene& scene, const RigidTransform& twin_pose, const LidarConfig& cfg,
                     unsigned workers = 1);

struct ThreeRays {
  double front = 0.0;
  double right = 0.0;  // -30 degrees
  double left = 0.0;   // +30 degrees
};

// Samples the horizon row at 0, +30 and -30 degrees; misses become max_range.
// Throws Error(MissingRay) when the grid lacks one of those rays.
ThreeRays downsample_three(const LidarScan& scan);

struct CameraConfig {
  int width = 640;
  int height = 480;
  double h_fov_deg = 90.0;
  double max_range = 50.0;
  RigidTransform mount = RigidTransform::from_translation(Vec3(0.0, 0.0, 0.3));

  void validate() const;
  double focal_px() const;
  // Principal point sits on pixel (width/2, height/2).
  double cx() const { return static_cast<double>(width / 2); }
  double cy() const { return static_cast<double>(height / 2); }
};

// Camera frame follows the body convention (x forward, y left, z up); image
// rows run top to bottom, columns left to right.
Vec3 camera_direction(const CameraConfig& cfg, int u, int v);

// Depth is measured along the optical axis. Invalid pixels carry depth 0,
// valid = 0 and class Background.
struct SemanticDepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;
  std::vector<SemanticClass> semantic;

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(u);
  }
};

SemanticDepthImage render_semantic_depth(const Scene& scene, const RigidTransform& twin_pose,
                                         const CameraConfig& cfg, unsigned workers = 1);

inline constexpr std::size_t kDefaultPedestrianPixels = 50;

bool pedestrian_visible(const SemanticDepthImage& img,
                        std::size_t min_pixels = kDefaultPedestrianPixels);

struct SensorSuite {
  LidarConfig lidar;
  CameraConfig camera;
  bool lidar_enabled = true;
  bool camera_enabled = true;
  unsigned workers = 1;
};

}  // namespace viloop
