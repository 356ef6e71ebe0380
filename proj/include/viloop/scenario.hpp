// SPDX-License-Identifier: Apache-2.0
//
// Scenario files (JSON) and ASCII OBJ meshes. The schema is documented in
// scenarios/README.md.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "viloop/kinematics.hpp"
#include "viloop/sensors.hpp"
#include "viloop/world.hpp"

namespace viloop {

struct RobotConfig {
  SaturationLimits limits;
  double rate_hz = 20.0;
  // Odometry noise is not modelled; a non-zero value is rejected by
  // validate_scenario.
  double odometry_noise = 0.0;
};

struct Scenario {
  std::string name;
  Scene scene;
  SensorSuite sensors;
  RobotConfig robot;
};

// Vertices ("v x y z") and triangular faces ("f a b c", 1-based, optional
// "/vt/vn" suffixes). Anything else but comments, normals, texture
// coordinates, groups and materials is rejected. Throws Error(IoError) or
// Error(ConfigError).
MeshShape load_obj(const std::filesystem::path& path);
MeshShape parse_obj(std::istream& in, const std::string& origin = "<stream>");

// Throws Error(IoError) when unreadable, Error(ConfigError) on the first
// fatal violation.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);

struct Violation {
  std::string code;  // e.g. "duplicate_obstacle_id"
  std::string message;
  bool fatal = true;
};

struct ValidationReport {
  std::string path;
  std::vector<Violation> violations;

  bool ok() const;
  nlohmann::json to_json() const;
};

// Schema and geometry checks: ids, shapes, spawn areas inside bounds, and a
// trial reset with seed 0 to catch initial overlaps.
ValidationReport validate_scenario(const std::filesystem::path& path);

}  // namespace viloop
