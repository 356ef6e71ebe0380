// SPDX-License-Identifier: Apache-2.0
//
// JSON payloads for the standard topics. Units on the wire are metres and
// radians; quaternions are (x, y, z, w). Bulk arrays travel as base64 of
// little-endian f32 (ranges, depth) or raw u8 (semantic classes).
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viloop/bridge/envelope.hpp"
#include "viloop/frames.hpp"
#include "viloop/sensors.hpp"
#include "viloop/world.hpp"

namespace viloop::bridge {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws Error(MalformedJson) on invalid input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_f32(std::span<const double> values);
std::vector<float> decode_f32(std::string_view base64);

// {"position": {x, y, z}, "orientation": {x, y, z, w}}
json pose_to_json(const RigidTransform& pose);
// Throws Error(MalformedJson) on missing fields, Error(InvalidTransform) on a
// non-unit quaternion.
RigidTransform pose_from_json(const json& msg);

// Pose plus optional "timestep" and "stamp"; when absent the envelope's seq
// and stamp are used.
json odom_to_json(const PoseSample& sample);
PoseSample odom_from_json(const json& msg, std::uint64_t default_timestep, double default_stamp);

// {"data": bool}
json bool_to_json(bool value);
bool bool_from_json(const json& msg);

struct Twist {
  double linear_x = 0.0;
  double angular_z = 0.0;
};
// {"linear": {"x"}, "angular": {"z"}}
json twist_to_json(const Twist& t);
Twist twist_from_json(const json& msg);

// {"collided": bool, "other_id": int | null}
json collision_to_json(const CollisionReport& report);
CollisionReport collision_from_json(const json& msg);

// Grid header plus "ranges" (base64 f32). Row 0 is the lowest elevation,
// column 0 is straight ahead, azimuth grows counter-clockwise.
json lidar_to_json(const LidarScan& scan);
LidarScan lidar_from_json(const json& msg);

// Row-major, top-left origin. Pixels without a return carry depth 0 and the
// background class.
json depth_to_json(const SemanticDepthImage& image);
json semantic_to_json(const SemanticDepthImage& image);

}  // namespace viloop::bridge
