// SPDX-License-Identifier: Apache-2.0
#include "viloop/bridge/messages.hpp"

#include <bit>
#include <cstring>

#include <openssl/evp.h>

#include "viloop/error.hpp"

namespace viloop::bridge {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedJson, what); }

const json& member(const json& j, const char* key) {
  if (!j.is_object()) malformed(std::string("expected an object holding ") + key);
  auto it = j.find(key);
  if (it == j.end()) malformed(std::string("missing key ") + key);
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = member(j, key);
  if (!v.is_number()) malformed(std::string(key) + " must be a number");
  return v.get<double>();
}

std::uint64_t count(const json& j, const char* key) {
  const json& v = member(j, key);
  if (!v.is_number_unsigned()) malformed(std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) malformed("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) malformed("invalid base64");
  std::size_t size = static_cast<std::size_t>(n);
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  for (std::size_t i = text.size(); i > 0 && text[i - 1] == '='; --i) --size;
  out.resize(size);
  return out;
}

std::string encode_f32(std::span<const double> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_f32(std::string_view base64) {
  const auto bytes = base64_decode(base64);
  if (bytes.size() % 4 != 0) malformed("f32 payload size is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

json pose_to_json(const RigidTransform& pose) {
  const Vec3& p = pose.translation();
  const Quaternion q = pose.quaternion();
  return {{"position", {{"x", p.x()}, {"y", p.y()}, {"z", p.z()}}},
          {"orientation", {{"x", q.x}, {"y", q.y}, {"z", q.z}, {"w", q.w}}}};
}

RigidTransform pose_from_json(const json& msg) {
  const json& p = member(msg, "position");
  const json& o = member(msg, "orientation");
  const Vec3 t(number(p, "x"), number(p, "y"), number(p, "z"));
  const Quaternion q{number(o, "x"), number(o, "y"), number(o, "z"), number(o, "w")};
  return RigidTransform::from_quaternion(q, t);
}

json odom_to_json(const PoseSample& sample) {
  json j = pose_to_json(sample.transform);
  j["timestep"] = sample.timestep;
  j["stamp"] = sample.stamp;
  return j;
}

PoseSample odom_from_json(const json& msg, std::uint64_t default_timestep, double default_stamp) {
  PoseSample s;
  s.transform = pose_from_json(msg);
  s.timestep = msg.contains("timestep") ? count(msg, "timestep") : default_timestep;
  s.stamp = msg.contains("stamp") ? number(msg, "stamp") : default_stamp;
  return s;
}

json bool_to_json(bool value) { return {{"data", value}}; }

bool bool_from_json(const json& msg) {
  const json& v = member(msg, "data");
  if (!v.is_boolean()) malformed("data must be a boolean");
  return v.get<bool>();
}

json twist_to_json(const Twist& t) {
  return {{"linear", {{"x", t.linear_x}}}, {"angular", {{"z", t.angular_z}}}};
}

Twist twist_from_json(const json& msg) {
  return {number(member(msg, "linear"), "x"), number(member(msg, "angular"), "z")};
}

json collision_to_json(const CollisionReport& report) {
  json j = {{"collided", report.collided}, {"other_id", nullptr}};
  if (report.other_id) j["other_id"] = *report.other_id;
  return j;
}

CollisionReport collision_from_json(const json& msg) {
  CollisionReport r;
  const json& c = member(msg, "collided");
  if (!c.is_boolean()) malformed("collided must be a boolean");
  r.collided = c.get<bool>();
  const json& id = member(msg, "other_id");
  if (!id.is_null()) {
    if (!id.is_number_unsigned()) malformed("other_id must be an integer or null");
    r.other_id = id.get<std::uint32_t>();
  }
  return r;
}

json lidar_to_json(const LidarScan& scan) {
  const LidarConfig& c = scan.config;
  return {{"rows", scan.rows},
          {"cols", scan.cols},
          {"h_fov_deg", c.h_fov_deg},
          {"v_fov_deg", c.v_fov_deg},
          {"h_res_deg", c.h_res_deg},
          {"v_res_deg", c.v_res_deg},
          {"max_range", c.max_range},
          {"miss_value", c.miss_value()},
          {"encoding", "base64-f32le"},
          {"ranges", encode_f32(scan.ranges)}};
}

LidarScan lidar_from_json(const json& msg) {
  LidarScan scan;
  scan.config.h_fov_deg = number(msg, "h_fov_deg");
  scan.config.v_fov_deg = number(msg, "v_fov_deg");
  scan.config.h_res_deg = number(msg, "h_res_deg");
  scan.config.v_res_deg = number(msg, "v_res_deg");
  scan.config.max_range = number(msg, "max_range");
  scan.rows = count(msg, "rows");
  scan.cols = count(msg, "cols");
  const json& data = member(msg, "ranges");
  if (!data.is_string()) malformed("ranges must be a base64 string");
  const auto values = decode_f32(data.get_ref<const std::string&>());
  if (values.size() != scan.rows * scan.cols) malformed("ranges size does not match rows*cols");
  scan.ranges.assign(values.begin(), values.end());
  return scan;
}

json depth_to_json(const SemanticDepthImage& image) {
  std::vector<double> depth(image.depth.size(), 0.0);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (image.valid[i]) depth[i] = image.depth[i];
  }
  return {{"width", image.width},
          {"height", image.height},
          {"encoding", "base64-f32le"},
          {"data", encode_f32(depth)}};
}

json semantic_to_json(const SemanticDepthImage& image) {
  std::vector<std::uint8_t> classes(image.semantic.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    classes[i] = static_cast<std::uint8_t>(image.semantic[i]);
  }
  json labels = json::object();
  for (int c = 0; c <= static_cast<int>(SemanticClass::Ground); ++c) {
    labels[std::to_string(c)] = to_string(static_cast<SemanticClass>(c));
  }
  return {{"width", image.width},
          {"height", image.height},
          {"encoding", "base64-u8"},
          {"labels", labels},
          {"data", base64_encode(classes)}};
}

}  // namespace viloop::bridge
