// SPDX-License-Identifier: Apache-2.0
#include "viloop/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "viloop/error.hpp"

namespace viloop {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kRadPerDeg = std::numbers::pi / 180.0;

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::ConfigError, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::ConfigError, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// {"position": [..], "yaw_deg": a} or {"position": [..], "rpy_deg": [r, p, y]}
RigidTransform pose_from(const json& j) {
  const Vec3 t = j.contains("position") ? vec3(j.at("position")) : Vec3::Zero();
  if (j.contains("rpy_deg")) {
    const Vec3 rpy = vec3(j.at("rpy_deg")) * kRadPerDeg;
    return RigidTransform::from_rpy(rpy.x(), rpy.y(), rpy.z(), t);
  }
  return RigidTransform::from_yaw(j.value("yaw_deg", 0.0) * kRadPerDeg, t);
}

SemanticClass class_from(const json& j, SemanticClass fallback) {
  if (!j.contains("class")) return fallback;
  const auto name = j.at("class").get<std::string>();
  auto c = semantic_from_string(name);
  if (!c) throw Error(Errc::ConfigError, "unknown semantic class '" + name + "'");
  return *c;
}

// Box or mesh, either placed in the world ("box.center", "pose") or, for
// assets, resting on the ground at the asset origin.
Shape shape_from(const json& j, const fs::path& base_dir, bool asset) {
  if (j.contains("box")) {
    const json& b = j.at("box");
    OrientedBox box;
    box.half_extents = vec3(b.at("half_extents"));
    const Vec3 fallback = asset ? Vec3(0.0, 0.0, box.half_extents.z()) : Vec3::Zero();
    box.center = b.contains("center") ? vec3(b.at("center")) : fallback;
    if (b.contains("rpy_deg")) {
      const Vec3 rpy = vec3(b.at("rpy_deg")) * kRadPerDeg;
      box.rotation = RigidTransform::from_rpy(rpy.x(), rpy.y(), rpy.z()).rotation();
    } else {
      box.rotation = RigidTransform::from_yaw(b.value("yaw_deg", 0.0) * kRadPerDeg).rotation();
    }
    return box;
  }
  if (j.contains("mesh")) {
    MeshShape mesh = load_obj(base_dir / j.at("mesh").get<std::string>());
    if (j.contains("pose")) return transform_shape(mesh, pose_from(j.at("pose")));
    return mesh;
  }
  throw Error(Errc::ConfigError, "shape needs a 'box' or 'mesh' entry");
}

SpawnKind kind_from(const std::string& s) {
  const auto k = lower(s);
  if (k == "robot") return SpawnKind::Robot;
  if (k == "object") return SpawnKind::Object;
  if (k == "npc") return SpawnKind::Npc;
  throw Error(Errc::ConfigError, "unknown spawn area kind '" + s + "'");
}

Rect rect_from(const json& j) { return {vec2(j.at("min")), vec2(j.at("max"))}; }

void read_lidar(const json& j, LidarConfig& cfg) {
  cfg.h_fov_deg = j.value("h_fov_deg", cfg.h_fov_deg);
  cfg.v_fov_deg = j.value("v_fov_deg", cfg.v_fov_deg);
  cfg.h_res_deg = j.value("h_res_deg", cfg.h_res_deg);
  cfg.v_res_deg = j.value("v_res_deg", cfg.v_res_deg);
  cfg.max_range = j.value("max_range", cfg.max_range);
  if (j.contains("mount")) cfg.mount = pose_from(j.at("mount"));
}

void read_camera(const json& j, CameraConfig& cfg) {
  cfg.width = j.value("width", cfg.width);
  cfg.height = j.value("height", cfg.height);
  cfg.h_fov_deg = j.value("h_fov_deg", cfg.h_fov_deg);
  cfg.max_range = j.value("max_range", cfg.max_range);
  if (j.contains("mount")) cfg.mount = pose_from(j.at("mount"));
}

struct Builder {
  fs::path base_dir;
  std::vector<Violation>& violations;

  void report(std::string code, std::string message, bool fatal = true) {
    violations.push_back({std::move(code), std::move(message), fatal});
  }

  // Runs `fn`, turning any failure into a violation tagged `code`.
  template <typename Fn>
  bool guarded(const std::string& code, const std::string& where, Fn&& fn) {
    try {
      fn();
      return true;
    } catch (const std::exception& e) {
      report(code, where + ": " + e.what());
      return false;
    }
  }

  Scenario build(const json& doc) {
    Scenario sc;
    Scene& scene = sc.scene;
    if (!doc.is_object()) {
      report("schema", "scenario root must be an object");
      return sc;
    }
    sc.name = doc.value("name", std::string("unnamed"));

    guarded("schema", "bounds", [&] {
      if (doc.contains("bounds")) scene.bounds = rect_from(doc.at("bounds"));
    });
    guarded("schema", "twin", [&] {
      if (!doc.contains("twin")) return;
      const json& t = doc.at("twin");
      if (t.contains("half_extents")) scene.twin_volume.half_extents = vec3(t.at("half_extents"));
      if (t.contains("center_offset")) scene.twin_volume.center_offset = vec3(t.at("center_offset"));
      if (!(scene.twin_volume.half_extents.array() > 0.0).all()) {
        throw Error(Errc::ConfigError, "twin half extents must be positive");
      }
    });

    std::set<std::uint32_t> seen;
    const json obstacles = doc.value("obstacles", json::array());
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const json& o = obstacles[i];
      const std::string where = "obstacles[" + std::to_string(i) + "]";
      guarded("schema", where, [&] {
        const auto id = o.at("id").get<std::uint32_t>();
        if (!seen.insert(id).second) {
          report("duplicate_obstacle_id", where + ": duplicate obstacle id " + std::to_string(id));
          return;
        }
        auto volume = ObstacleVolume::make(id, o.value("name", std::string()),
                                           shape_from(o, base_dir, false),
                                           class_from(o, SemanticClass::Wall), false);
        scene.add(std::move(volume));
      });
    }

    const json areas = doc.value("spawn_areas", json::array());
    std::set<std::uint32_t> area_ids;
    for (std::size_t i = 0; i < areas.size(); ++i) {
      const json& a = areas[i];
      const std::string where = "spawn_areas[" + std::to_string(i) + "]";
      guarded("schema", where, [&] {
        SpawnArea area;
        area.id = a.at("id").get<std::uint32_t>();
        if (!area_ids.insert(area.id).second) {
          report("duplicate_spawn_area_id", where + ": duplicate id " + std::to_string(area.id));
          return;
        }
        area.kind = kind_from(a.at("kind").get<std::string>());
        area.region = rect_from(a);
        if (a.contains("yaw_deg")) {
          const Vec2 yaw = vec2(a.at("yaw_deg"));
          area.yaw_min_deg = yaw.x();
          area.yaw_max_deg = yaw.y();
        }
        area.count = a.value("count", 0u);
        area.npc_speed = a.value("speed", 0.0);
        if (!(area.region.max.x() > area.region.min.x() && area.region.max.y() > area.region.min.y())) {
          report("spawn_area_empty", where + ": region has no area");
          return;
        }
        if (area.yaw_min_deg < -180.0 || area.yaw_max_deg > 180.0 || area.yaw_min_deg > area.yaw_max_deg) {
          report("spawn_area_yaw", where + ": yaw range must lie within [-180, 180]");
          return;
        }
        if (scene.bounds && !scene.bounds->contains(area.region)) {
          report("spawn_area_out_of_bounds",
                 where + ": spawn area " + std::to_string(area.id) + " lies outside the world bounds");
        }
        scene.spawn_areas.push_back(area);
      });
    }

    const json assets = doc.value("assets", json::object());
    auto read_assets = [&](const char* key, SemanticClass fallback, std::vector<AssetEntry>& out) {
      const json list = assets.value(key, json::array());
      for (std::size_t i = 0; i < list.size(); ++i) {
        guarded("schema", std::string("assets.") + key + "[" + std::to_string(i) + "]", [&] {
          AssetEntry e;
          e.name = list[i].value("name", std::string(key));
          e.shape = shape_from(list[i], base_dir, true);
          validate_shape(e.shape);
          e.semantic = class_from(list[i], fallback);
          out.push_back(std::move(e));
        });
      }
    };
    read_assets("objects", SemanticClass::Prop, scene.object_assets);
    read_assets("npcs", SemanticClass::Pedestrian, scene.npc_assets);

    guarded("schema", "sensors", [&] {
      const json s = doc.value("sensors", json::object());
      if (s.contains("lidar")) read_lidar(s.at("lidar"), sc.sensors.lidar);
      if (s.contains("camera")) read_camera(s.at("camera"), sc.sensors.camera);
      sc.sensors.lidar_enabled = s.value("lidar_enabled", true);
      sc.sensors.camera_enabled = s.value("camera_enabled", true);
      sc.sensors.workers = s.value("workers", 1u);
      sc.sensors.lidar.validate();
      sc.sensors.camera.validate();
    });
    guarded("schema", "robot", [&] {
      const json r = doc.value("robot", json::object());
      sc.robot.limits.v_max = r.value("v_max", sc.robot.limits.v_max);
      sc.robot.limits.w_max = r.value("w_max", sc.robot.limits.w_max);
      sc.robot.rate_hz = r.value("rate_hz", sc.robot.rate_hz);
      sc.robot.odometry_noise = r.value("odometry_noise", 0.0);
      sc.robot.limits.validate();
      if (!(sc.robot.rate_hz > 0.0)) throw Error(Errc::ConfigError, "rate_hz must be positive");
      if (sc.robot.odometry_noise != 0.0) {
        throw Error(Errc::ConfigError, "odometry noise injection is not implemented");
      }
    });
    return sc;
  }
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

MeshShape parse_obj(std::istream& in, const std::string& origin) {
  MeshShape mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw Error(Errc::ConfigError, where + ": bad vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> idx;
      std::string token;
      while (ls >> token) {
        long value = 0;
        try {
          value = std::stol(token.substr(0, token.find('/')));
        } catch (const std::exception&) {
          throw Error(Errc::ConfigError, where + ": bad face index '" + token + "'");
        }
        if (value <= 0) throw Error(Errc::ConfigError, where + ": face indices must be positive");
        idx.push_back(static_cast<std::uint32_t>(value - 1));
      }
      if (idx.size() != 3) throw Error(Errc::ConfigError, where + ": only triangular faces are supported");
      mesh.indices.push_back({idx[0], idx[1], idx[2]});
    } else if (tag == "vn" || tag == "vt" || tag == "o" || tag == "g" || tag == "s" ||
               tag == "usemtl" || tag == "mtllib") {
      continue;
    } else {
      throw Error(Errc::ConfigError, where + ": unsupported statement '" + tag + "'");
    }
  }
  validate_shape(mesh);
  return mesh;
}

MeshShape load_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open mesh " + path.string());
  return parse_obj(in, path.string());
}

Scenario parse_scenario(const json& doc, const fs::path& base_dir) {
  std::vector<Violation> violations;
  Builder builder{base_dir, violations};
  Scenario sc = builder.build(doc);
  for (const auto& v : violations) {
    if (v.fatal) throw Error(Errc::ConfigError, v.message);
  }
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

bool ValidationReport::ok() const {
  return std::none_of(violations.begin(), violations.end(), [](const Violation& v) { return v.fatal; });
}

json ValidationReport::to_json() const {
  json out;
  out["path"] = path;
  out["valid"] = ok();
  out["violations"] = json::array();
  for (const auto& v : violations) {
    out["violations"].push_back({{"code", v.code}, {"message", v.message}, {"fatal", v.fatal}});
  }
  return out;
}

ValidationReport validate_scenario(const fs::path& path) {
  ValidationReport report;
  report.path = path.string();
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const Error& e) {
    report.violations.push_back({"io", e.what(), true});
    return report;
  } catch (const json::parse_error& e) {
    report.violations.push_back({"schema", e.what(), true});
    return report;
  }
  Builder builder{path.parent_path(), report.violations};
  const Scenario sc = builder.build(doc);
  if (!report.ok()) return report;

  const Scene& scene = sc.scene;
  if (std::none_of(scene.spawn_areas.begin(), scene.spawn_areas.end(),
                   [](const SpawnArea& a) { return a.kind == SpawnKind::Robot; })) {
    report.violations.push_back({"no_robot_spawn_area", "scenario has no robot spawn area", true});
    return report;
  }
  if (scene.bounds) {
    for (const auto& v : scene.obstacles) {
      if (!scene.bounds->contains(Vec2(v.bound_center.head<2>()))) {
        report.violations.push_back({"obstacle_out_of_bounds",
                                     "obstacle " + std::to_string(v.id) + " lies outside the world bounds",
                                     false});
      }
    }
  }
  for (const auto& a : scene.spawn_areas) {
    if (a.kind != SpawnKind::Robot) continue;
    const Vec2 c = (a.region.min + a.region.max) / 2.0;
    const auto hit = check_collision(scene, RigidTransform::from_translation(Vec3(c.x(), c.y(), 0.0)));
    if (hit.collided) {
      report.violations.push_back({"spawn_area_blocked",
                                   "robot spawn area " + std::to_string(a.id) +
                                       " center overlaps obstacle " + std::to_string(*hit.other_id),
                                   false});
    }
  }
  try {
    const ResetResult reset = reset_scene(scene, 0);
    for (std::size_t i = 0; i < reset.scene.obstacles.size(); ++i) {
      const auto& a = reset.scene.obstacles[i];
      if (!a.dynamic) continue;
      for (std::size_t k = 0; k < reset.scene.obstacles.size(); ++k) {
        const auto& b = reset.scene.obstacles[k];
        if (k == i || !b.collidable() || !a.collidable()) continue;
        if (const auto* box = std::get_if<OrientedBox>(&a.shape); box && volume_overlaps(b, *box)) {
          report.violations.push_back({"initial_overlap",
                                       "spawned volume " + std::to_string(a.id) + " overlaps " +
                                           std::to_string(b.id),
                                       true});
        }
      }
    }
  } catch (const Error& e) {
    report.violations.push_back({"reset_failed", e.what(), true});
  }
  return report;
}

}  // namespace viloop
