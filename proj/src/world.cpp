// SPDX-License-Identifier: Apache-2.0
#include "viloop/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string_view>

#include "viloop/error.hpp"

namespace viloop {
namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;

// Box used for spawn placement: the shape itself, or the bounding box of a
// mesh in its own axes. Conservative for meshes.
OrientedBox placement_box(const ObstacleVolume& v) {
  if (const auto* box = std::get_if<OrientedBox>(&v.shape)) return *box;
  const auto& mesh = std::get<MeshShape>(v.shape);
  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const Vec3& p : mesh.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  OrientedBox box;
  box.center = (lo + hi) / 2.0;
  box.half_extents = ((hi - lo) / 2.0).cwiseMax(Vec3::Constant(1e-6));
  return box;
}

bool placement_clear(const Scene& scene, const ObstacleVolume& candidate,
                     const OrientedBox& twin) {
  const OrientedBox cand = placement_box(candidate);
  if (boxes_overlap(cand, twin)) return false;
  for (const auto& other : scene.obstacles) {
    if (!other.collidable()) continue;
    const double reach = candidate.bound_radius + other.bound_radius;
    if ((candidate.bound_center - other.bound_center).squaredNorm() > reach * reach) continue;
    if (boxes_overlap(cand, placement_box(other))) return false;
  }
  return true;
}

RigidTransform sample_pose(Rng& rng, const SpawnArea& area) {
  const double x = rng.uniform(area.region.min.x(), area.region.max.x());
  const double y = rng.uniform(area.region.min.y(), area.region.max.y());
  const double yaw = rng.uniform(area.yaw_min_deg, area.yaw_max_deg) * kRadPerDeg;
  return RigidTransform::from_yaw(yaw, Vec3(x, y, 0.0));
}

void validate_area(const SpawnArea& a) {
  if (!(a.region.area() > 0.0) || a.region.max.x() <= a.region.min.x()) {
    throw Error(Errc::InvalidConfig, "spawn area " + std::to_string(a.id) + " has no area");
  }
  if (a.yaw_min_deg < -180.0 || a.yaw_max_deg > 180.0 || a.yaw_min_deg > a.yaw_max_deg) {
    throw Error(Errc::InvalidConfig, "spawn area " + std::to_string(a.id) + " yaw range");
  }
  if (a.npc_speed < 0.0) {
    throw Error(Errc::InvalidConfig, "spawn area " + std::to_string(a.id) + " negative speed");
  }
}

std::uint32_t next_free_id(const Scene& scene) {
  return scene.obstacles.empty() ? 1 : scene.obstacles.back().id + 1;
}

}  // namespace

const char* to_string(SemanticClass c) noexcept {
  switch (c) {
    case SemanticClass::Background: return "Background";
    case SemanticClass::Wall: return "Wall";
    case SemanticClass::Prop: return "Prop";
    case SemanticClass::Pedestrian: return "Pedestrian";
    case SemanticClass::Goal: return "Goal";
    case SemanticClass::Ground: return "Ground";
  }
  return "Background";
}

std::optional<SemanticClass> semantic_from_string(const std::string& s) {
  for (auto c : {SemanticClass::Wall, SemanticClass::Prop, SemanticClass::Pedestrian,
                 SemanticClass::Goal, SemanticClass::Ground}) {
    const std::string_view name = to_string(c);
    if (s.size() == name.size() &&
        std::equal(s.begin(), s.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) ==
                 std::tolower(static_cast<unsigned char>(b));
        })) {
      return c;
    }
  }
  return std::nullopt;
}

void validate_shape(const Shape& shape) {
  if (const auto* box = std::get_if<OrientedBox>(&shape)) {
    if (!(box->half_extents.array() > 0.0).all()) {
      throw Error(Errc::InvalidConfig, "box half extents must be positive");
    }
    if (orthonormality_error(box->rotation) > kReorthonormalizeThreshold) {
      throw Error(Errc::InvalidConfig, "box rotation is not orthonormal");
    }
    return;
  }
  const auto& mesh = std::get<MeshShape>(shape);
  if (mesh.indices.empty()) throw Error(Errc::InvalidConfig, "mesh has no triangles");
  for (const auto& tri : mesh.indices) {
    for (auto i : tri) {
      if (i >= mesh.vertices.size()) throw Error(Errc::InvalidConfig, "mesh index out of range");
    }
  }
}

Shape transform_shape(const Shape& shape, const RigidTransform& pose) {
  if (const auto* box = std::get_if<OrientedBox>(&shape)) {
    OrientedBox out = *box;
    out.center = pose.apply(box->center);
    out.rotation = pose.rotation() * box->rotation;
    return out;
  }
  MeshShape mesh = std::get<MeshShape>(shape);
  for (Vec3& v : mesh.vertices) v = pose.apply(v);
  return mesh;
}

ObstacleVolume ObstacleVolume::make(std::uint32_t id, std::string name, Shape shape,
                                    SemanticClass semantic, bool dynamic) {
  validate_shape(shape);
  ObstacleVolume v;
  v.id = id;
  v.name = std::move(name);
  v.shape = std::move(shape);
  v.semantic = semantic;
  v.dynamic = dynamic;
  v.refresh_bounds();
  return v;
}

void ObstacleVolume::refresh_bounds() {
  if (const auto* box = std::get_if<OrientedBox>(&shape)) {
    bound_center = box->center;
    bound_radius = bounding_radius(*box);
    return;
  }
  const auto& mesh = std::get<MeshShape>(shape);
  Vec3 lo = mesh.vertices.front();
  Vec3 hi = lo;
  for (const Vec3& p : mesh.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bound_center = (lo + hi) / 2.0;
  bound_radius = 0.0;
  for (const Vec3& p : mesh.vertices) {
    bound_radius = std::max(bound_radius, (p - bound_center).norm());
  }
}

const ObstacleVolume* Scene::find(std::uint32_t id) const {
  auto it = std::lower_bound(obstacles.begin(), obstacles.end(), id,
                             [](const ObstacleVolume& v, std::uint32_t key) { return v.id < key; });
  return it != obstacles.end() && it->id == id ? &*it : nullptr;
}

ObstacleVolume* Scene::find(std::uint32_t id) {
  return const_cast<ObstacleVolume*>(std::as_const(*this).find(id));
}

void Scene::add(ObstacleVolume volume) {
  auto it = std::lower_bound(obstacles.begin(), obstacles.end(), volume.id,
                             [](const ObstacleVolume& v, std::uint32_t key) { return v.id < key; });
  if (it != obstacles.end() && it->id == volume.id) {
    throw Error(Errc::InvalidConfig, "duplicate obstacle id " + std::to_string(volume.id));
  }
  obstacles.insert(it, std::move(volume));
}

ResetResult reset_scene(const Scene& config, std::uint64_t seed) {
  Scene scene = config;
  scene.rng = Rng(seed);
  scene.rng_seed = seed;
  std::erase_if(scene.obstacles, [](const ObstacleVolume& v) { return v.dynamic; });
  scene.npcs.clear();

  std::vector<const SpawnArea*> robot_areas;
  for (const auto& area : scene.spawn_areas) {
    validate_area(area);
    if (area.kind == SpawnKind::Robot) robot_areas.push_back(&area);
  }
  if (robot_areas.empty()) throw Error(Errc::NoRobotSpawnArea, "scene has no robot spawn area");

  std::optional<RigidTransform> spawn;
  for (int attempt = 0; attempt < kPlacementAttempts && !spawn; ++attempt) {
    const SpawnArea& area = *robot_areas[scene.rng.index(robot_areas.size())];
    RigidTransform pose = sample_pose(scene.rng, area);
    if (!check_collision(scene, pose).collided) spawn = pose;
  }
  if (!spawn) throw Error(Errc::PlacementFailure, "could not place the robot");
  const OrientedBox twin = twin_box(scene.twin_volume, *spawn);

  auto place = [&](const SpawnArea& area, const AssetEntry& asset) -> std::uint32_t {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const RigidTransform pose = sample_pose(scene.rng, area);
      auto volume = ObstacleVolume::make(next_free_id(scene), asset.name,
                                         transform_shape(asset.shape, pose), asset.semantic, true);
      if (placement_clear(scene, volume, twin)) {
        const std::uint32_t id = volume.id;
        scene.add(std::move(volume));
        return id;
      }
    }
    throw Error(Errc::PlacementFailure,
                "could not place '" + asset.name + "' in spawn area " + std::to_string(area.id));
  };

  for (const auto& area : config.spawn_areas) {
    if (area.kind != SpawnKind::Object || scene.object_assets.empty()) continue;
    for (std::uint32_t k = 0; k < area.count; ++k) {
      place(area, scene.object_assets[scene.rng.index(scene.object_assets.size())]);
    }
  }
  for (const auto& area : config.spawn_areas) {
    if (area.kind != SpawnKind::Npc || scene.npc_assets.empty()) continue;
    for (std::uint32_t k = 0; k < area.count; ++k) {
      const std::uint32_t id = place(area, scene.npc_assets[scene.rng.index(scene.npc_assets.size())]);
      NpcState npc;
      npc.volume_id = id;
      npc.speed = area.npc_speed;
      npc.allowed_region = area.region;
      npc.waypoint = Vec2(scene.rng.uniform(area.region.min.x(), area.region.max.x()),
                          scene.rng.uniform(area.region.min.y(), area.region.max.y()));
      scene.npcs.push_back(npc);
    }
  }
  return {std::move(scene), *spawn};
}

OrientedBox twin_box(const TwinVolume& twin, const RigidTransform& pose) {
  OrientedBox box;
  box.center = pose.apply(twin.center_offset);
  box.half_extents = twin.half_extents;
  box.rotation = pose.rotation();
  return box;
}

bool volume_overlaps(const ObstacleVolume& volume, const OrientedBox& box) {
  if (const auto* other = std::get_if<OrientedBox>(&volume.shape)) {
    return boxes_overlap(box, *other);
  }
  const auto& mesh = std::get<MeshShape>(volume.shape);
  for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
    if (box_triangle_overlap(box, mesh.triangle(i))) return true;
  }
  return false;
}

CollisionReport check_collision(const Scene& scene, const RigidTransform& twin_pose) {
  const OrientedBox twin = twin_box(scene.twin_volume, twin_pose);
  const double twin_radius = bounding_radius(twin);
  for (const auto& volume : scene.obstacles) {
    if (!volume.collidable()) continue;
    const double reach = twin_radius + volume.bound_radius;
    if ((volume.bound_center - twin.center).squaredNorm() > reach * reach) continue;
    if (volume_overlaps(volume, twin)) return {true, volume.id};
  }
  return {};
}

Vec2 npc_position(const Scene& scene, const NpcState& npc) {
  const ObstacleVolume* v = scene.find(npc.volume_id);
  if (v == nullptr) throw Error(Errc::InvalidConfig, "NPC references a missing volume");
  if (const auto* box = std::get_if<OrientedBox>(&v->shape)) return box->center.head<2>();
  return v->bound_center.head<2>();
}

Scene step_npcs(Scene scene, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidConfig, "step_npcs requires dt > 0");
  for (auto& npc : scene.npcs) {
    ObstacleVolume* volume = scene.find(npc.volume_id);
    if (volume == nullptr) throw Error(Errc::InvalidConfig, "NPC references a missing volume");
    const Vec2 pos = npc_position(scene, npc);
    const Vec2 to_target = npc.waypoint - pos;
    const double dist = to_target.norm();
    const double travel = npc.speed * dt;
    Vec2 next = (travel >= dist) ? npc.waypoint : Vec2(pos + to_target * (travel / dist));
    next = npc.allowed_region.clamp(next);
    if (npc.speed > 0.0 && (npc.waypoint - next).norm() < kNpcArrivalRadius) {
      const Rect& r = npc.allowed_region;
      npc.waypoint = Vec2(scene.rng.uniform(r.min.x(), r.max.x()),
                          scene.rng.uniform(r.min.y(), r.max.y()));
    }
    const Vec3 delta(next.x() - pos.x(), next.y() - pos.y(), 0.0);
    if (auto* box = std::get_if<OrientedBox>(&volume->shape)) {
      box->center += delta;
    } else {
      for (Vec3& p : std::get<MeshShape>(volume->shape).vertices) p += delta;
    }
    volume->refresh_bounds();
  }
  return scene;
}

}  // namespace viloop
