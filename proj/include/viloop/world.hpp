// SPDX-License-Identifier: Apache-2.0
//
// The virtual environment: obstacle volumes, spawn areas, NPC motion and
// digital-twin collision checks.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "viloop/frames.hpp"
#include "viloop/geometry.hpp"
#include "viloop/rng.hpp"

namespace viloop {

enum class SemanticClass : std::uint8_t {
  Background = 0,
  Wall = 1,
  Prop = 2,
  Pedestrian = 3,
  Goal = 4,
  Ground = 5,
};

const char* to_string(SemanticClass c) noexcept;
std::optional<SemanticClass> semantic_from_string(const std::string& s);

struct MeshShape {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> indices;

  std::size_t triangle_count() const { return indices.size(); }
  Triangle triangle(std::size_t i) const {
    const auto& idx = indices[i];
    return {vertices[idx[0]], vertices[idx[1]], vertices[idx[2]]};
  }
};

using Shape = std::variant<OrientedBox, MeshShape>;

// Throws Error(InvalidConfig) on non-positive half extents, out-of-range
// indices or an empty mesh.
void validate_shape(const Shape& shape);

// Applies a rigid transform to a shape given in its local frame.
Shape transform_shape(const Shape& shape, const RigidTransform& pose);

struct ObstacleVolume {
  std::uint32_t id = 0;
  std::string name;
  Shape shape;
  SemanticClass semantic = SemanticClass::Wall;
  bool dynamic = false;  // created by a spawner; destroyed on reset

  // Bounding sphere, kept in sync by refresh_bounds().
  Vec3 bound_center = Vec3::Zero();
  double bound_radius = 0.0;

  static ObstacleVolume make(std::uint32_t id, std::string name, Shape shape,
                             SemanticClass semantic, bool dynamic = false);
  void refresh_bounds();
  bool collidable() const { return semantic != SemanticClass::Ground; }
};

// Axis-aligned rectangle on the ground plane.
struct Rect {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  double area() const { return (max - min).prod(); }
  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  bool contains(const Rect& r) const { return contains(r.min) && contains(r.max); }
  Vec2 clamp(const Vec2& p) const { return p.cwiseMax(min).cwiseMin(max); }

  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class SpawnKind { Robot, Object, Npc };

struct SpawnArea {
  std::uint32_t id = 0;
  Rect region;
  double yaw_min_deg = -180.0;
  double yaw_max_deg = 180.0;
  SpawnKind kind = SpawnKind::Robot;
  std::uint32_t count = 0;  // objects / NPCs spawned here per reset
  double npc_speed = 0.0;   // m/s, NPC areas only
};

// Spawnable asset. The shape is expressed in the asset frame: origin on the
// ground, z up.
struct AssetEntry {
  std::string name;
  Shape shape;
  SemanticClass semantic = SemanticClass::Prop;
};

struct NpcState {
  std::uint32_t volume_id = 0;
  Vec2 waypoint = Vec2::Zero();
  double speed = 0.0;
  Rect allowed_region;
};

// Collision volume carried by the digital twin, in its body frame.
struct TwinVolume {
  Vec3 center_offset{0.0, 0.0, 0.2};
  Vec3 half_extents{0.5, 0.5, 0.2};
};

struct Scene {
  std::vector<ObstacleVolume> obstacles;  // sorted by id
  std::vector<NpcState> npcs;
  std::vector<SpawnArea> spawn_areas;
  std::vector<AssetEntry> object_assets;
  std::vector<AssetEntry> npc_assets;
  TwinVolume twin_volume;
  std::optional<Rect> bounds;
  std::uint64_t rng_seed = 0;
  Rng rng;

  const ObstacleVolume* find(std::uint32_t id) const;
  ObstacleVolume* find(std::uint32_t id);
  // Inserts keeping id order; throws Error(InvalidConfig) on a duplicate id.
  void add(ObstacleVolume volume);
};

inline constexpr int kPlacementAttempts = 100;
inline constexpr double kNpcArrivalRadius = 0.05;

struct ResetResult {
  Scene scene;
  RigidTransform spawn_pose;
};

// Destroys spawned volumes, samples a robot pose, then objects and NPCs, all
// by rejection sampling against the volumes placed so far. A pure function of
// (scene configuration, seed).
ResetResult reset_scene(const Scene& scene, std::uint64_t seed);

struct CollisionReport {
  bool collided = false;
  std::optional<std::uint32_t> other_id;

  friend bool operator==(const CollisionReport&, const CollisionReport&) = default;
};

OrientedBox twin_box(const TwinVolume& twin, const RigidTransform& pose);

bool volume_overlaps(const ObstacleVolume& volume, const OrientedBox& box);

// First overlapping collidable volume in id order. Ground volumes are visible
// to sensors but never collide.
CollisionReport check_collision(const Scene& scene, const RigidTransform& twin_pose);

Vec2 npc_position(const Scene& scene, const NpcState& npc);

// Moves every NPC toward its waypoint; on arrival samples a new one from the
// scene RNG. Throws Error(InvalidConfig) unless dt > 0.
Scene step_npcs(Scene scene, double dt);

}  // namespace viloop
