// SPDX-License-Identifier: Apache-2.0
//
// Intersection primitives shared by the 3D world, the synthetic sensors and
// the 2D training environment.
#pragma once

#include <Eigen/Core>
#include <optional>

#include "viloop/frames.hpp"

namespace viloop {

using Vec2 = Eigen::Vector2d;

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Mat3 rotation = Mat3::Identity();  // box axes as columns
};

struct Triangle {
  Vec3 a, b, c;
};

// `direction` need not be unit length; hit parameters are in its units.
struct Ray {
  Vec3 origin;
  Vec3 direction;
};

double bounding_radius(const OrientedBox& box);
bool contains(const OrientedBox& box, const Vec3& p);

// Slab test in box-local coordinates. Returns the entry parameter when it is
// positive, the exit parameter when the origin is inside, nothing otherwise.
std::optional<double> slab_hit(const Vec3& local_origin, const Vec3& local_direction,
                               const Vec3& half_extents);
std::optional<double> ray_box(const Ray& ray, const OrientedBox& box);

// Two-sided Moller-Trumbore; returns t > 0.
std::optional<double> ray_triangle(const Ray& ray, const Triangle& tri);

// Conservative ray / sphere rejection: false only when the ray provably misses.
bool ray_may_hit_sphere(const Ray& ray, const Vec3& center, double radius);

// Separating-axis tests. Touching counts as overlap.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);
bool box_triangle_overlap(const OrientedBox& box, const Triangle& tri);

// 2D helpers (ground plane).
struct Segment2 {
  Vec2 a, b;
};

// Closed-segment intersection using exact orientation signs.
bool segments_intersect(const Segment2& s, const Segment2& t);

// Parameter t >= 0 along `direction` where the ray meets the closed segment.
std::optional<double> ray_segment(const Vec2& origin, const Vec2& direction, const Segment2& seg);

double point_segment_distance(const Vec2& p, const Segment2& seg);
double segment_distance(const Segment2& s, const Segment2& t);

}  // namespace viloop
