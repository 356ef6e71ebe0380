// SPDX-License-Identifier: Apache-2.0
#include "viloop/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace viloop {
namespace {

constexpr double kParallelEpsilon = 1e-12;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = cross2(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

// Projection interval test of a triangle on `axis` against a box at the
// origin with half extents h (Akenine-Moller).
bool separated_on(const Vec3& axis, const std::array<Vec3, 3>& v, const Vec3& h) {
  if (axis.squaredNorm() < kParallelEpsilon) return false;
  const double p0 = axis.dot(v[0]);
  const double p1 = axis.dot(v[1]);
  const double p2 = axis.dot(v[2]);
  const double r = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y()) + h.z() * std::abs(axis.z());
  const double lo = std::min({p0, p1, p2});
  const double hi = std::max({p0, p1, p2});
  return lo > r || hi < -r;
}

}  // namespace

double bounding_radius(const OrientedBox& box) { return box.half_extents.norm(); }

bool contains(const OrientedBox& box, const Vec3& p) {
  const Vec3 local = box.rotation.transpose() * (p - box.center);
  return (local.cwiseAbs().array() <= box.half_extents.array()).all();
}

std::optional<double> slab_hit(const Vec3& o, const Vec3& d, const Vec3& h) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (d[i] == 0.0) {
      if (o[i] < -h[i] || o[i] > h[i]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d[i];
    double t1 = (-h[i] - o[i]) * inv;
    double t2 = (h[i] - o[i]) * inv;
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > 0.0) return t_near;
  if (t_far > 0.0) return t_far;
  return std::nullopt;
}

std::optional<double> ray_box(const Ray& ray, const OrientedBox& box) {
  const Mat3 rt = box.rotation.transpose();
  const Vec3 o = rt * (ray.origin - box.center);
  const Vec3 d = rt * ray.direction;
  return slab_hit(o, d, box.half_extents);
}

std::optional<double> ray_triangle(const Ray& ray, const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 p = ray.direction.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < kParallelEpsilon) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri.a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = ray.direction.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t > 0.0) return t;
  return std::nullopt;
}

bool ray_may_hit_sphere(const Ray& ray, const Vec3& center, double radius) {
  const Vec3 oc = center - ray.origin;
  const double dd = ray.direction.squaredNorm();
  const double r = radius * (1.0 + 1e-9) + 1e-9;
  if (oc.squaredNorm() <= r * r) return true;
  const double proj = oc.dot(ray.direction);
  if (proj <= 0.0) return false;
  const double perp2 = oc.squaredNorm() - proj * proj / dd;
  return perp2 <= r * r;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  // Gottschalk's 15-axis test in a's frame.
  const Mat3 rot = a.rotation.transpose() * b.rotation;
  const Vec3 t = a.rotation.transpose() * (b.center - a.center);
  Mat3 abs_rot = rot.cwiseAbs();
  abs_rot.array() += kParallelEpsilon;
  const Vec3& ea = a.half_extents;
  const Vec3& eb = b.half_extents;

  for (int i = 0; i < 3; ++i) {
    const double ra = ea[i];
    const double rb = eb.dot(abs_rot.row(i));
    if (std::abs(t[i]) > ra + rb) return false;
  }
  for (int j = 0; j < 3; ++j) {
    const double ra = ea.dot(abs_rot.col(j));
    const double rb = eb[j];
    if (std::abs(t.dot(rot.col(j))) > ra + rb) return false;
  }
  for (int i = 0; i < 3; ++i) {
    const int i1 = (i + 1) % 3;
    const int i2 = (i + 2) % 3;
    for (int j = 0; j < 3; ++j) {
      const int j1 = (j + 1) % 3;
      const int j2 = (j + 2) % 3;
      const double ra = ea[i1] * abs_rot(i2, j) + ea[i2] * abs_rot(i1, j);
      const double rb = eb[j1] * abs_rot(i, j2) + eb[j2] * abs_rot(i, j1);
      const double dist = std::abs(t[i2] * rot(i1, j) - t[i1] * rot(i2, j));
      if (dist > ra + rb) return false;
    }
  }
  return true;
}

bool box_triangle_overlap(const OrientedBox& box, const Triangle& tri) {
  const Mat3 rt = box.rotation.transpose();
  const std::array<Vec3, 3> v{rt * (tri.a - box.center), rt * (tri.b - box.center),
                              rt * (tri.c - box.center)};
  const Vec3& h = box.half_extents;
  const std::array<Vec3, 3> edges{v[1] - v[0], v[2] - v[1], v[0] - v[2]};

  for (int i = 0; i < 3; ++i) {
    if (separated_on(Vec3::Unit(i), v, h)) return false;
  }
  if (separated_on(edges[0].cross(edges[1]), v, h)) return false;
  for (int i = 0; i < 3; ++i) {
    for (const Vec3& e : edges) {
      if (separated_on(Vec3::Unit(i).cross(e), v, h)) return false;
    }
  }
  return true;
}

bool segments_intersect(const Segment2& s, const Segment2& t) {
  const int o1 = orientation(s.a, s.b, t.a);
  const int o2 = orientation(s.a, s.b, t.b);
  const int o3 = orientation(t.a, t.b, s.a);
  const int o4 = orientation(t.a, t.b, s.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(s.a, s.b, t.a)) return true;
  if (o2 == 0 && on_segment(s.a, s.b, t.b)) return true;
  if (o3 == 0 && on_segment(t.a, t.b, s.a)) return true;
  if (o4 == 0 && on_segment(t.a, t.b, s.b)) return true;
  return false;
}

std::optional<double> ray_segment(const Vec2& origin, const Vec2& direction, const Segment2& seg) {
  const Vec2 e = seg.b - seg.a;
  const double denom = cross2(direction, e);
  const Vec2 w = seg.a - origin;
  if (std::abs(denom) < kParallelEpsilon) {
    // Parallel: only a collinear segment can be hit; take its nearest endpoint ahead.
    if (std::abs(cross2(w, direction)) > kParallelEpsilon) return std::nullopt;
    const double dd = direction.squaredNorm();
    const double ta = w.dot(direction) / dd;
    const double tb = (seg.b - origin).dot(direction) / dd;
    const double lo = std::min(ta, tb);
    const double hi = std::max(ta, tb);
    if (hi < 0.0) return std::nullopt;
    return std::max(lo, 0.0);
  }
  const double t = cross2(w, e) / denom;
  const double u = cross2(w, direction) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

double point_segment_distance(const Vec2& p, const Segment2& seg) {
  const Vec2 e = seg.b - seg.a;
  const double len2 = e.squaredNorm();
  double u = len2 > 0.0 ? (p - seg.a).dot(e) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return (seg.a + u * e - p).norm();
}

double segment_distance(const Segment2& s, const Segment2& t) {
  if (segments_intersect(s, t)) return 0.0;
  return std::min({point_segment_distance(s.a, t), point_segment_distance(s.b, t),
                   point_segment_distance(t.a, s), point_segment_distance(t.b, s)});
}

}  // namespace viloop
