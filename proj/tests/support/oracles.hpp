// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used as test oracles. They deliberately avoid the
// library's own algorithms unless a test needs bit-exact agreement with a
// specific primitive (brute-force sensor scans), which is noted per function.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "viloop/frames.hpp"
#include "viloop/geometry.hpp"
#include "viloop/rlenv.hpp"
#include "viloop/sensors.hpp"
#include "viloop/world.hpp"

namespace oracle {

using viloop::Mat3;
using viloop::Vec2;
using viloop::Vec3;
using Mat4 = Eigen::Matrix4d;

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- random

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

// Uniform rotation (Shoemake's subgroup algorithm).
inline Mat3 random_rotation(std::mt19937_64& g) {
  const double u1 = uniform(g, 0, 1), u2 = uniform(g, 0, 1), u3 = uniform(g, 0, 1);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(2 * kPi * u3), a * std::sin(2 * kPi * u2),
                             a * std::cos(2 * kPi * u2), b * std::sin(2 * kPi * u3));
  return q.toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& g, double scale) {
  return {uniform(g, -scale, scale), uniform(g, -scale, scale), uniform(g, -scale, scale)};
}

inline Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

// ---------------------------------------------------------------- SE(3)

inline Mat4 hom(const Mat3& r, const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

inline Mat4 hom(const viloop::RigidTransform& x) { return hom(x.rotation(), x.translation()); }

// General LU inverse; ignores the rigid structure on purpose.
inline Mat4 inv(const Mat4& m) { return m.inverse(); }

inline double diff(const Mat4& a, const Mat4& b) {
  return (a - b).topRows<3>().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- boxes

inline std::array<Vec3, 8> corners(const viloop::OrientedBox& b) {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out[i] = b.center + b.rotation * s.cwiseProduct(b.half_extents);
  }
  return out;
}

inline bool inside(const viloop::OrientedBox& b, const Vec3& p) {
  const Vec3 l = b.rotation.transpose() * (p - b.center);
  return (l.cwiseAbs().array() <= b.half_extents.array()).all();
}

inline Vec3 closest_in_box(const viloop::OrientedBox& b, const Vec3& p) {
  const Vec3 l = b.rotation.transpose() * (p - b.center);
  return b.center + b.rotation * l.cwiseMax(-b.half_extents).cwiseMin(b.half_extents);
}

// Alternating projections between the two convex sets; converges to a
// closest pair. Returns the separation certified by projecting all corners
// on the final direction (0 when no separating gap is found).
inline double certified_gap(const viloop::OrientedBox& a, const viloop::OrientedBox& b) {
  Vec3 pa = a.center, pb = b.center;
  for (int it = 0; it < 20000; ++it) {
    const Vec3 nb = closest_in_box(b, pa);
    const Vec3 na = closest_in_box(a, nb);
    const double moved = (na - pa).norm() + (nb - pb).norm();
    pa = na;
    pb = nb;
    if (moved < 1e-14) break;
  }
  const Vec3 n = pb - pa;
  if (n.norm() < 1e-12) return 0.0;
  const Vec3 u = n.normalized();
  double a_max = -kInf, b_min = kInf;
  for (const Vec3& c : corners(a)) a_max = std::max(a_max, c.dot(u));
  for (const Vec3& c : corners(b)) b_min = std::min(b_min, c.dot(u));
  return std::max(0.0, b_min - a_max);
}

// Lattice of up to n^3 points inside `sample`, clipped to the region where
// `test` can contain them, checked for containment in `test`. Finding one is
// a certificate of overlap.
inline bool lattice_hit(const viloop::OrientedBox& sample, const viloop::OrientedBox& test,
                        int n) {
  // Extent of `test` in the local frame of `sample`.
  Vec3 lo = Vec3::Constant(kInf), hi = Vec3::Constant(-kInf);
  for (const Vec3& c : corners(test)) {
    const Vec3 l = sample.rotation.transpose() * (c - sample.center);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(l);
  }
  lo = lo.cwiseMax(-sample.half_extents);
  hi = hi.cwiseMin(sample.half_extents);
  if ((lo.array() > hi.array()).any()) return false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const Vec3 f((i + 0.5) / n, (j + 0.5) / n, (k + 0.5) / n);
        const Vec3 l = lo + (hi - lo).cwiseProduct(f);
        if (inside(test, sample.center + sample.rotation * l)) return true;
      }
    }
  }
  return false;
}

// Uniform random points inside `sample`, restricted to the part of its local
// bounding region that `test` can reach, checked for containment in `test`.
inline bool mc_hit(const viloop::OrientedBox& sample, const viloop::OrientedBox& test,
                   std::size_t n, std::mt19937_64& g) {
  Vec3 lo = Vec3::Constant(kInf), hi = Vec3::Constant(-kInf);
  for (const Vec3& c : corners(test)) {
    const Vec3 l = sample.rotation.transpose() * (c - sample.center);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(l);
  }
  lo = lo.cwiseMax(-sample.half_extents);
  hi = hi.cwiseMin(sample.half_extents);
  if ((lo.array() > hi.array()).any()) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 l(uniform(g, lo.x(), hi.x()), uniform(g, lo.y(), hi.y()), uniform(g, lo.z(), hi.z()));
    if (inside(test, sample.center + sample.rotation * l)) return true;
  }
  return false;
}

enum class PairTruth { Overlap, Separate, Marginal };

// Overlap is certified by a sample point common to both boxes shrunk by
// `margin`; separation by a corner-projection gap above `margin`.
inline PairTruth classify_pair(const viloop::OrientedBox& a, const viloop::OrientedBox& b,
                               double margin = 1e-3, int n = 100) {
  if (certified_gap(a, b) > margin) return PairTruth::Separate;
  auto shrink = [&](viloop::OrientedBox x) {
    x.half_extents -= Vec3::Constant(margin);
    return x;
  };
  const auto sa = shrink(a), sb = shrink(b);
  if (lattice_hit(sa, sb, n) || lattice_hit(sb, sa, n)) return PairTruth::Overlap;
  return PairTruth::Marginal;
}

// ---------------------------------------------------------------- rays

// Independent ray / box intersection through the six face planes.
inline std::optional<double> ray_box_planes(const Vec3& o, const Vec3& d,
                                            const viloop::OrientedBox& b) {
  double best = kInf;
  const bool start_inside = inside(b, o);
  for (int axis = 0; axis < 3; ++axis) {
    const Vec3 n = b.rotation.col(axis);
    for (double s : {-1.0, 1.0}) {
      const Vec3 p0 = b.center + s * b.half_extents[axis] * n;
      const double den = n.dot(d);
      if (std::abs(den) < 1e-300) continue;
      const double t = n.dot(p0 - o) / den;
      if (!(t > 0)) continue;
      const Vec3 hit = o + t * d;
      const Vec3 l = b.rotation.transpose() * (hit - b.center);
      bool on_face = true;
      for (int k = 0; k < 3; ++k) {
        if (k != axis && std::abs(l[k]) > b.half_extents[k] * (1 + 1e-12) + 1e-12) on_face = false;
      }
      if (on_face) best = start_inside ? std::min(best, t) : std::min(best, t);
    }
  }
  if (best == kInf) return std::nullopt;
  return best;
}

// Independent ray / triangle through the supporting plane and barycentrics.
inline std::optional<double> ray_triangle_plane(const Vec3& o, const Vec3& d,
                                                const viloop::Triangle& tri) {
  const Vec3 n = (tri.b - tri.a).cross(tri.c - tri.a);
  const double den = n.dot(d);
  if (std::abs(den) < 1e-14) return std::nullopt;
  const double t = n.dot(tri.a - o) / den;
  if (!(t > 0)) return std::nullopt;
  const Vec3 p = o + t * d;
  const double area = n.squaredNorm();
  const double l1 = (tri.c - tri.b).cross(p - tri.b).dot(n) / area;
  const double l2 = (tri.a - tri.c).cross(p - tri.c).dot(n) / area;
  const double l3 = 1 - l1 - l2;
  if (l1 < -1e-12 || l2 < -1e-12 || l3 < -1e-12) return std::nullopt;
  return t;
}

struct Hit {
  double t = kInf;
  const viloop::ObstacleVolume* volume = nullptr;
};

// All primitives, no culling, id order, strict improvement. Uses the library
// primitives so that results are comparable bit for bit.
inline Hit brute_nearest(const viloop::Scene& scene, const viloop::Ray& ray) {
  Hit best;
  for (const auto& v : scene.obstacles) {
    if (const auto* box = std::get_if<viloop::OrientedBox>(&v.shape)) {
      if (auto t = viloop::ray_box(ray, *box); t && *t < best.t) best = {*t, &v};
    } else {
      const auto& mesh = std::get<viloop::MeshShape>(v.shape);
      for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
        if (auto t = viloop::ray_triangle(ray, mesh.triangle(i)); t && *t < best.t) best = {*t, &v};
      }
    }
  }
  return best;
}

inline std::vector<double> brute_lidar(const viloop::Scene& scene, const viloop::RigidTransform& pose,
                                       const viloop::LidarConfig& cfg) {
  const auto sensor = viloop::compose(pose, cfg.mount);
  std::vector<double> out;
  for (std::size_t r = 0; r < cfg.rows(); ++r) {
    for (std::size_t c = 0; c < cfg.cols(); ++c) {
      const viloop::Ray ray{sensor.translation(), sensor.rotate(viloop::lidar_direction(cfg, r, c))};
      const Hit h = brute_nearest(scene, ray);
      out.push_back(h.t <= cfg.max_range ? h.t : cfg.miss_value());
    }
  }
  return out;
}

inline viloop::SemanticDepthImage brute_camera(const viloop::Scene& scene,
                                               const viloop::RigidTransform& pose,
                                               const viloop::CameraConfig& cfg) {
  const auto cam = viloop::compose(pose, cfg.mount);
  viloop::SemanticDepthImage img;
  img.width = cfg.width;
  img.height = cfg.height;
  const std::size_t n = static_cast<std::size_t>(cfg.width) * cfg.height;
  img.depth.assign(n, 0.0);
  img.valid.assign(n, 0);
  img.semantic.assign(n, viloop::SemanticClass::Background);
  for (int v = 0; v < cfg.height; ++v) {
    for (int u = 0; u < cfg.width; ++u) {
      const viloop::Ray ray{cam.translation(), cam.rotate(viloop::camera_direction(cfg, u, v))};
      const Hit h = brute_nearest(scene, ray);
      if (!h.volume || h.t * ray.direction.norm() > cfg.max_range) continue;
      const std::size_t i = img.index(u, v);
      img.depth[i] = h.t;
      img.valid[i] = 1;
      img.semantic[i] = h.volume->semantic;
    }
  }
  return img;
}

// ---------------------------------------------------------------- 2D

// Brute-force planar ray over every segment with the library primitive.
inline double brute_ray_2d(const std::vector<viloop::Segment2>& segs, const Vec2& o, double angle,
                           double max_range) {
  const Vec2 d(std::cos(angle), std::sin(angle));
  double best = max_range;
  for (const auto& s : segs) {
    if (auto t = viloop::ray_segment(o, d, s); t && *t < best) best = *t;
  }
  return std::clamp(best, 0.0, max_range);
}

// Independent planar ray / segment via Cramer's rule.
inline std::optional<double> ray_segment_cramer(const Vec2& o, const Vec2& d,
                                                const viloop::Segment2& s) {
  const Vec2 e = s.b - s.a;
  const double den = d.x() * (-e.y()) - d.y() * (-e.x());
  if (std::abs(den) < 1e-300) return std::nullopt;
  const Vec2 w = s.a - o;
  const double t = (w.x() * (-e.y()) - w.y() * (-e.x())) / den;
  const double u = (d.x() * w.y() - d.y() * w.x()) / den;
  if (t < 0 || u < -1e-12 || u > 1 + 1e-12) return std::nullopt;
  return t;
}

inline double point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double u = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
  return (a + u * e - p).norm();
}

// Distance between convex polygons (0 when they intersect), via edge SAT and
// vertex-to-edge distances.
inline double polygon_distance(const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
  auto separated = [](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Vec2 e = a[(i + 1) % a.size()] - a[i];
      const Vec2 n(-e.y(), e.x());
      double amin = kInf, amax = -kInf, bmin = kInf, bmax = -kInf;
      for (const auto& v : a) { amin = std::min(amin, n.dot(v)); amax = std::max(amax, n.dot(v)); }
      for (const auto& v : b) { bmin = std::min(bmin, n.dot(v)); bmax = std::max(bmax, n.dot(v)); }
      if (amax < bmin || bmax < amin) return true;
    }
    return false;
  };
  if (!separated(p, q) && !separated(q, p)) return 0.0;
  double best = kInf;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (const auto& v : q) best = std::min(best, point_segment(v, p[i], p[(i + 1) % p.size()]));
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (const auto& v : p) best = std::min(best, point_segment(v, q[i], q[(i + 1) % q.size()]));
  }
  return best;
}

// Square footprint (1 m side) corners, counter-clockwise.
inline std::vector<Vec2> square(double x, double y, double theta, double side = 1.0) {
  const Vec2 ax(std::cos(theta), std::sin(theta)), ay(-std::sin(theta), std::cos(theta));
  const Vec2 c(x, y);
  const double h = side / 2;
  return {c - h * ax - h * ay, c + h * ax - h * ay, c + h * ax + h * ay, c - h * ax + h * ay};
}

// Ground-plane footprint of an upright box.
inline std::vector<Vec2> footprint(const viloop::OrientedBox& b) {
  const Vec2 ax = b.rotation.col(0).head<2>(), ay = b.rotation.col(1).head<2>();
  const Vec2 c = b.center.head<2>();
  const double hx = b.half_extents.x(), hy = b.half_extents.y();
  return {c - hx * ax - hy * ay, c + hx * ax - hy * ay, c + hx * ax + hy * ay, c - hx * ax + hy * ay};
}

// Arclength of the closest centerline point, brute force over samples and
// segments.
inline double arclength_of(const viloop::Corridor& c, const Vec2& p) {
  double best = kInf, s = 0;
  for (std::size_t i = 0; i + 1 < c.centerline.size(); ++i) {
    const Vec2 a = c.centerline[i], e = c.centerline[i + 1] - a;
    const double u = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    const double d = (a + u * e - p).norm();
    if (d < best) {
      best = d;
      s = c.arclengths[i] + u * (c.arclengths[i + 1] - c.arclengths[i]);
    }
  }
  return s;
}

// ---------------------------------------------------------------- kinematics

// Classical RK4 on the unicycle ODE.
inline std::array<double, 3> rk4_unicycle(std::array<double, 3> s, double v, double w, double dt,
                                          int steps) {
  auto f = [&](const std::array<double, 3>& x) {
    return std::array<double, 3>{v * std::cos(x[2]), v * std::sin(x[2]), w};
  };
  for (int i = 0; i < steps; ++i) {
    const auto k1 = f(s);
    std::array<double, 3> t;
    for (int j = 0; j < 3; ++j) t[j] = s[j] + dt / 2 * k1[j];
    const auto k2 = f(t);
    for (int j = 0; j < 3; ++j) t[j] = s[j] + dt / 2 * k2[j];
    const auto k3 = f(t);
    for (int j = 0; j < 3; ++j) t[j] = s[j] + dt * k3[j];
    const auto k4 = f(t);
    for (int j = 0; j < 3; ++j) s[j] += dt / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
  }
  return s;
}

}  // namespace oracle
