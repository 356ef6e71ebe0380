// SPDX-License-Identifier: Apache-2.0
//
// Randomized scenes shared by the sensor tests and the acceptance checks.
#pragma once

#include <random>
#include <string>

#include "support/oracles.hpp"
#include "viloop/world.hpp"

namespace fixtures {

using viloop::Mat3;
using viloop::Vec3;

inline viloop::ObstacleVolume box_volume(std::uint32_t id, const Vec3& c, const Vec3& h,
                                         viloop::SemanticClass cls = viloop::SemanticClass::Wall,
                                         const Mat3& r = Mat3::Identity()) {
  viloop::OrientedBox b;
  b.center = c;
  b.half_extents = h;
  b.rotation = r;
  return viloop::ObstacleVolume::make(id, "v" + std::to_string(id), b, cls);
}

// 3 to 10 rotated boxes of mixed classes kept away from the origin, plus one
// tetrahedral mesh.
inline viloop::Scene random_scene(std::mt19937_64& g) {
  viloop::Scene s;
  const int n = 3 + static_cast<int>(g() % 8);
  for (int i = 0; i < n; ++i) {
    Vec3 c = oracle::random_vec(g, 8.0);
    if (c.head<2>().norm() < 1.5) c.x() += 3.0;
    const Vec3 h(oracle::uniform(g, 0.1, 1.2), oracle::uniform(g, 0.1, 1.2),
                 oracle::uniform(g, 0.1, 1.2));
    s.add(box_volume(static_cast<std::uint32_t>(i + 1), c, h,
                     static_cast<viloop::SemanticClass>(1 + g() % 5), oracle::random_rotation(g)));
  }
  viloop::MeshShape m;
  const Vec3 base = oracle::random_vec(g, 6.0);
  m.vertices = {base, base + oracle::random_vec(g, 2), base + oracle::random_vec(g, 2),
                base + oracle::random_vec(g, 2)};
  m.indices = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
  s.add(viloop::ObstacleVolume::make(100, "tet", m, viloop::SemanticClass::Prop));
  return s;
}

}  // namespace fixtures
