// SPDX-License-Identifier: Apache-2.0
#include <random>

#include "acceptance/criteria.hpp"
#include "support/oracles.hpp"
#include "viloop/kinematics.hpp"
#include "viloop/orchestrator.hpp"
#include "viloop/safety.hpp"
#include "viloop/scenario.hpp"

namespace acceptance {

using namespace viloop;

namespace {

constexpr int kSteps = 10'000;
constexpr double kScanPeriod = 0.1;  // 10 Hz
constexpr double kCruiseSpeed = 1.0;

}  // namespace

// Closed loop in a walled room: a wandering robot at 1 m/s whose only
// protection is the LiDAR stop and the turn-until-clear recovery. The twin
// follows the robot one to one, so the twin's scans are the robot's scans.
Verdict safety(const Context& ctx) {
  Scenario room = load_scenario(ctx.scenario_dir / "empty_room.json");
  room.sensors.camera_enabled = false;
  room.sensors.lidar.v_fov_deg = 2.0;  // three rows around the horizon
  Session session(room.scene, room.sensors, stepping_clock(1000));
  session.on_reset(3);

  std::vector<std::vector<Vec2>> walls;
  for (const auto& v : room.scene.obstacles) {
    if (v.collidable()) walls.push_back(oracle::footprint(std::get<OrientedBox>(v.shape)));
  }
  const double side = 2.0 * room.scene.twin_volume.half_extents.x();

  const SafetyConfig cfg;  // stop at 1.5 m
  std::mt19937_64 g(0x5eed0006);
  UnicycleState robot;
  VelocityCommand wander{kCruiseSpeed, 0.0};
  int hold = 0;
  std::optional<RecoveryController> recovery;
  int stops = 0, resumes = 0, recovery_steps = 0;
  double min_distance = oracle::kInf;
  Check c;

  for (int k = 0; k < kSteps; ++k) {
    if (k > 0) robot = integrate(apply_command(robot, wander.v, wander.w, room.robot.limits),
                                 kScanPeriod);
    const TickResult tick = session.on_pose(emit_pose(robot), {});
    c.expect(!tick.collision.collided, "step {}: twin collided with {}", k,
             tick.collision.other_id.value_or(0));
    if (tick.collision.collided) break;

    const RigidTransform& twin = session.state().digital_pose;
    const auto square = oracle::square(twin.translation().x(), twin.translation().y(), twin.yaw(),
                                       side);
    for (const auto& w : walls) min_distance = std::min(min_distance, oracle::polygon_distance(square, w));

    const PlanarScan scan = horizon_scan(*tick.lidar);
    if (!recovery && safety_check(scan, cfg) == SafetyVerdict::MustStop) {
      recovery.emplace(cfg, wander);
      ++stops;
    }
    if (recovery) {
      const RecoveryOutput out = recovery->step(scan);
      ++recovery_steps;
      for (SimSignal s : out.emit) resumes += s == SimSignal::Resume;
      wander = out.command;
      if (out.done) recovery.reset();
      continue;
    }
    if (--hold <= 0) {
      wander = {kCruiseSpeed, oracle::uniform(g, -0.5, 0.5)};
      hold = 10 + static_cast<int>(g() % 20);
    }
  }
  c.expect(min_distance > 0.0, "minimum twin-obstacle distance {}", min_distance);
  c.expect(stops > 10, "only {} safety stops; the loop did not exercise the walls", stops);
  return verdict(c, fmt::format("{} steps at {} m/s, 10 Hz scans: {} stops, {} resumes, "
                                "{} recovery steps, min distance {:.3f} m",
                                kSteps, kCruiseSpeed, stops, resumes, recovery_steps,
                                min_distance));
}

}  // namespace acceptance
