// SPDX-License-Identifier: Apache-2.0
//
// Physical-side protection: LiDAR safety stop, the turn-until-clear recovery
// controller with its pause/resume choreography, and the pedestrian slowdown.
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "viloop/sensors.hpp"

namespace viloop {

struct SafetyConfig {
  double stop_threshold = 1.5;   // m
  double clear_threshold = 2.5;  // m
  double recovery_w = 0.5;       // rad/s
  double sector_half_width_deg = 60.0;

  void validate() const;
};

// A planar range scan: angle (radians, counter-clockwise, 0 = forward) and
// range per ray.
struct PlanarScan {
  std::vector<double> angles;
  std::vector<double> ranges;
};

// Horizon row of a 3D scan, misses mapped to max_range.
PlanarScan horizon_scan(const LidarScan& scan);

enum class SafetyVerdict { Clear, MustStop };

// Minimum range over rays within the forward sector. Throws Error(EmptyScan)
// when the scan is empty or has no ray in the sector.
double forward_clearance(const PlanarScan& scan, const SafetyConfig& cfg);

SafetyVerdict safety_check(const PlanarScan& scan, const SafetyConfig& cfg = {});
SafetyVerdict safety_check(const LidarScan& scan, const SafetyConfig& cfg = {});

struct VelocityCommand {
  double v = 0.0;
  double w = 0.0;

  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

enum class SimSignal { Pause, Resume };

struct RecoveryOutput {
  VelocityCommand command;
  bool done = false;
  std::vector<SimSignal> emit;
};

// One stop episode. The first step emits Pause; the step that first sees
// forward clearance above clear_threshold replays the command that was active
// before the stop and emits Resume. A scan stream that never clears keeps the
// controller turning forever: timeouts belong to the caller.
class RecoveryController {
 public:
  RecoveryController(SafetyConfig cfg, VelocityCommand pre_stop_command);

  RecoveryOutput step(const PlanarScan& scan);

  bool done() const { return done_; }
  // +1 turns left (counter-clockwise), -1 right; fixed on the first step.
  int turn_direction() const { return direction_; }

 private:
  SafetyConfig cfg_;
  VelocityCommand pre_stop_;
  bool started_ = false;
  bool done_ = false;
  int direction_ = 1;
};

// Caps |v| at 0.5 m/s while a pedestrian is visible.
inline constexpr double kPedestrianSpeedCap = 0.5;
VelocityCommand slowdown_filter(VelocityCommand cmd, bool pedestrian);

}  // namespace viloop
