// SPDX-License-Identifier: Apache-2.0
//
// Unicycle robot driven by velocity commands; stands in for a physical robot
// when no hardware is available.
#pragma once

#include <cstdint>

#include "viloop/frames.hpp"

namespace viloop {

struct SaturationLimits {
  double v_max = 1.0;  // m/s
  double w_max = 0.5;  // rad/s

  void validate() const;
};

struct UnicycleState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v_cmd = 0.0;
  double w_cmd = 0.0;
  std::uint64_t timestep = 0;  // integrate() calls so far
  double time = 0.0;           // seconds

  friend bool operator==(const UnicycleState&, const UnicycleState&) = default;
};

inline constexpr double kMaxIntegrationStep = 0.1;
inline constexpr double kStraightLineRate = 1e-9;

// Saturates the command. Throws Error(RejectedCommand) on non-finite input.
UnicycleState apply_command(UnicycleState state, double v, double w,
                            const SaturationLimits& limits = {});

// Exact circular-arc update over dt in (0, 0.1]; theta wrapped to (-pi, pi].
// Throws Error(InvalidDt).
UnicycleState integrate(UnicycleState state, double dt);

double wrap_angle(double a);

PoseSample emit_pose(const UnicycleState& state);

}  // namespace viloop
