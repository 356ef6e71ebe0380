// SPDX-License-Identifier: Apache-2.0
#include "viloop/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "viloop/error.hpp"

namespace viloop {

void SaturationLimits::validate() const {
  if (!(v_max > 0.0 && w_max > 0.0)) {
    throw Error(Errc::InvalidConfig, "saturation limits must be positive");
  }
}

UnicycleState apply_command(UnicycleState state, double v, double w,
                            const SaturationLimits& limits) {
  if (!std::isfinite(v) || !std::isfinite(w)) {
    throw Error(Errc::RejectedCommand, "velocity command must be finite");
  }
  state.v_cmd = std::clamp(v, -limits.v_max, limits.v_max);
  state.w_cmd = std::clamp(w, -limits.w_max, limits.w_max);
  return state;
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

UnicycleState integrate(UnicycleState s, double dt) {
  if (!(dt > 0.0 && dt <= kMaxIntegrationStep)) {
    throw Error(Errc::InvalidDt, "dt must lie in (0, 0.1]");
  }
  const double v = s.v_cmd;
  const double w = s.w_cmd;
  if (std::abs(w) < kStraightLineRate) {
    s.x += v * std::cos(s.theta) * dt;
    s.y += v * std::sin(s.theta) * dt;
  } else {
    const double next = s.theta + w * dt;
    s.x += (v / w) * (std::sin(next) - std::sin(s.theta));
    s.y -= (v / w) * (std::cos(next) - std::cos(s.theta));
  }
  s.theta = wrap_angle(s.theta + w * dt);
  s.timestep += 1;
  s.time += dt;
  return s;
}

PoseSample emit_pose(const UnicycleState& state) {
  PoseSample sample;
  sample.transform = RigidTransform::from_yaw(state.theta, Vec3(state.x, state.y, 0.0));
  sample.timestep = state.timestep;
  sample.stamp = state.time;
  return sample;
}

}  // namespace viloop
