// SPDX-License-Identifier: Apache-2.0
#include "viloop/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "viloop/error.hpp"
#include "viloop/kinematics.hpp"

namespace viloop {
namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;

bool in_sector(double angle, const SafetyConfig& cfg) {
  return std::abs(wrap_angle(angle)) <= cfg.sector_half_width_deg * kRadPerDeg + 1e-12;
}

}  // namespace

void SafetyConfig::validate() const {
  if (!(clear_threshold > stop_threshold && stop_threshold > 0.0)) {
    throw Error(Errc::InvalidConfig, "need clear_threshold > stop_threshold > 0");
  }
}

PlanarScan horizon_scan(const LidarScan& scan) {
  PlanarScan out;
  const auto row = scan.horizon_row();
  if (!row) throw Error(Errc::EmptyScan, "scan has no elevation-0 row");
  out.angles.reserve(scan.cols);
  out.ranges.reserve(scan.cols);
  for (std::size_t c = 0; c < scan.cols; ++c) {
    const double r = scan.at(*row, c);
    out.angles.push_back(scan.config.azimuth_deg(c) * kRadPerDeg);
    out.ranges.push_back(scan.is_miss(r) ? scan.config.max_range : r);
  }
  return out;
}

double forward_clearance(const PlanarScan& scan, const SafetyConfig& cfg) {
  if (scan.ranges.empty() || scan.ranges.size() != scan.angles.size()) {
    throw Error(Errc::EmptyScan, "scan has no rays");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (in_sector(scan.angles[i], cfg)) best = std::min(best, scan.ranges[i]);
  }
  if (!std::isfinite(best)) throw Error(Errc::EmptyScan, "no ray inside the forward sector");
  return best;
}

SafetyVerdict safety_check(const PlanarScan& scan, const SafetyConfig& cfg) {
  return forward_clearance(scan, cfg) < cfg.stop_threshold ? SafetyVerdict::MustStop
                                                           : SafetyVerdict::Clear;
}

SafetyVerdict safety_check(const LidarScan& scan, const SafetyConfig& cfg) {
  return safety_check(horizon_scan(scan), cfg);
}

RecoveryController::RecoveryController(SafetyConfig cfg, VelocityCommand pre_stop_command)
    : cfg_(cfg), pre_stop_(pre_stop_command) {
  cfg_.validate();
}

RecoveryOutput RecoveryController::step(const PlanarScan& scan) {
  RecoveryOutput out;
  if (done_) {
    out.command = pre_stop_;
    out.done = true;
    return out;
  }
  if (!started_) {
    started_ = true;
    out.emit.push_back(SimSignal::Pause);
    // Turn toward the side with more mean free space.
    double left = 0.0, right = 0.0;
    std::size_t nl = 0, nr = 0;
    for (std::size_t i = 0; i < scan.angles.size(); ++i) {
      const double a = wrap_angle(scan.angles[i]);
      if (a > 0.0 && a < std::numbers::pi) {
        left += scan.ranges[i];
        ++nl;
      } else if (a < 0.0) {
        right += scan.ranges[i];
        ++nr;
      }
    }
    const double mean_left = nl ? left / static_cast<double>(nl) : 0.0;
    const double mean_right = nr ? right / static_cast<double>(nr) : 0.0;
    direction_ = mean_right > mean_left ? -1 : 1;
  }
  if (forward_clearance(scan, cfg_) > cfg_.clear_threshold) {
    done_ = true;
    out.done = true;
    out.command = pre_stop_;
    out.emit.push_back(SimSignal::Resume);
    return out;
  }
  out.command = {0.0, direction_ * cfg_.recovery_w};
  return out;
}

VelocityCommand slowdown_filter(VelocityCommand cmd, bool pedestrian) {
  if (pedestrian) cmd.v = std::clamp(cmd.v, -kPedestrianSpeedCap, kPedestrianSpeedCap);
  return cmd;
}

}  // namespace viloop
