// SPDX-License-Identifier: Apache-2.0
//
// Rigid-transform algebra used to drive the digital twin from the physical
// robot's odometry.
//
// Frames: W is the shared world frame, P the body frame of the physical robot,
// D the body frame of the digital twin. A transform T maps body coordinates
// into world coordinates: p_world = R * p_body + t.
//
// At anchoring time (reset, or resume after a pause) the offset
//
//     offset = T_D(anchor) * inverse(T_P(anchor))
//
// is fixed, and every later physical pose is mapped as T_D(k) = offset * T_P(k).
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>

namespace viloop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Wire order is (x, y, z, w).
struct Quaternion {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
};

// Entry-wise ||R^T R - I||_inf above which incoming rotations are projected
// back onto SO(3), and above which they are rejected outright.
inline constexpr double kReorthonormalizeThreshold = 1e-6;
inline constexpr double kRejectThreshold = 1e-2;

class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  // Validates `rotation`: small drift is repaired by polar projection, large
  // drift or a reflection throws Error(InvalidTransform).
  static RigidTransform from_parts(const Mat3& rotation, const Vec3& translation);
  // Normalizes q; throws when |q| is farther than kRejectThreshold from 1.
  static RigidTransform from_quaternion(const Quaternion& q, const Vec3& translation);
  // R = Rz(yaw) * Ry(pitch) * Rx(roll), angles in radians.
  static RigidTransform from_rpy(double roll, double pitch, double yaw,
                                 const Vec3& translation = Vec3::Zero());
  static RigidTransform from_yaw(double yaw, const Vec3& translation = Vec3::Zero()) {
    return from_rpy(0.0, 0.0, yaw, translation);
  }
  static RigidTransform from_translation(const Vec3& translation) {
    return RigidTransform(Mat3::Identity(), translation);
  }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Quaternion quaternion() const;
  Mat4 matrix() const;

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  // Heading of the body x axis projected on the ground plane.
  double yaw() const;

  friend bool operator==(const RigidTransform& a, const RigidTransform& b) {
    return a.rotation_ == b.rotation_ && a.translation_ == b.translation_;
  }

 private:
  RigidTransform(const Mat3& r, const Vec3& t) : rotation_(r), translation_(t) {}

  friend RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
  friend RigidTransform inverse(const RigidTransform& a);

  Mat3 rotation_;
  Vec3 translation_;
};

// Homogeneous product a * b.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform inverse(const RigidTransform& a);

RigidTransform initial_offset(const RigidTransform& digital0, const RigidTransform& physical0);
RigidTransform apply_offset(const RigidTransform& offset, const RigidTransform& physical_k);
RigidTransform resume_offset(const RigidTransform& digital_at_pause,
                             const RigidTransform& physical_at_resume);

// Largest absolute entry-wise difference between the 3x4 blocks of a and b.
double max_abs_difference(const RigidTransform& a, const RigidTransform& b);

// ||R^T R - I||_inf
double orthonormality_error(const Mat3& r);

struct PoseSample {
  RigidTransform transform;
  std::uint64_t timestep = 0;
  double stamp = 0.0;  // seconds since session start
};

// Right-handed Z-Y-X angles in radians.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

// Extracts Z-Y-X angles. Pitch comes from asin and lies in [-pi/2, pi/2];
// yaw and roll use atan2. When |pitch| is within 1e-6 rad of 90 degrees roll is
// not observable; it is reported as 0 and the whole heading goes into yaw.
EulerAngles euler_zyx(const Mat3& r);

// Pose in the rendering engine's convention: centimeters, degrees, with pitch
// and yaw sign-flipped for its left-handed frame.
struct EnginePose {
  Vec3 position_cm = Vec3::Zero();
  double roll_deg = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
};

EnginePose to_engine(const RigidTransform& p);
RigidTransform from_engine(const EnginePose& e);

}  // namespace viloop
