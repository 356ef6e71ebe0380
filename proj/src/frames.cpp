// SPDX-License-Identifier: Apache-2.0
#include "viloop/frames.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "viloop/error.hpp"

namespace viloop {
namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kGimbalTolerance = 1e-6;

}  // namespace

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

RigidTransform RigidTransform::from_parts(const Mat3& rotation, const Vec3& translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(Errc::InvalidTransform, "non-finite entries");
  }
  const double err = orthonormality_error(rotation);
  if (err > kRejectThreshold) {
    throw Error(Errc::InvalidTransform, "rotation is not orthonormal");
  }
  Mat3 r = rotation;
  if (err > kReorthonormalizeThreshold) {
    // Polar projection: nearest orthogonal matrix in the Frobenius norm.
    Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
  }
  if (r.determinant() < 0.0) {
    throw Error(Errc::InvalidTransform, "rotation is a reflection");
  }
  return RigidTransform(r, translation);
}

RigidTransform RigidTransform::from_quaternion(const Quaternion& q, const Vec3& translation) {
  Eigen::Quaterniond eq(q.w, q.x, q.y, q.z);
  const double n = eq.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kRejectThreshold) {
    throw Error(Errc::InvalidTransform, "quaternion is not unit length");
  }
  if (!translation.allFinite()) {
    throw Error(Errc::InvalidTransform, "non-finite translation");
  }
  eq.normalize();
  return RigidTransform(eq.toRotationMatrix(), translation);
}

RigidTransform RigidTransform::from_rpy(double roll, double pitch, double yaw,
                                        const Vec3& translation) {
  const Mat3 r = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                  Eigen::AngleAxisd(roll, Vec3::UnitX()))
                     .toRotationMatrix();
  return RigidTransform(r, translation);
}

Quaternion RigidTransform::quaternion() const {
  Eigen::Quaterniond q(rotation_);
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return {q.x(), q.y(), q.z(), q.w()};
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double RigidTransform::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_);
}

RigidTransform inverse(const RigidTransform& a) {
  const Mat3 rt = a.rotation_.transpose();
  return RigidTransform(rt, -(rt * a.translation_));
}

RigidTransform initial_offset(const RigidTransform& digital0, const RigidTransform& physical0) {
  return compose(digital0, inverse(physical0));
}

RigidTransform apply_offset(const RigidTransform& offset, const RigidTransform& physical_k) {
  return compose(offset, physical_k);
}

RigidTransform resume_offset(const RigidTransform& digital_at_pause,
                             const RigidTransform& physical_at_resume) {
  return compose(digital_at_pause, inverse(physical_at_resume));
}

double max_abs_difference(const RigidTransform& a, const RigidTransform& b) {
  return std::max((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(),
                  (a.translation() - b.translation()).cwiseAbs().maxCoeff());
}

EulerAngles euler_zyx(const Mat3& r) {
  EulerAngles e;
  const double s = std::clamp(-r(2, 0), -1.0, 1.0);
  e.pitch = std::asin(s);
  if (std::abs(std::abs(e.pitch) - std::numbers::pi / 2.0) < kGimbalTolerance) {
    e.roll = 0.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    e.yaw = std::atan2(r(1, 0), r(0, 0));
    e.roll = std::atan2(r(2, 1), r(2, 2));
  }
  return e;
}

EnginePose to_engine(const RigidTransform& p) {
  const EulerAngles e = euler_zyx(p.rotation());
  EnginePose out;
  out.position_cm = p.translation() * 100.0;
  out.roll_deg = e.roll * kDegPerRad;
  out.pitch_deg = -e.pitch * kDegPerRad;
  out.yaw_deg = -e.yaw * kDegPerRad;
  return out;
}

RigidTransform from_engine(const EnginePose& e) {
  return RigidTransform::from_rpy(e.roll_deg / kDegPerRad, -e.pitch_deg / kDegPerRad,
                                  -e.yaw_deg / kDegPerRad, e.position_cm / 100.0);
}

}  // namespace viloop
