#include "flangecal/se3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flangecal/errors.hpp"

namespace flangecal {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kGimbalTol = 1e-6;
}  // namespace

RigidTransform RigidTransform::from_rpy(const RpyAngles& rpy, const Eigen::Vector3d& t) {
  return {rotation_from_rpy(rpy), t};
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m, double tol) {
  if (!m.allFinite()) throw InvalidTransform("matrix has non-finite entries");
  const Eigen::RowVector4d last = m.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tol)
    throw InvalidTransform("last row must be (0,0,0,1)");
  RigidTransform t(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
  if (!t.is_valid(tol)) throw InvalidTransform("rotation block is not a proper rotation");
  return t;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  const double ortho = (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(rotation_.determinant() - 1.0) < tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
RigidTransform invert(const RigidTransform& t) { return t.inverse(); }
Eigen::Vector3d transform_point(const RigidTransform& t, const Eigen::Vector3d& p) { return t * p; }

Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Eigen::Matrix3d rotation_from_rpy(const RpyAngles& rpy) {
  return rot_z(rpy.yaw) * rot_y(rpy.pitch) * rot_x(rpy.roll);
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

bool is_gimbal_locked(const Eigen::Matrix3d& m) {
  const double s = std::clamp(-m(2, 0), -1.0, 1.0);
  return std::abs(std::abs(std::asin(s)) - kPi / 2) < kGimbalTol;
}

RpyAngles rpy_from_rotation(const Eigen::Matrix3d& m) {
  RpyAngles out;
  const double s = std::clamp(-m(2, 0), -1.0, 1.0);
  out.pitch = std::asin(s);
  if (std::abs(std::abs(out.pitch) - kPi / 2) < kGimbalTol) {
    // Only the combined in-plane angle is observable; attribute it to yaw.
    out.roll = 0.0;
    out.yaw = std::atan2(-m(0, 1), m(1, 1));
  } else {
    out.roll = std::atan2(m(2, 1), m(2, 2));
    out.yaw = std::atan2(m(1, 0), m(0, 0));
  }
  out.roll = wrap_angle(out.roll);
  out.pitch = wrap_angle(out.pitch);
  out.yaw = wrap_angle(out.yaw);
  return out;
}

Eigen::Matrix<double, 6, 1> PoseError::as_vector() const {
  Eigen::Matrix<double, 6, 1> v;
  v << delta_t_mm, delta_rpy_deg.roll, delta_rpy_deg.pitch, delta_rpy_deg.yaw;
  return v;
}

PoseError pose_error(const RigidTransform& t) {
  if (!t.is_valid(1e-6)) throw InvalidTransform("pose_error needs a valid transform");
  PoseError e;
  e.delta_t_mm = t.translation() * 1000.0;
  const RpyAngles r = rpy_from_rotation(t.rotation());
  const double k = 180.0 / kPi;
  e.delta_rpy_deg = {r.roll * k, r.pitch * k, r.yaw * k};
  return e;
}

double rotation_angle(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace flangecal
