#pragma once

#include <Eigen/Dense>

namespace flangecal {

/// Roll about x, pitch about y, yaw about z (radians). Composition is fixed-axis
/// XYZ: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct RpyAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Rigid-body pose. Rotation is kept as an orthonormal matrix, translation in meters.
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }
  static RigidTransform from_rpy(const RpyAngles& rpy, const Eigen::Vector3d& t);

  /// Throws InvalidTransform unless the block is a proper rotation and the last row is (0,0,0,1).
  static RigidTransform from_matrix(const Eigen::Matrix4d& m, double tol = 1e-9);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  RigidTransform inverse() const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  RigidTransform operator*(const RigidTransform& other) const;

  bool is_valid(double tol = 1e-9) const;

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
Eigen::Vector3d transform_point(const RigidTransform& t, const Eigen::Vector3d& p);

Eigen::Matrix3d rot_x(double angle);
Eigen::Matrix3d rot_y(double angle);
Eigen::Matrix3d rot_z(double angle);

Eigen::Matrix3d rotation_from_rpy(const RpyAngles& rpy);

/// Angles land in (-pi, pi]. Near gimbal lock (|pitch| within 1e-6 of pi/2) roll is set to 0
/// and the whole in-plane rotation is attributed to yaw.
RpyAngles rpy_from_rotation(const Eigen::Matrix3d& m);
bool is_gimbal_locked(const Eigen::Matrix3d& m);

/// Maps an angle into (-pi, pi].
double wrap_angle(double a);

/// Reporting-unit decomposition of a relative transform: millimeters and degrees.
struct PoseError {
  Eigen::Vector3d delta_t_mm = Eigen::Vector3d::Zero();
  RpyAngles delta_rpy_deg;

  /// (x, y, z, roll, pitch, yaw) in mm / deg.
  Eigen::Matrix<double, 6, 1> as_vector() const;
};

PoseError pose_error(const RigidTransform& t);

/// Geodesic rotation angle of R (radians).
double rotation_angle(const Eigen::Matrix3d& r);

}  // namespace flangecal
