#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flangecal/se3.hpp"

namespace flangecal {

/// One calibration observation: the TCP seen by the scanner and reported by the robot.
struct SamplePair {
  Eigen::Vector3d p_cam = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_base = Eigen::Vector3d::Zero();
  RigidTransform robot_pose;  // flange in base
  std::optional<std::string> cloud_ref;
};

struct FitResult {
  RigidTransform transform;  // camera -> base
  double scale = 1.0;
  double residual_rms = 0.0;
};

/// Least-squares transform mapping camera points onto base points via SVD of the cross
/// covariance, with reflection guard and optional similarity scale. Throws
/// DegenerateConfiguration for fewer than 4 pairs or (near) coplanar base points.
FitResult fit_rigid(const std::vector<SamplePair>& pairs, bool with_scale = false);

/// Same estimator on raw correspondences src -> dst. min_points is 3 for registration use.
FitResult fit_points(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
                     bool with_scale = false, std::size_t min_points = 3, bool check_coplanar = false);

double residual_rms(const std::vector<SamplePair>& pairs, const FitResult& fit);

}  // namespace flangecal
