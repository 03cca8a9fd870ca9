#pragma once

#include <vector>

#include "flangecal/cloud.hpp"
#include "flangecal/se3.hpp"

namespace flangecal {

struct IcpParams {
  int max_iterations = 50;
  double correspondence_max_dist = 0.010;
  double convergence_eps = 1e-6;
  double failure_rms = 0.005;
  /// Fraction of source points that must find a correspondence at every iteration.
  double min_overlap_fraction = 0.3;
};

struct IcpResult {
  RigidTransform transform;  // source -> target
  double rms = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> rms_history;
};

/// Point-to-point ICP with step extrapolation when successive updates line up. Converged when
/// the rms change and the pose increment both fall below convergence_eps. Throws RegistrationFailed on too few correspondences, insufficient
/// overlap or a final rms above failure_rms.
IcpResult icp_register(const PointCloud& source, const PointCloud& target, const RigidTransform& initial,
                       const IcpParams& params);

/// Residual transform between the scanner frame and the frame implied by an estimate.
/// A failed registration carries no pose error and costs +inf.
class IcpErrorMetric {
 public:
  static IcpErrorMetric failure() { return IcpErrorMetric(); }
  static IcpErrorMetric from_delta(const RigidTransform& delta);

  bool failed() const { return failed_; }
  const RigidTransform& delta() const;
  const PoseError& pose_error() const;

 private:
  IcpErrorMetric() = default;
  RigidTransform delta_;
  PoseError pose_error_;
  bool failed_ = true;
};

/// Predicts the verification cloud through the estimate (H_hat^-1 * H_v * P_true), registers the
/// measured cloud onto it starting from the centroid offset, and reports the registration.
IcpErrorMetric calibration_error(const RigidTransform& H_hat, const RigidTransform& robot_pose_v,
                                 const PointCloud& P_true_flan, const PointCloud& P_v_cam, const IcpParams& params);

/// Noise-free shortcut: H_hat^-1 * H_true, both mapping camera into base.
IcpErrorMetric simulation_error(const RigidTransform& H_hat, const RigidTransform& H_true);

struct CostKind {
  enum Kind { TranslationNorm, CombinedWithRadius, XyOnly };
  Kind kind = TranslationNorm;
  double radius_mm = 0.0;

  static CostKind translation_norm() { return {TranslationNorm, 0.0}; }
  static CostKind combined(double r_mm) { return {CombinedWithRadius, r_mm}; }
  static CostKind xy_only() { return {XyOnly, 0.0}; }
};

/// Scalar cost in mm; +inf for a failed metric.
double cost(const IcpErrorMetric& metric, const CostKind& kind);

}  // namespace flangecal
