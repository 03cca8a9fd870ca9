#include "flangecal/icp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "flangecal/errors.hpp"
#include "flangecal/kdtree.hpp"
#include "flangecal/rigid_fit.hpp"

namespace flangecal {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

constexpr double kMaxGain = 25.0;

// Rotation vector scaled by a length so it mixes with translation in a step-direction test.
Vec6 to_vec(const RigidTransform& t, double scale) {
  const Eigen::AngleAxisd aa(t.rotation());
  Vec6 v;
  v << aa.angle() * aa.axis() * scale, t.translation();
  return v;
}

RigidTransform from_vec(const Vec6& v, double scale) {
  const Eigen::Vector3d w = v.head<3>() / scale;
  const double a = w.norm();
  const Eigen::Matrix3d r = a > 0 ? Eigen::AngleAxisd(a, w / a).toRotationMatrix() : Eigen::Matrix3d::Identity();
  return {r, v.tail<3>()};
}

struct Matcher {
  const PointCloud& source;
  const PointCloud& target;
  const KdTree& tree;
  double max_d;
  std::vector<Eigen::Vector3d> moved;

  // Fills correspondences for transform t; returns the match count.
  std::size_t match(const RigidTransform& t, std::vector<Eigen::Vector3d>& src, std::vector<Eigen::Vector3d>& dst) {
    src.clear();
    dst.clear();
    moved.resize(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) moved[i] = t * source.points[i];
    for (std::size_t i = 0; i < source.size(); ++i) {
      const long j = tree.nearest(moved[i], max_d);
      if (j < 0) continue;
      src.push_back(source.points[i]);
      dst.push_back(target.points[static_cast<std::size_t>(j)]);
    }
    return src.size();
  }
};

double pair_rms(const RigidTransform& t, const std::vector<Eigen::Vector3d>& src,
                const std::vector<Eigen::Vector3d>& dst) {
  double s = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) s += (t * src[i] - dst[i]).squaredNorm();
  return src.empty() ? 0.0 : std::sqrt(s / static_cast<double>(src.size()));
}

}  // namespace

IcpResult icp_register(const PointCloud& source, const PointCloud& target, const RigidTransform& initial,
                       const IcpParams& params) {
  if (source.empty() || target.empty()) throw RegistrationFailed("ICP needs two non-empty clouds");
  KdTree tree(target.points);
  Matcher matcher{source, target, tree, params.correspondence_max_dist, {}};

  // Length scale for rotations: rms radius of the source about its centroid.
  double scale = 0.0;
  const Eigen::Vector3d c = source.centroid();
  for (const auto& p : source.points) scale += (p - c).squaredNorm();
  scale = std::max(std::sqrt(scale / static_cast<double>(source.size())), 1e-6);

  const double min_corr = std::max(3.0, params.min_overlap_fraction * static_cast<double>(source.size()));
  IcpResult res;
  res.transform = initial;
  double prev = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector3d> src, dst, src2, dst2;
  Vec6 plain_prev = Vec6::Zero();

  for (int it = 0; it < params.max_iterations; ++it) {
    if (static_cast<double>(matcher.match(res.transform, src, dst)) < min_corr)
      throw RegistrationFailed("too few ICP correspondences");
    const FitResult fit = fit_points(src, dst, false, 3, false);
    RigidTransform next = fit.transform;
    double rms = fit.residual_rms;

    // Plain ICP steps along a consistent direction converge geometrically, slowly in shallow
    // valleys: jump ahead by the remaining series sum when that lowers the matched rms.
    const Vec6 x = to_vec(next, scale);
    const Vec6 plain = x - to_vec(res.transform, scale);
    const double n0 = plain_prev.norm(), n1 = plain.norm();
    if (n0 > 0 && n1 > 0 && plain.dot(plain_prev) > std::cos(10.0 * std::numbers::pi / 180) * n0 * n1) {
      const double ratio = n1 / n0;
      for (double gain = ratio < 1.0 ? std::min(ratio / (1.0 - ratio), kMaxGain) : kMaxGain; gain >= 1.0;
           gain /= 4.0) {
        const RigidTransform jump = from_vec(x + gain * plain, scale);
        if (static_cast<double>(matcher.match(jump, src2, dst2)) < min_corr) continue;
        const FitResult jf = fit_points(src2, dst2, false, 3, false);
        if (jf.residual_rms < rms && pair_rms(jump, src2, dst2) < rms) {
          next = jf.transform;
          rms = jf.residual_rms;
          break;
        }
      }
    }
    plain_prev = plain;

    const Vec6 x_new = to_vec(next, scale);
    const double moved = (x_new - to_vec(res.transform, scale)).norm();
    res.transform = next;
    res.rms = rms;
    res.rms_history.push_back(rms);
    res.iterations = it + 1;
    if (rms < params.convergence_eps || (std::abs(prev - rms) < params.convergence_eps && moved < params.convergence_eps)) {
      res.converged = true;
      break;
    }
    prev = rms;
  }
  if (res.rms > params.failure_rms) throw RegistrationFailed("ICP residual above failure threshold");
  return res;
}

IcpErrorMetric IcpErrorMetric::from_delta(const RigidTransform& delta) {
  IcpErrorMetric m;
  m.delta_ = delta;
  m.pose_error_ = flangecal::pose_error(delta);
  m.failed_ = false;
  return m;
}

const RigidTransform& IcpErrorMetric::delta() const {
  if (failed_) throw Error("failed metric has no transform");
  return delta_;
}

const PoseError& IcpErrorMetric::pose_error() const {
  if (failed_) throw Error("failed metric has no pose error");
  return pose_error_;
}

IcpErrorMetric calibration_error(const RigidTransform& H_hat, const RigidTransform& robot_pose_v,
                                 const PointCloud& P_true_flan, const PointCloud& P_v_cam, const IcpParams& params) {
  if (P_true_flan.empty() || P_v_cam.empty()) return IcpErrorMetric::failure();
  const PointCloud predicted = transform_cloud(H_hat.inverse() * robot_pose_v, P_true_flan);
  const RigidTransform init = RigidTransform::from_translation(predicted.centroid() - P_v_cam.centroid());
  try {
    const IcpResult r = icp_register(P_v_cam, predicted, init, params);
    return IcpErrorMetric::from_delta(r.transform);
  } catch (const RegistrationFailed&) {
    return IcpErrorMetric::failure();
  }
}

IcpErrorMetric simulation_error(const RigidTransform& H_hat, const RigidTransform& H_true) {
  return IcpErrorMetric::from_delta(H_hat.inverse() * H_true);
}

double cost(const IcpErrorMetric& metric, const CostKind& kind) {
  if (metric.failed()) return std::numeric_limits<double>::infinity();
  const PoseError& e = metric.pose_error();
  switch (kind.kind) {
    case CostKind::TranslationNorm:
      return e.delta_t_mm.norm();
    case CostKind::XyOnly:
      return e.delta_t_mm.head<2>().norm();
    case CostKind::CombinedWithRadius: {
      const double k = std::numbers::pi / 180.0 * kind.radius_mm;
      Eigen::Matrix<double, 6, 1> v;
      v << e.delta_t_mm, e.delta_rpy_deg.roll * k, e.delta_rpy_deg.pitch * k, e.delta_rpy_deg.yaw * k;
      return v.norm();
    }
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace flangecal
