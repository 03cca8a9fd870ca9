#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "flangecal/errors.hpp"
#include "flangecal/flange_sim.hpp"
#include "flangecal/icp.hpp"
#include "test_helpers.hpp"

using namespace flangecal;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PointCloud flange_at(const RigidTransform& pose, double density = 2e6, std::uint64_t seed = 1) {
  FlangeModel m;
  m.sample_density = density;
  return generate_flange_cloud(m, pose, 0.0, seed);
}

IcpErrorMetric metric(const Eigen::Vector3d& t_mm, const RpyAngles& rpy_deg = {}) {
  return IcpErrorMetric::from_delta(RigidTransform::from_rpy(
      {rpy_deg.roll * kDeg, rpy_deg.pitch * kDeg, rpy_deg.yaw * kDeg}, t_mm / 1000.0));
}

}  // namespace

TEST(Icp, IdenticalCloudsGiveIdentity) {
  const auto c = flange_at(RigidTransform::from_translation({0.1, 0, 0.6}));
  const auto r = icp_register(c, c, RigidTransform::identity(), IcpParams{});
  EXPECT_LT((r.transform.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(r.rms, 1e-12);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
}

TEST(Icp, RecoversConstructedDisplacement) {
  // An irregular solid: no symmetry and no sampling lattice, so the basin is unique.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  PointCloud source;
  for (int i = 0; i < 3000; ++i) {
    const Eigen::Vector3d p(0.03 * u(rng), 0.02 * u(rng), 0.01 * u(rng));
    source.points.push_back(Eigen::Vector3d(0.1, 0.05, 0.6) + p + Eigen::Vector3d(0, 0, 0.2 * p.x() * p.x() / 0.03));
  }
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    const Eigen::Vector3d dir = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    // Perturbation about the cloud centre: 1 degree and 2 mm.
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(1.0 * kDeg, axis).toRotationMatrix();
    const Eigen::Vector3d c = source.centroid();
    const RigidTransform t(rot, c - rot * c + 0.002 * dir);
    const auto target = transform_cloud(t, source);
    const auto r = icp_register(source, target, RigidTransform::identity(), IcpParams{});
    const auto err = pose_error(r.transform.inverse() * t);
    EXPECT_LT(err.delta_t_mm.norm(), 1e-6) << trial;
    EXPECT_LT(((r.transform.inverse() * t).rotation() - Eigen::Matrix3d::Identity()).norm(), 1e-9) << trial;
    EXPECT_TRUE(r.converged);
  }
}

TEST(Icp, FlangeAgainstIndependentDenseModel) {
  // Measured cloud at the default density against a denser, independently sampled model.
  // Tilt and centre are pinned by the plane and rim; rotation about the normal only by the
  // four holes, so it is resolved to within half the measured rim sample angle.
  FlangeModel m;
  FlangeModel dense = m;
  dense.sample_density = 5e7;
  const auto pose = RigidTransform::from_rpy({0.2, -0.1, 0.3}, {0.1, 0.05, 0.6});
  const auto source = generate_flange_cloud(m, pose, 0.0, 1);
  const auto model = generate_flange_cloud(dense, pose, 0.0, 99);
  const Eigen::Vector3d c = pose.translation(), n = pose.rotation().col(2);
  const double half_rim_angle = 0.5 * m.spacing() * m.contour_spacing_factor / m.outer_radius / kDeg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    const Eigen::Vector3d dir = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(1.0 * kDeg, axis).toRotationMatrix();
    const RigidTransform t(rot, c - rot * c + 0.002 * dir);
    const auto r = icp_register(source, transform_cloud(t, model), RigidTransform::identity(), IcpParams{});
    EXPECT_TRUE(r.converged) << trial;
    const RigidTransform d = r.transform.inverse() * t;
    const Eigen::AngleAxisd aa(d.rotation());
    const Eigen::Vector3d w = aa.angle() * aa.axis();
    EXPECT_LT((d * c - c).norm(), 1e-5) << trial;
    EXPECT_LT((w - w.dot(n) * n).norm() / kDeg, 1e-3) << trial;
    EXPECT_LT(std::abs(w.dot(n)) / kDeg, half_rim_angle) << trial;
  }
}

TEST(Icp, DisjointCloudsFail) {
  const auto a = flange_at(RigidTransform::from_translation({0, 0, 0.5}));
  const auto b = flange_at(RigidTransform::from_translation({0.5, 0, 0.5}));
  EXPECT_THROW(icp_register(a, b, RigidTransform::identity(), IcpParams{}), RegistrationFailed);
  EXPECT_THROW(icp_register(PointCloud{}, b, RigidTransform::identity(), IcpParams{}), RegistrationFailed);
}

TEST(IcpProperty, RmsNonIncreasing) {
  const auto source = flange_at(RigidTransform::from_translation({0, 0, 0.5}));
  const Eigen::Vector3d c = source.centroid();
  for (int trial = 0; trial < 10; ++trial) {
    const auto r0 = RigidTransform::from_rpy({0.004 * trial, -0.01, 0.015}, Eigen::Vector3d::Zero());
    const RigidTransform t(r0.rotation(), c - r0.rotation() * c + Eigen::Vector3d(0.001 * (trial % 3), 0.002, -0.001));
    const auto target = transform_cloud(t, source);
    const auto r = icp_register(source, target, RigidTransform::identity(), IcpParams{});
    for (std::size_t i = 1; i < r.rms_history.size(); ++i) EXPECT_LE(r.rms_history[i], r.rms_history[i - 1] + 1e-15);
  }
}

TEST(CalibrationError, GroundTruthGivesZero) {
  FlangeModel m;
  const auto H = default_ground_truth();
  const auto pose_v = RigidTransform::from_rpy({0.1, 0.05, -0.2}, {0.45, 0.02, 0.4});
  const auto p_true = generate_flange_cloud(m, RigidTransform::identity(), 0.0, 1);
  const auto p_v = generate_flange_cloud(m, H.inverse() * pose_v, 0.0, 1);
  const IcpParams params;
  const auto e = calibration_error(H, pose_v, p_true, p_v, params);
  ASSERT_FALSE(e.failed());
  EXPECT_LT(cost(e, CostKind::translation_norm()), params.convergence_eps * 1000);
}

TEST(CalibrationError, CloudModeMatchesSimulationMode) {
  FlangeModel m;
  const auto H = default_ground_truth();
  const auto pose_v = RigidTransform::from_rpy({0.1, 0.05, -0.2}, {0.45, 0.02, 0.4});
  const auto p_true = generate_flange_cloud(m, RigidTransform::identity(), 0.0, 1);
  const auto p_v = generate_flange_cloud(m, H.inverse() * pose_v, 0.0, 1);
  const IcpParams params;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto off = RigidTransform::from_rpy({0.002 * u(rng), 0.002 * u(rng), 0.002 * u(rng)},
                                              0.002 * Eigen::Vector3d(u(rng), u(rng), u(rng)));
    const auto H_hat = H * off;
    const auto cloud = calibration_error(H_hat, pose_v, p_true, p_v, params);
    const auto sim = simulation_error(H_hat, H);
    ASSERT_FALSE(cloud.failed());
    // Both metrics describe the same frame offset; the cloud one is only known up to a
    // rotation about the flange axis, which moves points on the face by well under eps.
    const auto pred_sim = transform_cloud(sim.delta(), p_v);
    const auto pred_cloud = transform_cloud(cloud.delta(), p_v);
    double worst = 0;
    for (std::size_t i = 0; i < p_v.size(); ++i)
      worst = std::max(worst, (pred_sim.points[i] - pred_cloud.points[i]).norm());
    EXPECT_LT(worst, 2 * params.convergence_eps) << trial;
  }
}

TEST(CalibrationError, SimulationShortcutOffset) {
  const auto H = default_ground_truth();
  // H_hat^-1 * H_true = offset: construct H_hat = H_true * offset^-1.
  const auto offset = RigidTransform::from_translation({0.001, 0.002, 0.003});
  const auto e = simulation_error(H * offset.inverse(), H);
  EXPECT_LT((e.pose_error().delta_t_mm - Eigen::Vector3d(1, 2, 3)).norm(), 1e-9);
}

TEST(CalibrationError, LargeErrorFails) {
  FlangeModel m;
  const auto H = default_ground_truth();
  const auto pose_v = RigidTransform::from_translation({0.45, 0.0, 0.4});
  const auto p_true = generate_flange_cloud(m, RigidTransform::identity(), 0.0, 1);
  const auto p_v = generate_flange_cloud(m, H.inverse() * pose_v, 0.0, 1);
  IcpParams params;
  params.correspondence_max_dist = 0.001;
  // 50 mm tilt-free shift plus a 20 degree rotation: the centroid guess cannot absorb it.
  const auto H_hat = H * RigidTransform::from_rpy({0.35, 0, 0}, {0.05, 0, 0});
  const auto e = calibration_error(H_hat, pose_v, p_true, p_v, params);
  EXPECT_TRUE(e.failed());
  for (const auto& k : {CostKind::translation_norm(), CostKind::xy_only(), CostKind::combined(300)})
    EXPECT_EQ(cost(e, k), std::numeric_limits<double>::infinity());
  EXPECT_THROW(e.delta(), Error);
}

TEST(Cost, Examples) {
  EXPECT_NEAR(cost(metric({3, 4, 0}), CostKind::translation_norm()), 5.0, 1e-9);
  EXPECT_NEAR(cost(metric({3, 4, 12}), CostKind::xy_only()), 5.0, 1e-9);
  EXPECT_NEAR(cost(metric({0, 0, 0}, {0, 0, 0.2}), CostKind::combined(300)), 0.2 * kDeg * 300, 1e-9);
  EXPECT_NEAR(cost(metric({0, 0, 0}, {0, 0, 0.2}), CostKind::combined(300)), 1.047, 1e-3);
  EXPECT_EQ(cost(IcpErrorMetric::failure(), CostKind::translation_norm()), std::numeric_limits<double>::infinity());
}

TEST(CostProperty, NormOnFiniteMetrics) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto t = flangecal::testing::random_transform(rng, 0.01);
    const auto m = IcpErrorMetric::from_delta(t);
    for (const auto& k : {CostKind::translation_norm(), CostKind::xy_only(), CostKind::combined(300)})
      EXPECT_GE(cost(m, k), 0.0);
  }
  const auto zero = IcpErrorMetric::from_delta(RigidTransform::identity());
  EXPECT_EQ(cost(zero, CostKind::translation_norm()), 0.0);
  EXPECT_EQ(cost(zero, CostKind::combined(300)), 0.0);
  EXPECT_GT(cost(metric({0, 0, 0}, {0.1, 0, 0}), CostKind::combined(300)), 0.0);
  EXPECT_EQ(cost(metric({0, 0, 0}, {0.1, 0, 0}), CostKind::translation_norm()), 0.0);
}
