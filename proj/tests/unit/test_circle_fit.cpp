#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "flangecal/circle_fit.hpp"
#include "flangecal/errors.hpp"
#include "flangecal/flange_sim.hpp"
#include "test_helpers.hpp"

using namespace flangecal;

namespace {

constexpr double kPi = std::numbers::pi;

PointCloud arc(const Eigen::Vector3d& c, double r, double from, double to, int n, double sigma, std::uint64_t seed,
               const Eigen::Matrix3d& rot = Eigen::Matrix3d::Identity()) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  PointCloud out;
  for (int i = 0; i < n; ++i) {
    const double a = from + (to - from) * i / n;
    Eigen::Vector3d p = c + rot * Eigen::Vector3d(r * std::cos(a), r * std::sin(a), 0);
    if (sigma > 0) p += sigma * Eigen::Vector3d(g(rng), g(rng), g(rng));
    out.points.push_back(p);
  }
  return out;
}

// Algebraic (Kasa) least-squares circle fit in the z = const plane.
Eigen::Vector3d kasa_center(const PointCloud& c) {
  Eigen::MatrixXd a(c.size(), 3);
  Eigen::VectorXd b(c.size());
  double z = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& p = c.points[i];
    a.row(i) << 2 * p.x(), 2 * p.y(), 1;
    b(i) = p.x() * p.x() + p.y() * p.y();
    z += p.z();
  }
  const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
  return {s(0), s(1), z / c.size()};
}

}  // namespace

TEST(CircleThroughThree, SymmetricConstruction) {
  const auto c = circle_through_three({1, 0, 0}, {0, 1, 0}, {-1, 0, 0});
  EXPECT_LT(c.center.norm(), 1e-15);
  EXPECT_NEAR(c.radius, 1.0, 1e-15);
  EXPECT_LT((c.normal - Eigen::Vector3d::UnitZ()).norm(), 1e-15);
}

TEST(CircleThroughThree, ConstructedCircle) {
  const Eigen::Vector3d center(0.2, 0.1, 0.5);
  const double r = 0.031;
  auto at = [&](double deg) {
    const double a = deg * kPi / 180;
    return Eigen::Vector3d(center + r * Eigen::Vector3d(std::cos(a), std::sin(a), 0));
  };
  const auto c = circle_through_three(at(0), at(90), at(210));
  EXPECT_LT((c.center - center).norm(), 1e-9);
  EXPECT_NEAR(c.radius, r, 1e-9);
  EXPECT_LT((c.normal - Eigen::Vector3d::UnitZ()).norm(), 1e-9);
}

TEST(CircleThroughThree, CollinearThrows) {
  EXPECT_THROW(circle_through_three({0, 0, 0}, {1, 0, 0}, {2, 0, 0}), DegenerateSample);
  EXPECT_THROW(circle_through_three({0, 0, 0}, {0, 0, 0}, {2, 0, 0}), DegenerateSample);
}

TEST(CircleThroughThree, CanonicalNormalSign) {
  EXPECT_EQ(canonical_normal({0, 0, -1}), Eigen::Vector3d(0, 0, 1));
  EXPECT_EQ(canonical_normal({0, -1, 0}), Eigen::Vector3d(0, 1, 0));
  EXPECT_EQ(canonical_normal({-1, 0, 0}), Eigen::Vector3d(1, 0, 0));
  EXPECT_LT((canonical_normal({0.5, -1, 0}) - Eigen::Vector3d(-0.5, 1, 0).normalized()).norm(), 1e-15);
  // Clockwise ordering still yields +z.
  const auto c = circle_through_three({-1, 0, 0}, {0, 1, 0}, {1, 0, 0});
  EXPECT_GT(c.normal.z(), 0);
}

TEST(PointCircleDistance, Components) {
  CircleFit c;
  c.radius = 1.0;
  EXPECT_NEAR(point_circle_distance(c, {1, 0, 0}), 0, 1e-15);
  EXPECT_NEAR(point_circle_distance(c, {1, 0, 0.3}), 0.3, 1e-15);
  EXPECT_NEAR(point_circle_distance(c, {1.4, 0, 0.3}), 0.5, 1e-15);
}

TEST(Ransac, FullCircleNoiseless) {
  const Eigen::Vector3d center(0.1, -0.2, 0.7);
  const auto cloud = arc(center, 0.031, 0, 2 * kPi, 360, 0.0, 1);
  RansacParams p;
  const auto fit = ransac_circle(cloud, p);
  EXPECT_LT((fit.center - center).norm(), 1e-6);
  EXPECT_EQ(fit.inlier_count, 360u);
  EXPECT_NEAR(fit.radius, 0.031, 1e-9);
}

TEST(Ransac, HalfArcWithNoiseMatchesAlgebraicFit) {
  const Eigen::Vector3d center(0.0, 0.0, 0.5);
  RansacParams p;
  p.min_inlier_fraction = 0.3;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cloud = arc(center, 0.031, 0, kPi, 180, 0.0001, seed);
    const auto fit = ransac_circle(cloud, p);
    EXPECT_LT((fit.center - center).norm(), 0.0003);
    // Oracle: algebraic fit on the (ground-truth) inliers lands close to the same centre.
    EXPECT_LT((kasa_center(cloud) - center).norm(), 0.0003);
    EXPECT_LE(std::abs(fit.radius - p.expected_radius), p.radius_tolerance);
  }
}

TEST(Ransac, RadiusCheckRejectsWrongCircle) {
  const auto cloud = arc({0, 0, 0.5}, 0.045, 0, 2 * kPi, 360, 0.0, 2);
  RansacParams p;
  EXPECT_THROW(ransac_circle(cloud, p), NoModelFound);
}

TEST(Ransac, TooFewPointsThrows) {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(ransac_circle(c, {}), InsufficientPoints);
}

TEST(RansacProperty, Deterministic) {
  const auto cloud = arc({0, 0, 0.5}, 0.031, 0, 1.5 * kPi, 300, 0.0002, 3);
  RansacParams p;
  p.distance_threshold = 0.0006;
  const auto a = ransac_circle(cloud, p), b = ransac_circle(cloud, p);
  EXPECT_EQ(a.center, b.center);
  EXPECT_EQ(a.normal, b.normal);
  EXPECT_EQ(a.radius, b.radius);
  EXPECT_EQ(a.inlier_count, b.inlier_count);
}

TEST(RansacProperty, RigidInvariance) {
  std::mt19937_64 rng(4);
  const auto cloud = arc({0, 0, 0}, 0.031, 0, 2 * kPi, 240, 0.0001, 5);
  RansacParams p;
  const auto base = ransac_circle(cloud, p);
  for (int i = 0; i < 10; ++i) {
    const auto t = flangecal::testing::random_transform(rng);
    const auto moved = ransac_circle(transform_cloud(t, cloud), p);
    EXPECT_LT((moved.center - t * base.center).norm(), p.distance_threshold);
  }
}

TEST(RansacProperty, RadiusAlwaysWithinTolerance) {
  RansacParams p;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double r = 0.0305 + 0.001 * (seed % 5) / 5.0;
    const auto cloud = arc({0, 0, 0}, r, 0, 2 * kPi, 200, 0.0001, seed);
    try {
      const auto fit = ransac_circle(cloud, p);
      EXPECT_LE(std::abs(fit.radius - p.expected_radius), p.radius_tolerance);
      EXPECT_NEAR(fit.normal.norm(), 1.0, 1e-9);
    } catch (const NoModelFound&) {
    }
  }
}

TEST(RansacProperty, PartialArcsNoiseless) {
  RansacParams p;
  std::mt19937_64 rng(6);
  for (double span_deg : {90.0, 120.0, 180.0, 270.0}) {
    const auto rot = flangecal::testing::random_transform(rng).rotation();
    const Eigen::Vector3d center(0.3, 0.1, 0.6);
    const auto cloud = arc(center, 0.031, 0.3, 0.3 + span_deg * kPi / 180, 120, 0.0, 7, rot);
    const auto fit = ransac_circle(cloud, p);
    EXPECT_LT((fit.center - center).norm(), p.distance_threshold) << span_deg;
  }
}

TEST(Scene, NoiselessPipelineRecoversTcp) {
  FlangeModel model;
  const auto pose = RigidTransform::from_rpy({0.1, -0.15, 0.2}, {0.4, 0.05, 0.45});
  const auto scene = generate_scene(model, pose, SceneConfig{}, 11);
  SceneParams sp;
  sp.box = default_scene_box();
  CircleFit fit;
  const Eigen::Vector3d tcp = flange_tcp_from_scene(scene.cloud, sp, &fit);
  EXPECT_LT((tcp - scene.tcp_cam).norm(), 1e-6);
  EXPECT_LT((tcp - default_ground_truth().inverse() * pose.translation()).norm(), 1e-6);
}

TEST(Scene, NoisyPipelineWithinHalfMillimeter) {
  FlangeModel model;
  SceneConfig cfg;
  cfg.sensor_sigma = 0.0003;
  SceneParams sp;
  sp.box = default_scene_box();
  sp.ransac.distance_threshold = 0.001;  // about 3 sigma for this noise level
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto pose = RigidTransform::from_rpy({0.05 * seed, 0.1, -0.1}, {0.35 + 0.05 * seed, 0.0, 0.4});
    const auto scene = generate_scene(model, pose, cfg, 20 + seed);
    EXPECT_LT((flange_tcp_from_scene(scene.cloud, sp) - scene.tcp_cam).norm(), 0.0005);
  }
}

TEST(Scene, FloorOnlyFailsSegmentation) {
  FlangeModel model;
  SceneConfig cfg;
  auto scene = generate_scene(model, RigidTransform::from_translation({0.4, 0, 0.4}), cfg, 12);
  // Keep only the floor (base z ~ 0).
  PointCloud floor;
  for (const auto& p : scene.cloud.points)
    if (std::abs((cfg.H_true * p).z()) < 1e-9) floor.points.push_back(p);
  ASSERT_GT(floor.size(), 1000u);
  SceneParams sp;  // unbounded crop so the floor reaches segmentation
  EXPECT_THROW(flange_tcp_from_scene(floor, sp), SegmentationFailed);
}

TEST(Scene, MatchesDirectPointMode) {
  FlangeModel model;
  RansacParams p;
  std::mt19937_64 rng(13);
  for (int i = 0; i < 5; ++i) {
    const auto pose = flangecal::testing::random_transform(rng, 0.5);
    const auto cloud = generate_flange_cloud(model, pose, 0.0, 30 + i);
    PointCloud rim = extract_boundary(cloud, {});
    const auto fit = ransac_circle(rim, p);
    EXPECT_LT((fit.center - pose.translation()).norm(), 1e-6);
  }
}
