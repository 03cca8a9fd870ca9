#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "flangecal/cloud.hpp"

namespace flangecal {

struct RansacParams {
  int sample_size = 3;
  double distance_threshold = 0.0003;  // e_d
  double radius_tolerance = 0.001;     // e_r
  double expected_radius = 0.031;      // R
  int max_iterations = 10000;          // k_max
  double min_inlier_fraction = 0.3;
  double early_exit_fraction = 0.9;
  int refine_iterations = 3;
  std::uint64_t rng_seed = 1;
};

struct CircleFit {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double radius = 0.0;
  std::size_t inlier_count = 0;
  double rms_residual = 0.0;
};

/// Normal sign convention: positive z, then positive y, then positive x.
Eigen::Vector3d canonical_normal(Eigen::Vector3d n);

/// Circumscribed circle of three points. Throws DegenerateSample for (near) collinear input.
CircleFit circle_through_three(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, const Eigen::Vector3d& p3);

/// Distance from p to the circle: out-of-plane and in-plane ring offsets in quadrature.
double point_circle_distance(const CircleFit& c, const Eigen::Vector3d& p);

/// Plane + circle least squares over the given points, starting from `init`.
CircleFit refine_circle(const std::vector<Eigen::Vector3d>& pts, const CircleFit& init, int iterations);

/// RANSAC with a radius model check. Throws NoModelFound when no candidate within e_r of R
/// reaches min_inlier_fraction.
CircleFit ransac_circle(const PointCloud& cloud, const RansacParams& params);

struct SceneParams {
  PassThroughBox box;
  OutlierParams outlier;
  ClusterParams cluster;
  BoundaryParams boundary;
  RansacParams ransac;
};

/// Crop, denoise, segment, take cluster rims and fit the flange circle, trying clusters
/// largest first. Returns the circle centre (the TCP in the scanner frame).
Eigen::Vector3d flange_tcp_from_scene(const PointCloud& scene, const SceneParams& params,
                                      CircleFit* fit_out = nullptr);

}  // namespace flangecal
