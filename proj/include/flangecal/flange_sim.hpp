#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flangecal/calib.hpp"
#include "flangecal/cloud.hpp"
#include "flangecal/se3.hpp"

namespace flangecal {

/// Flat tool flange: annulus with bolt holes. Defaults follow ISO 9409-1-50-4-M6.
struct FlangeModel {
  double outer_radius = 0.031;
  double bolt_circle_radius = 0.025;
  double hole_radius = 0.0033;
  int hole_count = 4;
  double annulus_inner_radius = 0.010;
  double sample_density = 5e6;  // points per m^2
  /// Edge contours are sampled at this fraction of the area spacing; 0 disables them.
  double contour_spacing_factor = 0.5;

  void validate() const;
  double spacing() const;
  /// Inside the annulus and outside every hole, with `margin` clearance from all edges.
  bool contains(double x, double y, double margin = 0.0) const;
};

/// Ground-truth camera->base transform used throughout the simulations.
RigidTransform default_ground_truth();

/// Points of the flange face in its own frame (z = 0, TCP at the origin), moved by pose and
/// perturbed by isotropic Gaussian noise.
PointCloud generate_flange_cloud(const FlangeModel& model, const RigidTransform& pose, double sensor_sigma,
                                 std::uint64_t seed);

struct SceneConfig {
  RigidTransform H_true = default_ground_truth();
  double sensor_sigma = 0.0;
  bool with_floor = true;
  bool with_wrist = true;
  double floor_density = 2e4;
  Eigen::Vector2d floor_min{0.2, -0.4};
  Eigen::Vector2d floor_max{1.0, 0.4};
  double wrist_radius = 0.045;
  double wrist_gap = 0.005;
  double wrist_length = 0.10;
  double wrist_density = 5e5;
  /// Replace the flange by a blob elsewhere, modelling a wrong segmentation.
  bool false_segmentation = false;
  Eigen::Vector3d false_offset{0.0, 0.0, 0.05};
};

struct FlangeScene {
  PointCloud cloud;         // scanner frame
  Eigen::Vector3d tcp_cam;  // true TCP in the scanner frame
};

/// Floor, wrist and flange at the given base-frame flange pose, expressed in the scanner frame.
FlangeScene generate_scene(const FlangeModel& model, const RigidTransform& flange_pose_base, const SceneConfig& cfg,
                           std::uint64_t seed);

/// Crop box that keeps the working volume and drops the floor for the default setup.
PassThroughBox default_scene_box();

struct SimScenario {
  RigidTransform H_true = default_ground_truth();
  Eigen::Vector3d workspace_center{0.4, 0.0, 0.4};
  Eigen::Vector3d workspace_extent{0.3, 0.3, 0.2};
  std::array<int, 3> lattice{5, 5, 3};
  int n_poses = 75;
  double orientation_limit = 0.3;
  double theta_max = 0.3;
  double noise_sigma = 0.001;
  int n_realizations = 100;
  std::uint64_t rng_seed = 42;
};

/// Lattice dimensions proportional to the workspace extents holding at least n nodes.
std::array<int, 3> lattice_for(int n, const Eigen::Vector3d& extent, const std::array<int, 3>& preferred);

/// Lattice positions with random orientations, each rpy angle below orientation_limit and the
/// flange normal within theta_max of the direction to the scanner.
std::vector<RigidTransform> sample_poses(const SimScenario& scenario);

Eigen::Vector3d disturb_point(const Eigen::Vector3d& p_base, const RigidTransform& H_true, double sigma,
                              std::mt19937_64& rng);
Eigen::Vector3d disturb_point(const Eigen::Vector3d& p_base, const RigidTransform& H_true, double sigma,
                              std::uint64_t seed);

/// Independent generator for (master, sigma index, realization index).
std::mt19937_64 realization_rng(std::uint64_t master, std::uint64_t sigma_idx, std::uint64_t real_idx);

/// Pairs from poses with disturbed camera points, in the given order.
std::vector<SamplePair> make_pairs(const std::vector<RigidTransform>& poses, const RigidTransform& H_true,
                                   double sigma, std::mt19937_64& rng);

using ErrorVec = Eigen::Matrix<double, 6, 1>;  // x, y, z [mm], roll, pitch, yaw [deg]

struct ComponentStats {
  ErrorVec mean = ErrorVec::Zero();
  ErrorVec std = ErrorVec::Zero();
  int count = 0;
};

ComponentStats component_stats(const std::vector<ErrorVec>& samples);

enum class Method { AllPoints, Iterative };
std::string method_name(Method m);

struct SweepRow {
  double sigma = 0.0;
  Method method = Method::AllPoints;
  ComponentStats stats;
};

struct TraceRow {
  int step = 0;  // new pairs consumed
  ComponentStats stats;
};

struct SweepConfig {
  SimScenario scenario;
  std::vector<double> sigmas;  // meters
  int n_realizations = 100;
  bool all_points = true;
  bool iterative = true;
  double trace_sigma = 0.001;
  double e_required = 1e-9;  // mm
  int threads = 0;           // 0: hardware concurrency
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TraceRow> trace;  // iterative method at trace_sigma
  double trace_sigma = 0.0;
  std::vector<std::vector<ErrorVec>> all_points_samples;  // per sigma
  std::vector<std::vector<ErrorVec>> iterative_samples;
};

/// Monte-Carlo sweep over noise levels for the all-points fit and the iterative pool.
SweepResult run_sweep(const SweepConfig& cfg);

/// Noise levels lo, lo+step, ..., hi (inclusive within half a step).
std::vector<double> sigma_range(double lo, double hi, double step);

/// Ordinary least-squares slope of y on x.
double linear_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace flangecal
