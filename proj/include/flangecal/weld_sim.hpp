#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace flangecal {

/// 2D polyline with arclength parameterization.
class Polyline2D {
 public:
  Polyline2D() = default;
  explicit Polyline2D(std::vector<Eigen::Vector2d> pts);

  struct Projection {
    Eigen::Vector2d point;
    Eigen::Vector2d tangent;
    std::size_t segment = 0;
    double arclength = 0.0;
    double distance = 0.0;
  };

  /// Closest point over all segments; ties go to the lower segment index.
  Projection project(const Eigen::Vector2d& q) const;
  /// Index of the nearest vertex; ties go to the lower index.
  std::size_t nearest_vertex(const Eigen::Vector2d& q) const;
  /// Unit tangent at a vertex from its neighbours.
  Eigen::Vector2d vertex_tangent(std::size_t i) const;

  const std::vector<Eigen::Vector2d>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }

 private:
  std::vector<Eigen::Vector2d> pts_;
  std::vector<double> cum_;
};

/// Left-hand normal of a unit tangent.
inline Eigen::Vector2d left_normal(const Eigen::Vector2d& t) { return {-t.y(), t.x()}; }

enum class ContactSide { Left, Right };

struct SeamWorld {
  Polyline2D true_seam;
  Polyline2D planned_path;
  double tool_offset = 0.04;  // |d|
  ContactSide side = ContactSide::Left;
  double max_engagement = 0.010;
};

struct ServoParams {
  double k_p = 10.0;        // 1/s
  double delta_d = 0.002;   // m
  double v_const = 0.010;   // m/s
  double dt = 0.001;        // s
  int max_steps = 200000;
  double singularity_eps = 1e-3;
  double record_spacing = 0.0005;  // minimum spacing of refined path points
};

struct ContactState {
  Eigen::Vector2d P_s;
  Eigen::Vector2d delta;  // P_r - P_s
  Eigen::Vector2d t_s, n_s;
  double delta_t = 0.0, delta_n = 0.0;
  double arclength = 0.0;
};

/// Ideal compliant tip: P_s is the seam point nearest P_r. Throws ContactLost when P_r is
/// farther than max_engagement from the seam.
ContactState srm_contact(const Eigen::Vector2d& P_r, double alpha, const SeamWorld& world);

/// Feed along the planned tangent plus proportional correction of the normal deformation.
Eigen::Vector2d servo_velocity(const Eigen::Vector2d& P_r, double delta_n, const Eigen::Vector2d& n_s,
                               const SeamWorld& world, const ServoParams& params);

/// Angular rate that zeroes the torch velocity along n_hat_t. Throws KinematicSingularity when
/// |n_d . n_hat_t| <= eps.
double torch_omega(const Eigen::Vector2d& V_r, double alpha, double d_norm, const Eigen::Vector2d& n_hat_t,
                   double eps = 1e-3);

/// Torch velocity implied by (V_r, omega).
Eigen::Vector2d torch_velocity(const Eigen::Vector2d& V_r, double alpha, double d_norm, double omega);

struct WeldStep {
  double t = 0.0;
  Eigen::Vector2d P_r, P_s, P_t;
  double alpha = 0.0;
  double delta_t = 0.0, delta_n = 0.0;
  double delta_d = 0.0;
  double omega = 0.0;
  Eigen::Vector2d V_r, V_t, n_hat_t;
  double constraint_residual = 0.0;
  double arclength = 0.0;
};

enum class WeldTermination { PathEnd, MaxSteps, ContactLost, KinematicSingularity };
std::string termination_name(WeldTermination t);

struct WeldTrace {
  std::vector<WeldStep> steps;
  std::vector<Eigen::Vector2d> refined_path;
  std::vector<std::size_t> refined_step_index;
  WeldTermination termination = WeldTermination::MaxSteps;
  int contact_resets = 0;
  std::string message;
};

/// Explicit Euler integration of the tracking loop. Throws NeverEngaged when the start pose
/// has no contact. Contact loss first resets delta_d to zero; a second loss ends the run.
WeldTrace run_weld(const SeamWorld& world, const ServoParams& params);

/// Initial pose: first planned point pushed delta_d along the contact normal, aligned with
/// the planned tangent.
void initial_pose(const SeamWorld& world, const ServoParams& params, Eigen::Vector2d& P_r, double& alpha);

// Seam factories. True seams are densely sampled; planned paths sample them every
// `spacing` meters and add i.i.d. Gaussian noise along the local normal and tangent.
Polyline2D straight_seam(double length, double resolution = 0.0005);
Polyline2D arc_seam(double radius, double angle, double resolution = 0.0005);
Polyline2D s_curve_seam(double length, double amplitude, double wavelength, double resolution = 0.0005);
Polyline2D planned_from_seam(const Polyline2D& seam, double spacing, double noise_sigma, std::uint64_t seed);

/// RMS distance from the points to the polyline.
double rms_distance(const std::vector<Eigen::Vector2d>& pts, const Polyline2D& curve);

}  // namespace flangecal
