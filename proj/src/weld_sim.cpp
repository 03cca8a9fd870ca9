#include "flangecal/weld_sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "flangecal/errors.hpp"

namespace flangecal {

Polyline2D::Polyline2D(std::vector<Eigen::Vector2d> pts) : pts_(std::move(pts)) {
  if (pts_.empty()) throw InvalidArgument("polyline needs at least one point");
  cum_.assign(pts_.size(), 0.0);
  for (std::size_t i = 1; i < pts_.size(); ++i) cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
}

Polyline2D::Projection Polyline2D::project(const Eigen::Vector2d& q) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  if (pts_.size() == 1) {
    best.point = pts_[0];
    best.tangent = Eigen::Vector2d::UnitX();
    best.distance = (q - pts_[0]).norm();
    return best;
  }
  for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
    const Eigen::Vector2d a = pts_[i], ab = pts_[i + 1] - pts_[i];
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) continue;
    const double s = std::clamp((q - a).dot(ab) / len2, 0.0, 1.0);
    const Eigen::Vector2d p = a + s * ab;
    const double d = (q - p).norm();
    if (d < best.distance) {
      best.distance = d;
      best.point = p;
      best.segment = i;
      best.tangent = ab / std::sqrt(len2);
      best.arclength = cum_[i] + s * std::sqrt(len2);
    }
  }
  return best;
}

std::size_t Polyline2D::nearest_vertex(const Eigen::Vector2d& q) const {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts_.size(); ++i) {
    const double d = (pts_[i] - q).squaredNorm();
    if (d < bd) bd = d, best = i;
  }
  return best;
}

Eigen::Vector2d Polyline2D::vertex_tangent(std::size_t i) const {
  if (pts_.size() < 2) return Eigen::Vector2d::UnitX();
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const std::size_t hi = std::min(i + 1, pts_.size() - 1);
  Eigen::Vector2d t = pts_[hi] - pts_[lo];
  return t.norm() > 0 ? Eigen::Vector2d(t.normalized()) : Eigen::Vector2d::UnitX();
}

std::string termination_name(WeldTermination t) {
  switch (t) {
    case WeldTermination::PathEnd: return "path_end";
    case WeldTermination::MaxSteps: return "max_steps";
    case WeldTermination::ContactLost: return "contact_lost";
    case WeldTermination::KinematicSingularity: return "kinematic_singularity";
  }
  return "unknown";
}

namespace {

ContactState contact_unchecked(const Eigen::Vector2d& P_r, const SeamWorld& world) {
  const auto pr = world.true_seam.project(P_r);
  ContactState c;
  c.P_s = pr.point;
  c.t_s = pr.tangent;
  c.n_s = (world.side == ContactSide::Left ? 1.0 : -1.0) * left_normal(pr.tangent);
  c.delta = P_r - c.P_s;
  c.delta_t = c.delta.dot(c.t_s);
  c.delta_n = c.delta.dot(c.n_s);
  c.arclength = pr.arclength;
  return c;
}

// Tangent at the refined point nearest q, from its neighbours.
Eigen::Vector2d refined_tangent(const std::vector<Eigen::Vector2d>& pts, const Eigen::Vector2d& q) {
  std::size_t j = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dd = (pts[i] - q).squaredNorm();
    if (dd < bd) bd = dd, j = i;
  }
  const std::size_t lo = j == 0 ? 0 : j - 1;
  const std::size_t hi = std::min(j + 1, pts.size() - 1);
  return (pts[hi] - pts[lo]).normalized();
}

Eigen::Vector2d tool_t(double a) { return {std::cos(a), std::sin(a)}; }
Eigen::Vector2d tool_n(double a) { return {-std::sin(a), std::cos(a)}; }

}  // namespace

ContactState srm_contact(const Eigen::Vector2d& P_r, double /*alpha*/, const SeamWorld& world) {
  ContactState c = contact_unchecked(P_r, world);
  if (c.delta.norm() > world.max_engagement) throw ContactLost("tip is out of reach of the seam");
  return c;
}

Eigen::Vector2d servo_velocity(const Eigen::Vector2d& P_r, double delta_n, const Eigen::Vector2d& n_s,
                               const SeamWorld& world, const ServoParams& params) {
  if (world.planned_path.size() < 2) throw InvalidArgument("planned path needs at least two points");
  const std::size_t i = world.planned_path.nearest_vertex(P_r);
  const Eigen::Vector2d t_v = world.planned_path.vertex_tangent(i);
  return params.v_const * t_v - params.k_p * (delta_n - params.delta_d) * n_s;
}

double torch_omega(const Eigen::Vector2d& V_r, double alpha, double d_norm, const Eigen::Vector2d& n_hat_t,
                   double eps) {
  const double c = tool_n(alpha).dot(n_hat_t);
  if (std::abs(c) <= eps) throw KinematicSingularity("tool normal is perpendicular to the path normal");
  // The t_d and n_d projections of V_r recombine to V_r itself.
  const Eigen::Vector2d v_td = V_r.dot(tool_t(alpha)) * tool_t(alpha);
  const Eigen::Vector2d v_nd = V_r.dot(tool_n(alpha)) * tool_n(alpha);
  return -(v_td.dot(n_hat_t) + v_nd.dot(n_hat_t)) / (d_norm * c);
}

Eigen::Vector2d torch_velocity(const Eigen::Vector2d& V_r, double alpha, double d_norm, double omega) {
  return V_r + omega * d_norm * tool_n(alpha);
}

void initial_pose(const SeamWorld& world, const ServoParams& params, Eigen::Vector2d& P_r, double& alpha) {
  const Eigen::Vector2d t = world.planned_path.vertex_tangent(0);
  const Eigen::Vector2d n = (world.side == ContactSide::Left ? 1.0 : -1.0) * left_normal(t);
  P_r = world.planned_path.points()[0] + params.delta_d * n;
  alpha = std::atan2(t.y(), t.x());
}

WeldTrace run_weld(const SeamWorld& world, const ServoParams& params) {
  if (!(params.k_p > 0 && params.dt > 0 && params.v_const > 0)) throw InvalidArgument("invalid servo parameters");
  if (!(world.tool_offset > 0)) throw InvalidArgument("tool offset must be positive");
  Eigen::Vector2d P_r;
  double alpha;
  initial_pose(world, params, P_r, alpha);
  try {
    srm_contact(P_r, alpha, world);
  } catch (const ContactLost&) {
    throw NeverEngaged("initial pose does not touch the seam");
  }

  WeldTrace trace;
  ServoParams sp = params;
  const double d = world.tool_offset;
  const double end_s = world.true_seam.length() - params.v_const * params.dt;
  bool in_contact = true;

  for (int k = 0; k < params.max_steps; ++k) {
    ContactState c = contact_unchecked(P_r, world);
    if (c.delta.norm() > world.max_engagement) {
      if (in_contact && trace.contact_resets == 0) {
        ++trace.contact_resets;
        sp.delta_d = 0.0;
        in_contact = false;
      } else if (in_contact) {
        trace.termination = WeldTermination::ContactLost;
        trace.message = "contact lost after servo reset";
        return trace;
      }
    } else {
      in_contact = true;
    }

    if (in_contact && (trace.refined_path.empty() || (c.P_s - trace.refined_path.back()).norm() >= sp.record_spacing)) {
      trace.refined_path.push_back(c.P_s);
      trace.refined_step_index.push_back(trace.steps.size());
    }

    const Eigen::Vector2d V_r = servo_velocity(P_r, c.delta_n, c.n_s, world, sp);
    const Eigen::Vector2d P_t = P_r - d * tool_t(alpha);

    Eigen::Vector2d n_hat;
    if (trace.refined_path.size() >= 2) {
      n_hat = left_normal(refined_tangent(trace.refined_path, P_t));
    } else {
      n_hat = left_normal(world.planned_path.vertex_tangent(world.planned_path.nearest_vertex(P_t)));
    }

    double omega;
    try {
      omega = torch_omega(V_r, alpha, d, n_hat, sp.singularity_eps);
    } catch (const KinematicSingularity& e) {
      trace.termination = WeldTermination::KinematicSingularity;
      trace.message = e.what();
      return trace;
    }

    WeldStep s;
    s.t = k * sp.dt;
    s.P_r = P_r;
    s.P_s = c.P_s;
    s.P_t = P_t;
    s.alpha = alpha;
    s.delta_t = c.delta_t;
    s.delta_n = c.delta_n;
    s.delta_d = sp.delta_d;
    s.omega = omega;
    s.V_r = V_r;
    s.V_t = torch_velocity(V_r, alpha, d, omega);
    s.n_hat_t = n_hat;
    s.constraint_residual = s.V_t.dot(n_hat);
    s.arclength = c.arclength;
    trace.steps.push_back(s);

    if (c.arclength >= end_s) {
      trace.termination = WeldTermination::PathEnd;
      return trace;
    }
    // P_t = P_r - |d| t_d(alpha) moves with V_r - |d| alpha_dot n_d, so the torch velocity
    // V_r + omega |d| n_d corresponds to alpha_dot = -omega.
    P_r += V_r * sp.dt;
    alpha -= omega * sp.dt;
  }
  trace.termination = WeldTermination::MaxSteps;
  return trace;
}

Polyline2D straight_seam(double length, double resolution) {
  const int n = std::max(1, static_cast<int>(std::ceil(length / resolution)));
  std::vector<Eigen::Vector2d> p;
  for (int i = 0; i <= n; ++i) p.emplace_back(length * i / n, 0.0);
  return Polyline2D(std::move(p));
}

Polyline2D arc_seam(double radius, double angle, double resolution) {
  const int n = std::max(2, static_cast<int>(std::ceil(radius * angle / resolution)));
  std::vector<Eigen::Vector2d> p;
  for (int i = 0; i <= n; ++i) {
    const double a = angle * i / n;
    p.emplace_back(radius * std::sin(a), radius * (1.0 - std::cos(a)));
  }
  return Polyline2D(std::move(p));
}

Polyline2D s_curve_seam(double length, double amplitude, double wavelength, double resolution) {
  const int n = std::max(2, static_cast<int>(std::ceil(length / resolution)));
  std::vector<Eigen::Vector2d> p;
  for (int i = 0; i <= n; ++i) {
    const double x = length * i / n;
    p.emplace_back(x, amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength));
  }
  return Polyline2D(std::move(p));
}

Polyline2D planned_from_seam(const Polyline2D& seam, double spacing, double noise_sigma, std::uint64_t seed) {
  if (!(spacing > 0)) throw InvalidArgument("spacing must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto& pts = seam.points();
  std::vector<Eigen::Vector2d> out;
  const double L = seam.length();
  const int m = std::max(1, static_cast<int>(std::round(L / spacing)));
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double s = L * i / m;
    while (seg + 2 < pts.size() && seg_start + (pts[seg + 1] - pts[seg]).norm() < s) {
      seg_start += (pts[seg + 1] - pts[seg]).norm();
      ++seg;
    }
    const Eigen::Vector2d ab = pts[std::min(seg + 1, pts.size() - 1)] - pts[seg];
    const double len = ab.norm();
    Eigen::Vector2d p = len > 0 ? Eigen::Vector2d(pts[seg] + ab * std::clamp((s - seg_start) / len, 0.0, 1.0)) : pts[seg];
    if (noise_sigma > 0) p += noise_sigma * Eigen::Vector2d(n(rng), n(rng));
    out.push_back(p);
  }
  return Polyline2D(std::move(out));
}

double rms_distance(const std::vector<Eigen::Vector2d>& pts, const Polyline2D& curve) {
  if (pts.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : pts) s += std::pow(curve.project(p).distance, 2);
  return std::sqrt(s / static_cast<double>(pts.size()));
}

}  // namespace flangecal
