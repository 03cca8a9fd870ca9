#include "flangecal/circle_fit.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "flangecal/errors.hpp"

namespace flangecal {

Eigen::Vector3d canonical_normal(Eigen::Vector3d n) {
  n.normalize();
  for (int a = 2; a >= 0; --a) {
    if (n[a] > 0) break;
    if (n[a] < 0) {
      n = -n;
      break;
    }
  }
  return n;
}

CircleFit circle_through_three(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, const Eigen::Vector3d& p3) {
  const Eigen::Vector3d a = p1 - p3;
  const Eigen::Vector3d b = p2 - p3;
  const Eigen::Vector3d axb = a.cross(b);
  const double n2 = axb.squaredNorm();
  if (!(0.5 * std::sqrt(n2) > 1e-12)) throw DegenerateSample("collinear sample");
  CircleFit c;
  c.center = p3 + (a.squaredNorm() * b - b.squaredNorm() * a).cross(axb) / (2.0 * n2);
  c.radius = (p1 - c.center).norm();
  c.normal = canonical_normal(axb);
  return c;
}

double point_circle_distance(const CircleFit& c, const Eigen::Vector3d& p) {
  const Eigen::Vector3d d = p - c.center;
  const double h = d.dot(c.normal);
  const double rho = (d - h * c.normal).norm();
  return std::hypot(h, rho - c.radius);
}

CircleFit refine_circle(const std::vector<Eigen::Vector3d>& pts, const CircleFit& init, int iterations) {
  if (pts.size() < 3) return init;
  Eigen::Vector3d centroid, n;
  fit_plane(pts, centroid, n);
  n = canonical_normal(n);
  const Eigen::Vector3d u = n.unitOrthogonal();
  const Eigen::Vector3d v = n.cross(u);

  // In-plane Gauss-Newton on (cx, cy, r) minimizing sum (|q - c| - r)^2.
  const Eigen::Vector3d c0 = init.center - centroid;
  Eigen::Vector3d x(c0.dot(u), c0.dot(v), init.radius);
  std::vector<Eigen::Vector2d> q(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector3d d = pts[i] - centroid;
    q[i] = {d.dot(u), d.dot(v)};
  }
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (const auto& qi : q) {
      const Eigen::Vector2d d = qi - x.head<2>();
      const double rho = d.norm();
      if (rho == 0.0) continue;
      const Eigen::Vector3d j(-d.x() / rho, -d.y() / rho, -1.0);
      const double r = rho - x.z();
      jtj += j * j.transpose();
      jtr += j * r;
    }
    const Eigen::Vector3d step = jtj.ldlt().solve(-jtr);
    if (!step.allFinite()) break;
    x += step;
  }

  CircleFit out;
  out.center = centroid + x.x() * u + x.y() * v;
  out.normal = n;
  out.radius = std::abs(x.z());
  double s = 0.0;
  for (const auto& p : pts) s += std::pow(point_circle_distance(out, p), 2);
  out.rms_residual = std::sqrt(s / static_cast<double>(pts.size()));
  out.inlier_count = pts.size();
  return out;
}

namespace {

std::size_t count_inliers(const std::vector<Eigen::Vector3d>& pts, const CircleFit& c, double thresh) {
  std::size_t k = 0;
  for (const auto& p : pts)
    if (point_circle_distance(c, p) <= thresh) ++k;
  return k;
}

std::vector<Eigen::Vector3d> collect_inliers(const std::vector<Eigen::Vector3d>& pts, const CircleFit& c,
                                             double thresh) {
  std::vector<Eigen::Vector3d> in;
  for (const auto& p : pts)
    if (point_circle_distance(c, p) <= thresh) in.push_back(p);
  return in;
}

}  // namespace

CircleFit ransac_circle(const PointCloud& cloud, const RansacParams& params) {
  if (params.sample_size != 3) throw InvalidArgument("sample_size must be 3");
  if (!(params.distance_threshold > 0 && params.radius_tolerance > 0 && params.expected_radius > 0) ||
      params.max_iterations < 1)
    throw InvalidArgument("invalid RANSAC parameters");
  const auto& pts = cloud.points;
  const std::size_t n = pts.size();
  if (n < 3) throw InsufficientPoints("RANSAC needs at least 3 points");

  std::mt19937_64 rng(params.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double min_count = params.min_inlier_fraction * static_cast<double>(n);

  CircleFit best;
  std::size_t best_count = 0;
  bool found = false;
  for (int it = 0; it < params.max_iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    std::size_t k = pick(rng);
    if (i == j || j == k || i == k) continue;
    CircleFit cand;
    try {
      cand = circle_through_three(pts[i], pts[j], pts[k]);
    } catch (const DegenerateSample&) {
      continue;
    }
    if (std::abs(cand.radius - params.expected_radius) > params.radius_tolerance) continue;
    const std::size_t cnt = count_inliers(pts, cand, params.distance_threshold);
    if (static_cast<double>(cnt) < min_count || cnt <= best_count) continue;
    best = cand;
    best_count = cnt;
    found = true;
    if (static_cast<double>(cnt) > params.early_exit_fraction * static_cast<double>(n)) break;
  }
  if (!found) throw NoModelFound("no circle passed the radius check with enough inliers");

  best.inlier_count = best_count;
  CircleFit refined = refine_circle(collect_inliers(pts, best, params.distance_threshold), best,
                                    params.refine_iterations);
  if (std::abs(refined.radius - params.expected_radius) > params.radius_tolerance || !refined.center.allFinite()) {
    auto in = collect_inliers(pts, best, params.distance_threshold);
    double s = 0.0;
    for (const auto& p : in) s += std::pow(point_circle_distance(best, p), 2);
    best.rms_residual = std::sqrt(s / static_cast<double>(in.size()));
    return best;
  }
  refined.inlier_count = count_inliers(pts, refined, params.distance_threshold);
  return refined;
}

Eigen::Vector3d flange_tcp_from_scene(const PointCloud& scene, const SceneParams& params, CircleFit* fit_out) {
  PointCloud cropped = pass_through(scene, params.box);
  if (cropped.size() > static_cast<std::size_t>(params.outlier.k_neighbors))
    cropped = remove_statistical_outliers(cropped, params.outlier);
  for (const auto& cluster : euclidean_clusters(cropped, params.cluster)) {
    const PointCloud rim = extract_boundary(cluster, params.boundary);
    if (rim.size() < 3) continue;
    try {
      const CircleFit fit = ransac_circle(rim, params.ransac);
      if (fit_out) *fit_out = fit;
      return fit.center;
    } catch (const NoModelFound&) {
    }
  }
  throw SegmentationFailed("no cluster produced a flange circle");
}

}  // namespace flangecal
