#include "flangecal/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "flangecal/errors.hpp"
#include "flangecal/kdtree.hpp"

namespace flangecal {

Eigen::Vector3d PointCloud::centroid() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  if (points.empty()) return c;
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

PointCloud transform_cloud(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out{{}, cloud.frame_tag, cloud.source};
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(t * p);
  return out;
}

PointCloud pass_through(const PointCloud& cloud, const PassThroughBox& box) {
  if ((box.min.array() > box.max.array()).any()) throw InvalidArgument("pass-through box has min > max");
  PointCloud out{{}, cloud.frame_tag, cloud.source};
  for (const auto& p : cloud.points)
    if ((p.array() >= box.min.array()).all() && (p.array() <= box.max.array()).all()) out.points.push_back(p);
  return out;
}

PointCloud remove_statistical_outliers(const PointCloud& cloud, const OutlierParams& p) {
  if (p.k_neighbors < 1) throw InvalidArgument("k_neighbors must be >= 1");
  const std::size_t n = cloud.size();
  if (n == 0) return cloud;
  const std::size_t k = static_cast<std::size_t>(p.k_neighbors);
  if (n < k + 1) throw InsufficientPoints("outlier removal needs at least k+1 points");

  KdTree tree(cloud.points);
  std::vector<double> mean_d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = tree.knn(cloud.points[i], k + 1);
    double s = 0.0;
    std::size_t used = 0;
    for (const auto& [d2, j] : nn) {
      if (j == i || used == k) continue;
      s += std::sqrt(d2);
      ++used;
    }
    mean_d[i] = s / static_cast<double>(used);
  }
  const double mu = std::accumulate(mean_d.begin(), mean_d.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double d : mean_d) var += (d - mu) * (d - mu);
  const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
  const double thresh = mu + p.std_multiplier * sd;

  PointCloud out{{}, cloud.frame_tag, cloud.source};
  for (std::size_t i = 0; i < n; ++i)
    if (mean_d[i] <= thresh) out.points.push_back(cloud.points[i]);
  return out;
}

double point_set_diameter(const std::vector<Eigen::Vector3d>& pts) {
  double best2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) best2 = std::max(best2, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(best2);
}

bool diameter_at_most(const std::vector<Eigen::Vector3d>& pts, double limit) {
  if (pts.size() < 2) return true;
  Eigen::Vector3d lo = pts[0], hi = pts[0];
  std::size_t amin[3] = {0, 0, 0}, amax[3] = {0, 0, 0};
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    c += pts[i];
    for (int a = 0; a < 3; ++a) {
      if (pts[i][a] < lo[a]) lo[a] = pts[i][a], amin[a] = i;
      if (pts[i][a] > hi[a]) hi[a] = pts[i][a], amax[a] = i;
    }
  }
  if ((hi - lo).norm() <= limit) return true;
  // Extreme pairs along each axis catch most oversized sets immediately.
  for (int a = 0; a < 3; ++a)
    if ((pts[amin[a]] - pts[amax[a]]).norm() > limit) return false;
  c /= static_cast<double>(pts.size());
  double rmax = 0.0;
  for (const auto& p : pts) rmax = std::max(rmax, (p - c).norm());
  if (2.0 * rmax <= limit) return true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // Only points far from the centroid can be part of an oversized pair.
    if ((pts[i] - c).norm() + rmax <= limit) continue;
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() > limit) return false;
  }
  return true;
}

std::vector<PointCloud> euclidean_clusters(const PointCloud& cloud, const ClusterParams& p) {
  if (!(p.cluster_tolerance > 0)) throw InvalidArgument("cluster_tolerance must be positive");
  const std::size_t n = cloud.size();
  std::vector<PointCloud> out;
  if (n == 0) return out;

  KdTree tree(cloud.points);
  std::vector<long> label(n, -1);
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (label[seed] >= 0) continue;
    const long id = static_cast<long>(comps.size());
    comps.emplace_back();
    label[seed] = id;
    frontier.assign(1, seed);
    while (!frontier.empty()) {
      const std::size_t cur = frontier.back();
      frontier.pop_back();
      comps.back().push_back(cur);
      for (std::size_t nb : tree.radius_search(cloud.points[cur], p.cluster_tolerance)) {
        if (label[nb] < 0) {
          label[nb] = id;
          frontier.push_back(nb);
        }
      }
    }
    std::sort(comps.back().begin(), comps.back().end());
  }

  std::stable_sort(comps.begin(), comps.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& comp : comps) {
    if (comp.size() < static_cast<std::size_t>(std::max(p.min_points, 0))) continue;
    PointCloud c{{}, cloud.frame_tag, cloud.source};
    c.points.reserve(comp.size());
    for (std::size_t i : comp) c.points.push_back(cloud.points[i]);
    if (!diameter_at_most(c.points, p.max_extent)) continue;
    out.push_back(std::move(c));
  }
  return out;
}

void fit_plane(const std::vector<Eigen::Vector3d>& pts, Eigen::Vector3d& centroid, Eigen::Vector3d& normal) {
  centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(std::max<std::size_t>(pts.size(), 1));
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  normal = es.eigenvectors().col(0).normalized();
}

PointCloud extract_boundary(const PointCloud& cloud, const BoundaryParams& p) {
  PointCloud out{{}, cloud.frame_tag, cloud.source};
  if (cloud.size() < 3) return cloud;
  Eigen::Vector3d c, nrm;
  fit_plane(cloud.points, c, nrm);
  const Eigen::Vector3d u = nrm.unitOrthogonal();
  const Eigen::Vector3d v = nrm.cross(u);

  KdTree tree(cloud.points);
  std::vector<double> ang;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& q = cloud.points[i];
    ang.clear();
    for (std::size_t j : tree.radius_search(q, p.radius)) {
      if (j == i) continue;
      const Eigen::Vector3d d = cloud.points[j] - q;
      const double x = d.dot(u), y = d.dot(v);
      if (x == 0.0 && y == 0.0) continue;
      ang.push_back(std::atan2(y, x));
    }
    bool edge = static_cast<int>(ang.size()) < p.min_neighbors;
    if (!edge) {
      std::sort(ang.begin(), ang.end());
      double gap = ang.front() + 2.0 * std::numbers::pi - ang.back();
      for (std::size_t k = 1; k < ang.size(); ++k) gap = std::max(gap, ang[k] - ang[k - 1]);
      edge = gap > p.min_gap;
    }
    if (edge) out.points.push_back(q);
  }
  return out;
}

}  // namespace flangecal
