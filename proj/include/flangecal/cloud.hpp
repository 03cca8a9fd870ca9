#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "flangecal/se3.hpp"

namespace flangecal {

/// Ordered point list in meters. An empty cloud is legal.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::string frame_tag;
  std::string source;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Eigen::Vector3d centroid() const;
};

PointCloud transform_cloud(const RigidTransform& t, const PointCloud& cloud);

struct PassThroughBox {
  Eigen::Vector3d min = Eigen::Vector3d::Constant(-1e9);
  Eigen::Vector3d max = Eigen::Vector3d::Constant(1e9);
};

struct OutlierParams {
  int k_neighbors = 20;
  double std_multiplier = 2.0;
};

struct ClusterParams {
  double cluster_tolerance = 0.002;
  int min_points = 50;
  /// Largest allowed cluster range, measured as the point-set diameter.
  double max_extent = 0.0682;
};

struct BoundaryParams {
  double radius = 0.002;
  double min_gap = 1.5707963267948966;  // pi/2
  int min_neighbors = 3;
};

PointCloud pass_through(const PointCloud& cloud, const PassThroughBox& box);

/// Keeps points whose mean k-NN distance is at most mean + std_multiplier * std of those
/// means (sample std). Throws InsufficientPoints for fewer than k+1 points.
PointCloud remove_statistical_outliers(const PointCloud& cloud, const OutlierParams& p);

/// Connected components under the cluster_tolerance adjacency, largest first. Clusters with
/// fewer than min_points points or a diameter above max_extent are dropped. Points keep input
/// order inside each cluster.
std::vector<PointCloud> euclidean_clusters(const PointCloud& cloud, const ClusterParams& p);

/// Max pairwise distance; exact, with cheap bounds tried first.
double point_set_diameter(const std::vector<Eigen::Vector3d>& pts);
bool diameter_at_most(const std::vector<Eigen::Vector3d>& pts, double limit);

/// Rim points of a roughly planar patch: a point is kept when its in-plane neighbourhood
/// leaves an angular gap larger than min_gap, or it has too few neighbours.
PointCloud extract_boundary(const PointCloud& cloud, const BoundaryParams& p);

/// Least-squares plane through the points: centroid and unit normal (smallest PCA axis).
void fit_plane(const std::vector<Eigen::Vector3d>& pts, Eigen::Vector3d& centroid, Eigen::Vector3d& normal);

}  // namespace flangecal
