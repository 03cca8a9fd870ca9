#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace flangecal {

/// Static 3D k-d tree over a borrowed point array. Ties in distance are broken by the
/// lower input index so every query is deterministic.
class KdTree {
 public:
  explicit KdTree(const std::vector<Eigen::Vector3d>& points);

  /// k nearest neighbours as (squared distance, index), ascending.
  std::vector<std::pair<double, std::size_t>> knn(const Eigen::Vector3d& q, std::size_t k) const;

  /// Indices within `radius` (inclusive), sorted ascending by index.
  std::vector<std::size_t> radius_search(const Eigen::Vector3d& q, double radius) const;

  /// Nearest point index, or -1 when none lies within max_dist.
  long nearest(const Eigen::Vector3d& q, double max_dist, double* dist2 = nullptr) const;

  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    std::size_t begin, end;  // range in idx_
    int axis = -1;           // -1 for leaf
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void knn_rec(int node, const Eigen::Vector3d& q, std::size_t k,
               std::vector<std::pair<double, std::size_t>>& heap) const;
  void radius_rec(int node, const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const;

  const std::vector<Eigen::Vector3d>& pts_;
  std::vector<std::size_t> idx_;
  std::vector<Node> nodes_;
};

}  // namespace flangecal
