#include "flangecal/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace flangecal {

namespace {
constexpr std::size_t kLeafSize = 12;
}

KdTree::KdTree(const std::vector<Eigen::Vector3d>& points) : pts_(points), idx_(points.size()) {
  std::iota(idx_.begin(), idx_.end(), std::size_t{0});
  if (!pts_.empty()) {
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    build(0, pts_.size());
  }
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = pts_[idx_[begin]], hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(pts_[idx_[i]]);
    hi = hi.cwiseMax(pts_[idx_[i]]);
  }
  int axis;
  if ((hi - lo).maxCoeff(&axis) <= 0.0) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double va = pts_[a][axis], vb = pts_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const double split = pts_[idx_[mid]][axis];
  const int l = build(begin, mid);
  const int r = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

namespace {
bool closer(const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
  return a.first < b.first || (a.first == b.first && a.second < b.second);
}
}  // namespace

void KdTree::knn_rec(int node, const Eigen::Vector3d& q, std::size_t k,
                     std::vector<std::pair<double, std::size_t>>& heap) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t id = idx_[i];
      std::pair<double, std::size_t> cand{(pts_[id] - q).squaredNorm(), id};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0 ? n.left : n.right;
  const int second = diff < 0 ? n.right : n.left;
  knn_rec(first, q, k, heap);
  // Points equal to the split may sit on either side, hence <=.
  if (heap.size() < k || diff * diff <= heap.front().first) knn_rec(second, q, k, heap);
}

std::vector<std::pair<double, std::size_t>> KdTree::knn(const Eigen::Vector3d& q, std::size_t k) const {
  std::vector<std::pair<double, std::size_t>> heap;
  if (k == 0 || pts_.empty()) return heap;
  heap.reserve(k);
  knn_rec(0, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::radius_rec(int node, const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i)
      if ((pts_[idx_[i]] - q).squaredNorm() <= r2) out.push_back(idx_[i]);
    return;
  }
  const double diff = q[n.axis] - n.split;
  if (diff <= 0 || diff * diff <= r2) radius_rec(n.left, q, r2, out);
  if (diff >= 0 || diff * diff <= r2) radius_rec(n.right, q, r2, out);
}

std::vector<std::size_t> KdTree::radius_search(const Eigen::Vector3d& q, double radius) const {
  std::vector<std::size_t> out;
  if (pts_.empty() || radius < 0) return out;
  radius_rec(0, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

long KdTree::nearest(const Eigen::Vector3d& q, double max_dist, double* dist2) const {
  const auto r = knn(q, 1);
  if (r.empty() || r[0].first > max_dist * max_dist) return -1;
  if (dist2) *dist2 = r[0].first;
  return static_cast<long>(r[0].second);
}

}  // namespace flangecal
