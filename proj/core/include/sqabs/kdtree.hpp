#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sqabs {

/// Exact nearest-neighbor queries over a fixed 3D point set. The per-axis
/// split gap lower-bounds both the L1 and L2 metric, so pruning stays
/// exact for either.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Eigen::Vector3d> points)
      : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("empty point set");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(points_.size());
    root_ = build(0, order_.size());
  }

  /// Minimum L1 distance from q to the set.
  double nearest_l1(const Eigen::Vector3d& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
  }

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int axis = 0;
    double split = 0.0;
    std::size_t point = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end) {
    if (begin >= end) return -1;
    Eigen::Vector3d lo = points_[order_[begin]];
    Eigen::Vector3d hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    Node node;
    node.axis = axis;
    node.point = order_[mid];
    node.split = points_[order_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid);
    const int right = build(mid + 1, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int idx, const Eigen::Vector3d& q, double& best) const {
    if (idx < 0) return;
    const Node& node = nodes_[idx];
    const double d = (q - points_[node.point]).lpNorm<1>();
    if (d < best) best = d;
    const double gap = q[node.axis] - node.split;
    const int near = gap < 0.0 ? node.left : node.right;
    const int far = gap < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (std::abs(gap) < best) search(far, q, best);
  }

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace sqabs
