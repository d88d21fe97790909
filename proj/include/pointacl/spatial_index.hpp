#ifndef POINTACL_SPATIAL_INDEX_HPP
#define POINTACL_SPATIAL_INDEX_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "pointacl/point_cloud.hpp"

namespace pointacl {

/// Static kd-tree over a point set. Radius and k-nearest queries are exact:
/// they return the same set an exhaustive scan with squared distances would.
class SpatialIndex {
 public:
  static constexpr std::size_t kLeafSize = 8;

  explicit SpatialIndex(std::span<const Point3> points) : points_(points.begin(), points.end()) {
    if (points_.empty()) throw InvalidInput("cannot index an empty point set");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, order_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  /// All indices i with |points[i] - q| <= r, ascending.
  std::vector<std::size_t> radius_query(const Point3& q, double r) const {
    std::vector<std::size_t> out;
    if (r < 0.0) return out;
    radius_recurse(0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// The k nearest indices ordered by (distance, index); ties resolve to the lower index.
  std::vector<std::size_t> knn_query(const Point3& q, std::size_t k) const {
    k = std::min(k, points_.size());
    std::vector<std::size_t> out;
    if (k == 0) return out;
    Heap heap;
    knn_recurse(0, q, k, heap);
    std::vector<Candidate> found;
    found.reserve(heap.size());
    while (!heap.empty()) {
      found.push_back(heap.top());
      heap.pop();
    }
    std::reverse(found.begin(), found.end());
    out.reserve(found.size());
    for (const auto& c : found) out.push_back(c.second);
    return out;
  }

 private:
  struct Node {
    std::size_t begin = 0, end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };
  using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)
  using Heap = std::priority_queue<Candidate>;       // max-heap on (d2, index)

  static double dist2(const Point3& a, const Point3& b) {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
  }

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Point3 lo = Point3::Constant(HUGE_VAL), hi = Point3::Constant(-HUGE_VAL);
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident, keep as leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    Node& n = nodes_[id];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
  }

  // Left children hold coordinates <= split, right children >= split, so the
  // squared offset to the split plane lower-bounds every far-side distance.
  void radius_recurse(std::size_t id, const Point3& q, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if (dist2(points_[order_[i]], q) <= r2) out.push_back(order_[i]);
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    radius_recurse(near, q, r2, out);
    if (diff * diff <= r2) radius_recurse(far, q, r2, out);
  }

  void knn_recurse(std::size_t id, const Point3& q, std::size_t k, Heap& heap) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Candidate c{dist2(points_[order_[i]], q), order_[i]};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff < 0.0 ? n.left : n.right;
    const std::size_t far = diff < 0.0 ? n.right : n.left;
    knn_recurse(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.top().first) knn_recurse(far, q, k, heap);
  }

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

inline SpatialIndex build_index(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("cannot index an empty point cloud");
  return SpatialIndex(cloud.points);
}

}  // namespace pointacl

#endif  // POINTACL_SPATIAL_INDEX_HPP
