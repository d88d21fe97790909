#ifndef POINTACL_GEOMETRY_HPP
#define POINTACL_GEOMETRY_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "pointacl/parallel.hpp"
#include "pointacl/point_cloud.hpp"
#include "pointacl/spatial_index.hpp"

namespace pointacl {

/// Neighbors used when the radius ball holds fewer than three points.
inline constexpr std::size_t kFallbackNeighbors = 8;

/// Per-point multi-scale normal differences for a radius pair r1 < r2.
struct DoNField {
  double r1 = 0.0;
  double r2 = 0.0;
  std::vector<Point3> diffs;
  std::vector<double> magnitudes;  // |diffs[i]|, in [0, 1]

  std::size_t size() const noexcept { return magnitudes.size(); }
};

/// Unit eigenvector of the smallest eigenvalue of the neighborhood covariance.
inline Point3 normal_from_neighbors(const SpatialIndex& index, const std::vector<std::size_t>& nbrs) {
  Point3 mean = Point3::Zero();
  for (auto j : nbrs) mean += index.point(j);
  mean /= static_cast<double>(nbrs.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto j : nbrs) {
    const Point3 d = index.point(j) - mean;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // eigenvalues are sorted ascending
  Point3 n = solver.eigenvectors().col(0);
  return n / n.norm();
}

/// PCA surface normal at point `point_idx` using the support ball of radius r.
/// Sparse balls (< 3 points) fall back to the 8 nearest neighbors.
inline Point3 estimate_normal(const PointCloud& cloud, const SpatialIndex& index, std::size_t point_idx, double r) {
  if (cloud.size() < 3) throw DegenerateNormal("normal undefined for a cloud with fewer than 3 points");
  if (!(r > 0.0)) throw InvalidInput("support radius must be positive");
  if (point_idx >= cloud.size() || index.size() != cloud.size())
    throw InvalidInput("point index or spatial index does not match the cloud");
  const Point3& p = cloud.points[point_idx];
  auto nbrs = index.radius_query(p, r);
  if (nbrs.size() < 3) nbrs = index.knn_query(p, kFallbackNeighbors);
  return normal_from_neighbors(index, nbrs);
}

/// Difference-of-normals field: diff = (n(p, r1) - n(p, r2)) / 2 with the
/// large-scale normal flipped into the hemisphere of the small-scale one.
inline DoNField don_field(const PointCloud& cloud, double r1, double r2) {
  if (!(r1 > 0.0) || !(r1 < r2)) throw InvalidInput("invalid radii: require 0 < r1 < r2");
  require_valid(cloud);
  if (cloud.size() < 3) throw DegenerateNormal("normal undefined for a cloud with fewer than 3 points");
  const SpatialIndex index = build_index(cloud);
  DoNField field;
  field.r1 = r1;
  field.r2 = r2;
  field.diffs.resize(cloud.size());
  field.magnitudes.resize(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const Point3 n1 = estimate_normal(cloud, index, i, r1);
    Point3 n2 = estimate_normal(cloud, index, i, r2);
    if (n1.dot(n2) < 0.0) n2 = -n2;
    field.diffs[i] = (n1 - n2) / 2.0;
    field.magnitudes[i] = field.diffs[i].norm();
  });
  return field;
}

/// Number of points kept for keep fraction c: ceil(c * N), at least one.
inline std::size_t keep_count(std::size_t n, double keep_fraction) {
  // the small slack absorbs products such as 0.7 * 10 = 7.000000000000001
  const double raw = std::ceil(keep_fraction * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 0.0)), 1, n);
}

/// Indices of the ceil(c*N) largest magnitudes, ties to the lower index, returned ascending.
inline std::vector<std::size_t> select_high_difference_indices(std::span<const double> magnitudes, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction < 1.0)) throw InvalidInput("keep fraction must lie in (0, 1)");
  if (magnitudes.empty()) throw InvalidInput("empty magnitude field");
  std::vector<std::size_t> order(magnitudes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitudes[a] > magnitudes[b]; });
  order.resize(keep_count(magnitudes.size(), keep_fraction));
  std::sort(order.begin(), order.end());
  return order;
}

/// The high-difference part X_hd of a cloud, original relative order preserved.
inline PointCloud select_high_difference(const PointCloud& cloud, const DoNField& field, double keep_fraction) {
  if (field.size() != cloud.size() || field.diffs.size() != cloud.size())
    throw InvalidInput("DoN field does not match the cloud");
  PointCloud out;
  out.label = cloud.label;
  out.id = cloud.id;
  for (auto i : select_high_difference_indices(field.magnitudes, keep_fraction)) out.points.push_back(cloud.points[i]);
  return out;
}

}  // namespace pointacl

#endif  // POINTACL_GEOMETRY_HPP
