#ifndef POINTACL_POINT_CLOUD_HPP
#define POINTACL_POINT_CLOUD_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pointacl/error.hpp"

namespace pointacl {

using Point3 = Eigen::Vector3d;
/// Row-major N x 3 coordinate block, the layout the encoder consumes.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// N ordered points in meters with an optional class label in {1..k}.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<int> label;
  std::string id;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts, std::optional<int> lbl = std::nullopt, std::string ident = {})
      : points(std::move(pts)), label(lbl), id(std::move(ident)) {}

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  Coords coords() const {
    Coords c(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t i = 0; i < points.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    return c;
  }

  static PointCloud from_coords(const Coords& c, std::optional<int> lbl = std::nullopt, std::string ident = {}) {
    std::vector<Point3> pts(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index i = 0; i < c.rows(); ++i) pts[static_cast<std::size_t>(i)] = c.row(i).transpose();
    return PointCloud(std::move(pts), lbl, std::move(ident));
  }

  bool operator==(const PointCloud&) const = default;
};

inline bool all_finite(const PointCloud& cloud) {
  for (const auto& p : cloud.points)
    if (!std::isfinite(p.x()) || !std::isfinite(p.y()) || !std::isfinite(p.z())) return false;
  return true;
}

/// Throws InvalidInput unless the cloud is non-empty with finite coordinates.
inline void require_valid(const PointCloud& cloud, const char* what = "point cloud") {
  if (cloud.empty()) throw InvalidInput(std::string(what) + " is empty");
  if (!all_finite(cloud)) throw InvalidInput(std::string(what) + " has non-finite coordinates");
}

inline Point3 centroid(const PointCloud& cloud) {
  Point3 c = Point3::Zero();
  for (const auto& p : cloud.points) c += p;
  return cloud.empty() ? c : Point3(c / static_cast<double>(cloud.size()));
}

struct Aabb {
  Point3 min;
  Point3 max;
  Point3 extent() const { return max - min; }
};

inline Aabb bounding_box(const PointCloud& cloud) {
  Aabb box{Point3::Constant(HUGE_VAL), Point3::Constant(-HUGE_VAL)};
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

/// Largest distance of any point from the centroid.
inline double radius_about_centroid(const PointCloud& cloud) {
  const Point3 c = centroid(cloud);
  double r = 0.0;
  for (const auto& p : cloud.points) r = std::max(r, (p - c).norm());
  return r;
}

}  // namespace pointacl

#endif  // POINTACL_POINT_CLOUD_HPP
