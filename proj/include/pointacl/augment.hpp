#ifndef POINTACL_AUGMENT_HPP
#define POINTACL_AUGMENT_HPP

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "pointacl/point_cloud.hpp"

namespace pointacl {

/// Sampling ranges of the augmentation family. Defaults follow the
/// pretraining recipe (15 degree rotations, scale in [0.8, 1.25], ...).
struct AugmentationBounds {
  double rotation_deg = 15.0;
  double translation = 0.10;  // fraction of the per-axis bounding-box extent
  double scale_min = 0.8;
  double scale_max = 1.25;
  double crop_volume_min = 0.60;
  double crop_volume_max = 1.00;
  double aspect_min = 0.75;
  double aspect_max = 1.33;
  double cutout_min = 0.10;
  double cutout_max = 0.40;
  double jitter = 0.05;
  double dropout_max = 0.70;
  bool crop = true;
  bool cutout = true;
};

/// Axis-aligned cuboid expressed relative to the cloud bounding box at the
/// stage it is applied: center = min + center_frac * extent, size = extent_frac * extent.
struct Cuboid {
  Point3 center_frac = Point3::Constant(0.5);
  Point3 extent_frac = Point3::Ones();

  bool operator==(const Cuboid&) const = default;
};

struct AugmentationSpec {
  std::array<double, 3> rotation_deg{0.0, 0.0, 0.0};
  std::array<double, 3> translation{0.0, 0.0, 0.0};
  double scale = 1.0;
  std::optional<Cuboid> crop;
  std::optional<Cuboid> cutout;
  double jitter = 0.0;  // per-coordinate offsets drawn from [0, jitter] with random sign
  std::uint64_t jitter_seed = 0;
  double dropout_ratio = 0.0;
  std::size_t target_count = 0;  // 0 keeps the post-removal count
  bool normalize = false;
  std::uint64_t sample_seed = 0;  // drives dropout and re-sampling

  static AugmentationSpec identity(std::size_t n) {
    AugmentationSpec s;
    s.target_count = n;
    return s;
  }

  bool operator==(const AugmentationSpec&) const = default;
};

/// Side information from apply(): source index of every output point and
/// how often a removal stage had to be skipped because it emptied the cloud.
struct AugmentReport {
  std::vector<std::size_t> source_indices;
  std::size_t crop_retries = 0;
  std::size_t cutout_retries = 0;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool inside(const Point3& p, const Point3& lo, const Point3& hi) {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

inline void keep_where(std::vector<Point3>& pts, std::vector<std::size_t>& src, const std::vector<char>& keep) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!keep[i]) continue;
    pts[w] = pts[i];
    src[w] = src[i];
    ++w;
  }
  pts.resize(w);
  src.resize(w);
}

inline std::vector<char> cuboid_mask(const std::vector<Point3>& pts, const Cuboid& c, bool inside_value) {
  Aabb box{Point3::Constant(HUGE_VAL), Point3::Constant(-HUGE_VAL)};
  for (const auto& p : pts) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  const Point3 ext = box.extent();
  const Point3 center = box.min + c.center_frac.cwiseProduct(ext);
  const Point3 half = c.extent_frac.cwiseProduct(ext) / 2.0;
  std::vector<char> mask(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    mask[i] = static_cast<char>(inside(pts[i], center - half, center + half) == inside_value);
  return mask;
}

}  // namespace detail

/// Draws one augmentation from the family. Deterministic in `seed`.
inline AugmentationSpec sample_spec(std::uint64_t seed, std::size_t target_count = 0,
                                    const AugmentationBounds& b = {}) {
  std::mt19937_64 rng(seed);
  AugmentationSpec s;
  for (auto& a : s.rotation_deg) a = detail::uniform(rng, -b.rotation_deg, b.rotation_deg);
  for (auto& t : s.translation) t = detail::uniform(rng, -b.translation, b.translation);
  s.scale = detail::uniform(rng, b.scale_min, b.scale_max);

  if (b.crop) {
    const double volume = detail::uniform(rng, b.crop_volume_min, b.crop_volume_max);
    Point3 dims = Point3::Constant(std::cbrt(volume));
    // rejection keeps the exact volume with both side ratios (x:z, y:z) in range and no side above 1
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double ax = detail::uniform(rng, b.aspect_min, b.aspect_max);
      const double ay = detail::uniform(rng, b.aspect_min, b.aspect_max);
      const double base = std::cbrt(volume / (ax * ay));
      const Point3 cand(ax * base, ay * base, base);
      if (cand.maxCoeff() <= 1.0) {
        dims = cand;
        break;
      }
    }
    Cuboid crop;
    crop.extent_frac = dims;
    for (int k = 0; k < 3; ++k) crop.center_frac[k] = detail::uniform(rng, dims[k] / 2.0, 1.0 - dims[k] / 2.0);
    s.crop = crop;
  }
  if (b.cutout) {
    Cuboid cut;
    for (int k = 0; k < 3; ++k) cut.extent_frac[k] = detail::uniform(rng, b.cutout_min, b.cutout_max);
    for (int k = 0; k < 3; ++k) cut.center_frac[k] = detail::uniform(rng, 0.0, 1.0);
    s.cutout = cut;
  }
  s.jitter = b.jitter;
  s.jitter_seed = rng();
  s.dropout_ratio = detail::uniform(rng, 0.0, b.dropout_max);
  s.sample_seed = rng();
  s.target_count = target_count;
  s.normalize = true;
  return s;
}

/// Re-samples to exactly `target` points: a random order-preserving subset
/// when there are too many, all points plus uniform draws with replacement
/// when there are too few.
inline void resample_to(std::vector<Point3>& pts, std::vector<std::size_t>& src, std::size_t target,
                        std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  if (target == 0 || target == n || n == 0) return;
  if (n > target) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + std::uniform_int_distribution<std::size_t>(0, n - 1 - i)(rng);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    std::vector<Point3> p2(target);
    std::vector<std::size_t> s2(target);
    for (std::size_t i = 0; i < target; ++i) {
      p2[i] = pts[idx[i]];
      s2[i] = src[idx[i]];
    }
    pts = std::move(p2);
    src = std::move(s2);
    return;
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = n; i < target; ++i) {
    const std::size_t j = pick(rng);
    pts.push_back(pts[j]);
    src.push_back(src[j]);
  }
}

/// Centers on the centroid and scales the farthest point onto the unit sphere.
inline void normalize_unit_sphere(std::vector<Point3>& pts) {
  if (pts.empty()) return;
  Point3 c = Point3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double r = 0.0;
  for (auto& p : pts) {
    p -= c;
    r = std::max(r, p.norm());
  }
  if (r > 0.0)
    for (auto& p : pts) p /= r;
}

inline PointCloud normalized(PointCloud cloud) {
  normalize_unit_sphere(cloud.points);
  return cloud;
}

/// Applies the augmentation in the fixed order rotation, translation, scale,
/// crop, cutout, jitter, dropout, re-sample, normalize. Identity stages are skipped.
inline PointCloud apply(const PointCloud& cloud, const AugmentationSpec& spec, AugmentReport* report = nullptr) {
  require_valid(cloud);
  std::vector<Point3> pts = cloud.points;
  std::vector<std::size_t> src(pts.size());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = i;
  AugmentReport local;
  AugmentReport& rep = report ? *report : local;
  rep = AugmentReport{};

  if (spec.rotation_deg != std::array<double, 3>{0.0, 0.0, 0.0}) {
    constexpr double kDeg = std::numbers::pi / 180.0;
    const Eigen::Matrix3d R = (Eigen::AngleAxisd(spec.rotation_deg[2] * kDeg, Point3::UnitZ()) *
                               Eigen::AngleAxisd(spec.rotation_deg[1] * kDeg, Point3::UnitY()) *
                               Eigen::AngleAxisd(spec.rotation_deg[0] * kDeg, Point3::UnitX()))
                                  .toRotationMatrix();
    for (auto& p : pts) p = R * p;
  }
  if (spec.translation != std::array<double, 3>{0.0, 0.0, 0.0}) {
    Aabb box{Point3::Constant(HUGE_VAL), Point3::Constant(-HUGE_VAL)};
    for (const auto& p : pts) {
      box.min = box.min.cwiseMin(p);
      box.max = box.max.cwiseMax(p);
    }
    const Point3 t = Point3(spec.translation[0], spec.translation[1], spec.translation[2]).cwiseProduct(box.extent());
    for (auto& p : pts) p += t;
  }
  if (spec.scale != 1.0)
    for (auto& p : pts) p *= spec.scale;

  if (spec.crop) {
    auto keep = detail::cuboid_mask(pts, *spec.crop, true);
    if (std::find(keep.begin(), keep.end(), char{1}) == keep.end())
      ++rep.crop_retries;  // empty crop: fall back to the full volume
    else
      detail::keep_where(pts, src, keep);
  }
  if (spec.cutout) {
    auto keep = detail::cuboid_mask(pts, *spec.cutout, false);
    if (std::find(keep.begin(), keep.end(), char{1}) == keep.end())
      ++rep.cutout_retries;
    else
      detail::keep_where(pts, src, keep);
  }
  if (spec.jitter > 0.0) {
    std::mt19937_64 rng(spec.jitter_seed);
    std::uniform_real_distribution<double> mag(0.0, spec.jitter);
    std::bernoulli_distribution sign(0.5);
    for (auto& p : pts)
      for (int k = 0; k < 3; ++k) {
        const double m = mag(rng);
        p[k] += sign(rng) ? m : -m;
      }
  }

  std::mt19937_64 rng(spec.sample_seed);
  if (spec.dropout_ratio > 0.0) {
    const std::size_t n = pts.size();
    std::size_t drop = static_cast<std::size_t>(std::floor(spec.dropout_ratio * static_cast<double>(n)));
    drop = std::min(drop, n - 1);
    resample_to(pts, src, n - drop, rng);
  }
  resample_to(pts, src, spec.target_count, rng);
  if (spec.normalize) normalize_unit_sphere(pts);

  rep.source_indices = src;
  return PointCloud(std::move(pts), cloud.label, cloud.id);
}

}  // namespace pointacl

#endif  // POINTACL_AUGMENT_HPP
