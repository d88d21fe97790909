#ifndef POINTACL_SHAPES_HPP
#define POINTACL_SHAPES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pointacl/point_cloud.hpp"

namespace pointacl {

/// Analytic surface families for the synthetic benchmark. Every instance is
/// scaled so the farthest surface point lies exactly on the unit sphere.
enum class Shape { sphere, cube, cylinder, cone, torus, crease, pyramid, capsule };

inline constexpr std::array<Shape, 8> kAllShapes{Shape::sphere, Shape::cube,    Shape::cylinder, Shape::cone,
                                                 Shape::torus,  Shape::crease,  Shape::pyramid,  Shape::capsule};

inline std::string_view shape_name(Shape s) {
  switch (s) {
    case Shape::sphere: return "sphere";
    case Shape::cube: return "cube";
    case Shape::cylinder: return "cylinder";
    case Shape::cone: return "cone";
    case Shape::torus: return "torus";
    case Shape::crease: return "two-plane-crease";
    case Shape::pyramid: return "pyramid";
    case Shape::capsule: return "capsule";
  }
  return "?";
}

/// Accepts the canonical names plus "crease" as a short form of "two-plane-crease".
inline Shape parse_shape(std::string_view name) {
  if (name == "crease") return Shape::crease;
  for (Shape s : kAllShapes)
    if (shape_name(s) == name) return s;
  throw InvalidInput("unknown shape family '" + std::string(name) + "'");
}

/// One member of a family. `ratio` and `ratio2` are the free proportions
/// (their meaning depends on the family, see sample_shape()).
struct ShapeParams {
  Shape shape = Shape::sphere;
  double ratio = 1.0;
  double ratio2 = 1.0;
};

/// Draws family proportions from fixed per-family ranges.
inline ShapeParams random_shape_params(Shape s, std::mt19937_64& rng) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ShapeParams p{s, 1.0, 1.0};
  switch (s) {
    case Shape::sphere: break;
    case Shape::cube: p.ratio = u(0.75, 1.0); p.ratio2 = u(0.75, 1.0); break;   // box side ratios
    case Shape::cylinder: p.ratio = u(0.6, 1.6); break;                          // half-height / radius
    case Shape::cone: p.ratio = u(0.5, 1.5); break;                              // half-height / base radius
    case Shape::torus: p.ratio = u(0.25, 0.5); break;                            // tube / ring radius
    case Shape::crease: p.ratio = u(0.8, 1.2); break;                            // arm width / half-length
    case Shape::pyramid: p.ratio = u(0.6, 1.4); break;                           // half-height / base half-side
    case Shape::capsule: p.ratio = u(0.5, 1.5); break;                           // half-height / radius
  }
  return p;
}

namespace detail {

inline double segment_distance_2d(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double t = std::clamp(((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy), 0.0, 1.0);
  return std::hypot(px - ax - t * vx, py - ay - t * vy);
}

/// Distance from p to triangle abc (closest-point construction by Voronoi regions).
inline double triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
  const Point3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (p - a).norm();
  const Point3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (p - b).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Point3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (p - c).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

struct Box { Point3 half; };
struct Cylinder { double radius, half_height; };
struct Cone { double radius, half_height; };
struct Torus { double ring, tube; };
struct Crease { double half_length, width, scale; Point3 shift; };
struct Pyramid { double half_side, half_height, scale; };
struct Capsule { double radius, half_height; };

inline Box box_of(const ShapeParams& p) {
  const Point3 e(1.0, p.ratio, p.ratio2);
  return {e / e.norm()};
}
inline Cylinder cylinder_of(const ShapeParams& p) {
  const double r = 1.0 / std::sqrt(1.0 + p.ratio * p.ratio);
  return {r, p.ratio * r};
}
inline Cone cone_of(const ShapeParams& p) {
  const double r = 1.0 / std::sqrt(1.0 + p.ratio * p.ratio);
  return {r, p.ratio * r};
}
inline Torus torus_of(const ShapeParams& p) {
  const double ring = 1.0 / (1.0 + p.ratio);
  return {ring, p.ratio * ring};
}
// Arms {(x, s, 0)} and {(x, 0, s)}, x in [-L, L], s in [0, W], shifted by
// their area centroid (0, W/4, W/4) and scaled by the farthest corner.
inline Crease crease_of(const ShapeParams& p) {
  const double L = 1.0, W = p.ratio;
  return {L, W, 1.0 / std::sqrt(L * L + 0.5625 * W * W + 0.0625 * W * W), Point3(0.0, W / 4.0, W / 4.0)};
}
// Square base at z = -h, apex at z = +h; scaled by the farthest vertex.
inline Pyramid pyramid_of(const ShapeParams& p) {
  const double w = 1.0, h = p.ratio;
  return {w, h, 1.0 / std::max(h, std::sqrt(2.0 * w * w + h * h))};
}
inline Capsule capsule_of(const ShapeParams& p) {
  const double r = 1.0 / (1.0 + p.ratio);
  return {r, p.ratio * r};
}

inline std::array<Point3, 5> pyramid_vertices(const Pyramid& py) {
  const double w = py.half_side * py.scale, h = py.half_height * py.scale;
  return {Point3(-w, -w, -h), Point3(w, -w, -h), Point3(w, w, -h), Point3(-w, w, -h), Point3(0, 0, h)};
}

}  // namespace detail

/// Unsigned distance from p to the exact (noise-free) surface.
inline double surface_distance(const ShapeParams& sp, const Point3& p) {
  using namespace detail;
  switch (sp.shape) {
    case Shape::sphere: return std::abs(p.norm() - 1.0);
    case Shape::cube: {
      const Point3 e = box_of(sp).half;
      const Point3 q = p.cwiseAbs() - e;
      if ((q.array() <= 0.0).all()) return -q.maxCoeff();
      return q.cwiseMax(0.0).norm();
    }
    case Shape::cylinder: {
      const auto c = cylinder_of(sp);
      const double dr = std::hypot(p.x(), p.y()) - c.radius, dz = std::abs(p.z()) - c.half_height;
      if (dr <= 0 && dz <= 0) return -std::max(dr, dz);
      return std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
    }
    case Shape::cone: {
      const auto c = cone_of(sp);
      const double r = std::hypot(p.x(), p.y()), z = p.z();
      return std::min(segment_distance_2d(r, z, 0.0, c.half_height, c.radius, -c.half_height),
                      segment_distance_2d(r, z, 0.0, -c.half_height, c.radius, -c.half_height));
    }
    case Shape::torus: {
      const auto t = torus_of(sp);
      return std::abs(std::hypot(std::hypot(p.x(), p.y()) - t.ring, p.z()) - t.tube);
    }
    case Shape::crease: {
      const auto c = crease_of(sp);
      const Point3 q = p / c.scale + c.shift;  // back to the unshifted, unscaled frame
      const double dx = std::max(std::abs(q.x()) - c.half_length, 0.0);
      const auto arm = [&](double along, double off) {
        const double ds = std::max({-along, along - c.width, 0.0});
        return std::sqrt(dx * dx + ds * ds + off * off);
      };
      return std::min(arm(q.y(), q.z()), arm(q.z(), q.y())) * c.scale;
    }
    case Shape::pyramid: {
      const auto v = pyramid_vertices(pyramid_of(sp));
      double d = std::min(triangle_distance(p, v[0], v[1], v[2]), triangle_distance(p, v[0], v[2], v[3]));
      for (int k = 0; k < 4; ++k) d = std::min(d, triangle_distance(p, v[k], v[(k + 1) % 4], v[4]));
      return d;
    }
    case Shape::capsule: {
      const auto c = capsule_of(sp);
      const double z = std::clamp(p.z(), -c.half_height, c.half_height);
      return std::abs((p - Point3(0, 0, z)).norm() - c.radius);
    }
  }
  return HUGE_VAL;
}

/// Distance from p to the crease line of a two-plane-crease instance.
inline double crease_line_distance(const ShapeParams& sp, const Point3& p) {
  const auto c = detail::crease_of(sp);
  const Point3 q = p / c.scale + c.shift;
  return std::hypot(q.y(), q.z()) * c.scale;
}

/// n points drawn uniformly by area from the exact surface.
inline std::vector<Point3> sample_shape(const ShapeParams& sp, std::size_t n, std::mt19937_64& rng) {
  using namespace detail;
  constexpr double kPi = std::numbers::pi;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Point3> pts;
  pts.reserve(n);
  // picks an index with probability proportional to weights
  const auto choose = [&](std::initializer_list<double> w) {
    double total = 0.0;
    for (double x : w) total += x;
    double r = U(rng) * total;
    int i = 0;
    for (double x : w) {
      if (r < x) return i;
      r -= x;
      ++i;
    }
    return i - 1;
  };
  const auto tri = [&](const Point3& a, const Point3& b, const Point3& c) {
    const double s = std::sqrt(U(rng)), t = U(rng);
    return Point3(a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t));
  };
  for (std::size_t i = 0; i < n; ++i) {
    switch (sp.shape) {
      case Shape::sphere: {
        std::normal_distribution<double> g;
        Point3 v;
        do v = Point3(g(rng), g(rng), g(rng));
        while (v.norm() < 1e-12);
        pts.push_back(v / v.norm());
        break;
      }
      case Shape::cube: {
        const Point3 e = box_of(sp).half;
        const int axis = choose({e.y() * e.z(), e.x() * e.z(), e.x() * e.y()});
        Point3 v(e.x() * (2 * U(rng) - 1), e.y() * (2 * U(rng) - 1), e.z() * (2 * U(rng) - 1));
        v[axis] = U(rng) < 0.5 ? -e[axis] : e[axis];
        pts.push_back(v);
        break;
      }
      case Shape::cylinder: {
        const auto c = cylinder_of(sp);
        const double th = 2 * kPi * U(rng);
        if (choose({2.0 * c.half_height, c.radius}) == 0) {
          pts.emplace_back(c.radius * std::cos(th), c.radius * std::sin(th), c.half_height * (2 * U(rng) - 1));
        } else {
          const double r = c.radius * std::sqrt(U(rng));
          pts.emplace_back(r * std::cos(th), r * std::sin(th), U(rng) < 0.5 ? -c.half_height : c.half_height);
        }
        break;
      }
      case Shape::cone: {
        const auto c = cone_of(sp);
        const double th = 2 * kPi * U(rng);
        const double slant = std::hypot(c.radius, 2.0 * c.half_height);
        if (choose({slant, c.radius}) == 0) {
          const double t = std::sqrt(U(rng));  // fraction of the way from apex to rim
          pts.emplace_back(c.radius * t * std::cos(th), c.radius * t * std::sin(th), c.half_height - 2.0 * c.half_height * t);
        } else {
          const double r = c.radius * std::sqrt(U(rng));
          pts.emplace_back(r * std::cos(th), r * std::sin(th), -c.half_height);
        }
        break;
      }
      case Shape::torus: {
        const auto t = torus_of(sp);
        const double th = 2 * kPi * U(rng);
        double ph;
        do ph = 2 * kPi * U(rng);
        while (U(rng) * (t.ring + t.tube) > t.ring + t.tube * std::cos(ph));
        const double rr = t.ring + t.tube * std::cos(ph);
        pts.emplace_back(rr * std::cos(th), rr * std::sin(th), t.tube * std::sin(ph));
        break;
      }
      case Shape::crease: {
        const auto c = crease_of(sp);
        const double x = c.half_length * (2 * U(rng) - 1), s = c.width * U(rng);
        const Point3 q = U(rng) < 0.5 ? Point3(x, s, 0.0) : Point3(x, 0.0, s);
        pts.push_back((q - c.shift) * c.scale);
        break;
      }
      case Shape::pyramid: {
        const auto v = pyramid_vertices(pyramid_of(sp));
        const double base = (v[1] - v[0]).norm() * (v[3] - v[0]).norm();
        const double side = 0.5 * ((v[1] - v[0]).cross(v[4] - v[0])).norm();
        const int f = choose({base, side, side, side, side});
        if (f == 0) {
          const double a = U(rng), b = U(rng);
          pts.push_back(v[0] + a * (v[1] - v[0]) + b * (v[3] - v[0]));
        } else {
          pts.push_back(tri(v[f - 1], v[f % 4], v[4]));
        }
        break;
      }
      case Shape::capsule: {
        const auto c = capsule_of(sp);
        const double th = 2 * kPi * U(rng);
        if (choose({c.half_height, c.radius}) == 0) {
          pts.emplace_back(c.radius * std::cos(th), c.radius * std::sin(th), c.half_height * (2 * U(rng) - 1));
        } else {
          std::normal_distribution<double> g;
          Point3 v;
          do v = Point3(g(rng), g(rng), g(rng));
          while (v.norm() < 1e-12);
          v = c.radius * v / v.norm();
          v.z() += v.z() >= 0 ? c.half_height : -c.half_height;
          pts.push_back(v);
        }
        break;
      }
    }
  }
  return pts;
}

}  // namespace pointacl

#endif  // POINTACL_SHAPES_HPP
