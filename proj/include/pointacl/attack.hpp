#ifndef POINTACL_ATTACK_HPP
#define POINTACL_ATTACK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "pointacl/loss.hpp"
#include "pointacl/model.hpp"

namespace pointacl {

enum class AttackMode { feature_kld, supervised_ce };

/// Which encoder output a feature-space attack (and the matching regularizer) reads.
enum class Representation { unprojected, projected };

inline std::string to_string(AttackMode m) { return m == AttackMode::feature_kld ? "kld" : "ce"; }
inline std::string to_string(Representation r) { return r == Representation::unprojected ? "h" : "z"; }

struct AttackConfig {
  double epsilon = 0.02;   // l-infinity budget, meters
  std::size_t steps = 7;
  double step_size = 0.0;  // 0 selects epsilon / steps
  double init_scale = 0.1; // random start drawn from [-init_scale * eps, init_scale * eps]
  AttackMode mode = AttackMode::supervised_ce;
  Representation representation = Representation::unprojected;
  std::uint64_t seed = 0;

  double effective_step() const {
    if (step_size > 0.0) return step_size;
    return steps > 0 ? epsilon / static_cast<double>(steps) : 0.0;
  }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidInput("attack epsilon must be finite and >= 0");
    if (!(step_size >= 0.0)) throw InvalidInput("attack step size must be >= 0");
    if (!(init_scale >= 0.0 && init_scale <= 1.0)) throw InvalidInput("attack init_scale must lie in [0, 1]");
    if (steps > 0 && epsilon > 0.0 && !(effective_step() > 0.0)) throw InvalidInput("attack step size must be > 0");
  }
};

/// Called after the random start (iteration 0) and after every step with the current adversarial coordinates.
using AttackObserver = std::function<void(std::size_t iteration, const Coords& x_adv)>;

namespace detail {

// start + delta, nudged toward start wherever rounding would leave the box.
inline Coords realize(const Coords& start, const Coords& delta, double eps) {
  Coords x = start;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double d = delta(i, k);
      if (d == 0.0) continue;
      const double s = start(i, k);
      double v = s + d;
      while (std::abs(v - s) > eps) v = std::nextafter(v, s);
      x(i, k) = v;
    }
  return x;
}

/// Iterated sign-gradient ascent inside the l-infinity box around `start`.
template <class GradFn>
Coords ifgm(const Coords& start, const AttackConfig& cfg, GradFn&& grad_fn, const AttackObserver& observer) {
  cfg.validate();
  const double eps = cfg.epsilon;
  Coords delta = Coords::Zero(start.rows(), 3);
  if (eps == 0.0) {
    if (observer)
      for (std::size_t it = 0; it <= cfg.steps; ++it) observer(it, start);
    return start;
  }
  if (cfg.init_scale > 0.0) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-cfg.init_scale * eps, cfg.init_scale * eps);
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
      for (int k = 0; k < 3; ++k) delta(i, k) = u(rng);
  }
  Coords x = realize(start, delta, eps);
  if (observer) observer(0, x);
  const double step = cfg.effective_step();
  for (std::size_t it = 1; it <= cfg.steps; ++it) {
    const Coords g = grad_fn(x);
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
      for (int k = 0; k < 3; ++k) {
        const double gi = g(i, k);
        const double sgn = gi > 0.0 ? 1.0 : (gi < 0.0 ? -1.0 : 0.0);
        delta(i, k) = std::clamp(delta(i, k) + step * sgn, -eps, eps);
      }
    x = realize(start, delta, eps);
    if (observer) observer(it, x);
  }
  return x;
}

inline const Eigen::VectorXd& pick(const FeatureBundle& fb, Representation r) {
  return r == Representation::unprojected ? fb.h : fb.z;
}

}  // namespace detail

/// Label-free attack: maximizes KLD(rep(anchor), rep(x_adv)) over x_adv = start + delta,
/// |delta|_inf <= eps, where rep is h (default) or z.
inline PointCloud ifgm_feature(const ModelParams& params, const PointCloud& anchor, const PointCloud& start,
                               const AttackConfig& cfg, const AttackObserver& observer = {}) {
  if (cfg.mode != AttackMode::feature_kld) throw InvalidInput("ifgm_feature requires mode feature-kld");
  if (anchor.size() != start.size()) throw InvalidInput("anchor and start clouds differ in point count");
  const Eigen::VectorXd target = detail::pick(encode(params, anchor, false), cfg.representation);
  const auto grad_fn = [&](const Coords& x) {
    const FeatureBundle fb = encode(params, x, true);
    const KldGrad g = kld_features_grad(target, detail::pick(fb, cfg.representation));
    Upstream up;
    (cfg.representation == Representation::unprojected ? up.dh : up.dz) = g.db;
    Coords dx;
    backward(params, fb, up, nullptr, &dx);
    return dx;
  };
  return PointCloud::from_coords(detail::ifgm(start.coords(), cfg, grad_fn, observer), start.label, start.id);
}

/// Supervised attack: maximizes cross-entropy of classify(encode(x_adv)) against `label` (1-based).
inline PointCloud ifgm_supervised(const ModelParams& params, const PointCloud& cloud, std::optional<int> label,
                                  const AttackConfig& cfg, const AttackObserver& observer = {}) {
  if (cfg.mode != AttackMode::supervised_ce) throw InvalidInput("ifgm_supervised requires mode supervised-ce");
  if (!label) throw InvalidInput("supervised attack needs a label");
  const int target = *label - 1;
  if (target < 0 || static_cast<std::size_t>(target) >= params.dims.classes) throw InvalidInput("label out of range");
  const auto grad_fn = [&](const Coords& x) {
    const FeatureBundle fb = encode(params, x, true);
    Upstream up;
    cross_entropy(classify(params, fb.h), target, &up.dlogits);
    Coords dx;
    backward(params, fb, up, nullptr, &dx);
    return dx;
  };
  return PointCloud::from_coords(detail::ifgm(cloud.coords(), cfg, grad_fn, observer), cloud.label, cloud.id);
}

inline PointCloud ifgm_supervised(const ModelParams& params, const PointCloud& cloud, const AttackConfig& cfg,
                                  const AttackObserver& observer = {}) {
  return ifgm_supervised(params, cloud, cloud.label, cfg, observer);
}

/// Largest per-coordinate displacement between two equally sized clouds.
inline double linf_distance(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) throw InvalidInput("clouds differ in point count");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a.points[i] - b.points[i]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace pointacl

#endif  // POINTACL_ATTACK_HPP
