#ifndef POINTACL_LOSS_HPP
#define POINTACL_LOSS_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <vector>

#include "pointacl/error.hpp"

namespace pointacl {

struct LossConfig {
  double temperature = 0.5;
  double alpha = 1.0;  // weight of KLD(clean, adversarial)
  double beta = 1.0;   // weight of KLD(adversarial, high-difference)

  void validate() const {
    if (!(temperature > 0.0)) throw InvalidInput("temperature must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw InvalidInput("alpha and beta must be non-negative");
  }
};

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  const double lse = mx + std::log((v.array() - mx).exp().sum());
  return (v.array() - lse).matrix();
}

/// KL(softmax(a) || softmax(b)). Asymmetric; zero iff a - b is constant.
inline double kld_features(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0) throw InvalidInput("kld_features needs two vectors of equal, nonzero width");
  const Eigen::VectorXd la = log_softmax(a), lb = log_softmax(b);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) kl += std::exp(la[i]) * (la[i] - lb[i]);
  return kl;
}

struct KldGrad {
  double value = 0.0;
  Eigen::VectorXd da;
  Eigen::VectorXd db;
};

/// kld_features with its gradient in both arguments:
/// d/da_j = p_j (log p_j - log q_j - KL), d/db_j = q_j - p_j.
inline KldGrad kld_features_grad(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  KldGrad g;
  g.value = kld_features(a, b);
  const Eigen::VectorXd la = log_softmax(a), lb = log_softmax(b);
  const Eigen::ArrayXd p = la.array().exp(), q = lb.array().exp();
  g.da = (p * (la.array() - lb.array() - g.value)).matrix();
  g.db = (q - p).matrix();
  return g;
}

/// Cross-entropy of logits against a 0-based class index, with d/d(logits) = softmax - onehot.
inline double cross_entropy(const Eigen::VectorXd& logits, int target, Eigen::VectorXd* dlogits = nullptr) {
  if (target < 0 || target >= logits.size()) throw InvalidInput("class index out of range");
  const Eigen::VectorXd lp = log_softmax(logits);
  if (dlogits) {
    *dlogits = lp.array().exp().matrix();
    (*dlogits)[target] -= 1.0;
  }
  return -lp[target];
}

/// Per-object list of projected views: views[object][view].
using ViewBatch = std::vector<std::vector<Eigen::VectorXd>>;

namespace detail {

inline std::size_t view_count(const ViewBatch& views) {
  if (views.empty()) throw InvalidInput("contrastive loss needs at least one object");
  const std::size_t m = views.front().size();
  if (m < 2) throw InvalidInput("contrastive loss needs at least two views per object");
  for (const auto& o : views)
    if (o.size() != m) throw InvalidInput("every object must contribute the same number of views");
  return m;
}

inline constexpr double kNormFloor = 1e-12;

}  // namespace detail

/// Multi-view NT-Xent summed over every anchor and each of its positives:
///   sum_a sum_{p in P(a)} [ -s(a,p) + log sum_{k != a} exp s(a,k) ],  s = cos / t.
/// Positives are the other views of the anchor's object; the denominator runs
/// over all other views in the batch, positives included. Fills `grad`
/// (same shape as `views`) when non-null.
inline double nt_xent_multiview(const ViewBatch& views, double temperature, ViewBatch* grad = nullptr) {
  if (!(temperature > 0.0)) throw InvalidInput("temperature must be positive");
  const std::size_t m = detail::view_count(views);
  const std::size_t objects = views.size();
  const Eigen::Index total = static_cast<Eigen::Index>(objects * m);
  const Eigen::Index width = views.front().front().size();

  Eigen::MatrixXd u(total, width);
  Eigen::VectorXd norms(total);
  for (std::size_t o = 0; o < objects; ++o)
    for (std::size_t v = 0; v < m; ++v) {
      const auto& z = views[o][v];
      if (z.size() != width) throw InvalidInput("projected views differ in width");
      const Eigen::Index a = static_cast<Eigen::Index>(o * m + v);
      norms[a] = std::max(z.norm(), detail::kNormFloor);
      u.row(a) = z.transpose() / norms[a];
    }
  const Eigen::MatrixXd s = (u * u.transpose()) / temperature;

  double loss = 0.0;
  Eigen::MatrixXd ds;
  if (grad) ds = Eigen::MatrixXd::Zero(total, total);
  for (Eigen::Index a = 0; a < total; ++a) {
    double mx = -HUGE_VAL;
    for (Eigen::Index k = 0; k < total; ++k)
      if (k != a) mx = std::max(mx, s(a, k));
    double sum = 0.0;
    for (Eigen::Index k = 0; k < total; ++k)
      if (k != a) sum += std::exp(s(a, k) - mx);
    const double lse = mx + std::log(sum);
    const Eigen::Index first = a - a % static_cast<Eigen::Index>(m);
    for (Eigen::Index p = first; p < first + static_cast<Eigen::Index>(m); ++p)
      if (p != a) loss += lse - s(a, p);
    if (grad) {
      const double positives = static_cast<double>(m - 1);
      for (Eigen::Index k = 0; k < total; ++k)
        if (k != a) ds(a, k) += positives * std::exp(s(a, k) - lse);
      for (Eigen::Index p = first; p < first + static_cast<Eigen::Index>(m); ++p)
        if (p != a) ds(a, p) -= 1.0;
    }
  }
  if (grad) {
    const Eigen::MatrixXd du = ((ds + ds.transpose()) * u) / temperature;
    grad->assign(objects, std::vector<Eigen::VectorXd>(m));
    for (std::size_t o = 0; o < objects; ++o)
      for (std::size_t v = 0; v < m; ++v) {
        const Eigen::Index a = static_cast<Eigen::Index>(o * m + v);
        const Eigen::VectorXd ua = u.row(a).transpose(), ga = du.row(a).transpose();
        (*grad)[o][v] = (ga - ua * ua.dot(ga)) / norms[a];
      }
  }
  return loss;
}

/// Two-view NT-Xent over pairs (z_i, z_j); needs at least two objects.
inline double nt_xent_pair(const ViewBatch& pairs, double temperature, ViewBatch* grad = nullptr) {
  if (pairs.size() < 2) throw InvalidInput("NT-Xent needs a batch of at least two pairs (no negatives otherwise)");
  for (const auto& p : pairs)
    if (p.size() != 2) throw InvalidInput("nt_xent_pair expects exactly two views per object");
  return nt_xent_multiview(pairs, temperature, grad);
}

/// Inputs of the robust objective. `clean`, `adv` and `hd` hold the
/// representations entering the two divergence terms; leave a list empty to
/// drop every term that needs it.
struct RobustBatch {
  ViewBatch views;
  std::vector<Eigen::VectorXd> clean, adv, hd;
};

struct RobustLoss {
  double total = 0.0;
  double contrastive = 0.0;
  double kld_clean_adv = 0.0;  // batch mean
  double kld_adv_hd = 0.0;     // batch mean
  ViewBatch d_views;
  std::vector<Eigen::VectorXd> d_clean, d_adv, d_hd;
};

/// contrastive(views) + alpha * mean KLD(clean, adv) + beta * mean KLD(adv, hd).
inline RobustLoss robust_loss(const RobustBatch& batch, const LossConfig& cfg, bool want_grad = true) {
  cfg.validate();
  RobustLoss out;
  out.contrastive = nt_xent_multiview(batch.views, cfg.temperature, want_grad ? &out.d_views : nullptr);
  const std::size_t objects = batch.views.size();
  const auto check = [&](const std::vector<Eigen::VectorXd>& v) {
    if (!v.empty() && v.size() != objects) throw InvalidInput("regularizer inputs must cover every object");
  };
  check(batch.clean);
  check(batch.adv);
  check(batch.hd);
  const double inv = 1.0 / static_cast<double>(objects);
  const auto zeros_like = [](const std::vector<Eigen::VectorXd>& v) {
    std::vector<Eigen::VectorXd> z;
    for (const auto& x : v) z.push_back(Eigen::VectorXd::Zero(x.size()));
    return z;
  };
  if (want_grad) {
    out.d_clean = zeros_like(batch.clean);
    out.d_adv = zeros_like(batch.adv);
    out.d_hd = zeros_like(batch.hd);
  }
  if (!batch.clean.empty() && !batch.adv.empty()) {
    for (std::size_t o = 0; o < objects; ++o) {
      const KldGrad g = kld_features_grad(batch.clean[o], batch.adv[o]);
      out.kld_clean_adv += g.value;
      if (want_grad) {
        out.d_clean[o] += (cfg.alpha * inv) * g.da;
        out.d_adv[o] += (cfg.alpha * inv) * g.db;
      }
    }
    out.kld_clean_adv *= inv;
  }
  if (!batch.adv.empty() && !batch.hd.empty()) {
    for (std::size_t o = 0; o < objects; ++o) {
      const KldGrad g = kld_features_grad(batch.adv[o], batch.hd[o]);
      out.kld_adv_hd += g.value;
      if (want_grad) {
        out.d_adv[o] += (cfg.beta * inv) * g.da;
        out.d_hd[o] += (cfg.beta * inv) * g.db;
      }
    }
    out.kld_adv_hd *= inv;
  }
  out.total = out.contrastive + cfg.alpha * out.kld_clean_adv + cfg.beta * out.kld_adv_hd;
  return out;
}

/// The four views of one object and the unprojected features used by the regularizers.
struct ObjectViews {
  Eigen::VectorXd z1, z2, z_hd, z_adv;
  Eigen::VectorXd h1, h_adv, h_hd;
};

/// Full objective: 4-view contrastive over (tau1(x), tau2(x), x_hd, x + delta)
/// + alpha * KLD(h1, h_adv) + beta * KLD(h_adv, h_hd), KLDs averaged over objects.
inline RobustLoss total_loss(const std::vector<ObjectViews>& objects, const LossConfig& cfg, bool want_grad = true) {
  RobustBatch b;
  for (const auto& o : objects) {
    if (!o.z1.size() || !o.z2.size() || !o.z_hd.size() || !o.z_adv.size() || !o.h1.size() || !o.h_adv.size() ||
        !o.h_hd.size())
      throw InvalidInput("total_loss needs all four views and three feature vectors per object");
    b.views.push_back({o.z1, o.z2, o.z_hd, o.z_adv});
    b.clean.push_back(o.h1);
    b.adv.push_back(o.h_adv);
    b.hd.push_back(o.h_hd);
  }
  return robust_loss(b, cfg, want_grad);
}

}  // namespace pointacl

#endif  // POINTACL_LOSS_HPP
