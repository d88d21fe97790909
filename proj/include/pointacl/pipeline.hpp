#ifndef POINTACL_PIPELINE_HPP
#define POINTACL_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pointacl/attack.hpp"
#include "pointacl/augment.hpp"
#include "pointacl/dataio.hpp"
#include "pointacl/geometry.hpp"
#include "pointacl/loss.hpp"
#include "pointacl/model.hpp"
#include "pointacl/optim.hpp"
#include "pointacl/parallel.hpp"
#include "pointacl/random.hpp"

namespace pointacl {

struct TrainConfig {
  // objective
  double alpha = 1.0;
  double beta = 1.0;
  double temperature = 0.5;
  bool adversarial_view = true;  // include x + delta as a contrastive view
  bool hd_view = true;           // include the high-difference cloud as a contrastive view

  // high-difference views
  double keep_fraction = 0.75;
  double r1 = 0.05;
  double r2 = 0.20;

  // pretraining
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  AttackConfig attack{0.02, 5, 0.0, 0.1, AttackMode::feature_kld, Representation::unprojected, 0};
  AugmentationBounds augment;

  // downstream
  std::size_t finetune_epochs = 100;
  std::size_t finetune_batch = 32;
  double finetune_lr = 1e-2;
  std::size_t aff_epochs = 10;
  double aff_lr = 1e-3;
  AttackConfig eval_attack{0.02, 7, 0.0, 0.1, AttackMode::supervised_ce, Representation::unprojected, 0};

  ModelDims dims;
  std::uint64_t seed = 0;

  LossConfig loss() const { return {temperature, alpha, beta}; }

  void validate() const {
    if (batch_size < 2) throw ConfigError("batch_size", "must be >= 2");
    if (!(keep_fraction > 0.0 && keep_fraction < 1.0)) throw ConfigError("keep_fraction", "must lie in (0, 1)");
    if (!(r1 > 0.0 && r1 < r2)) throw ConfigError("r1", "radii must satisfy 0 < r1 < r2");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
    if (!(finetune_lr > 0.0)) throw ConfigError("finetune_lr", "must be positive");
    if (!(aff_lr > 0.0)) throw ConfigError("aff_lr", "must be positive");
    if (finetune_batch < 1) throw ConfigError("finetune_batch", "must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("temperature", "must be positive");
    if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("beta", "must be >= 0");
    try {
      attack.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError("attack", e.what());
    }
    try {
      eval_attack.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError("eval_attack", e.what());
    }
    try {
      dims.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError("dims", e.what());
    }
  }
};

struct ClassMetrics {
  int label = 0;
  std::size_t count = 0;
  double standard_accuracy = 0.0;
  double robust_accuracy = 0.0;
};

/// One evaluated test sample.
struct SampleResult {
  std::string id;
  int label = 0;
  int clean_pred = 0;  // 1-based
  int adv_pred = 0;    // 1-based
  double linf_used = 0.0;
};

struct Metrics {
  double standard_accuracy = 0.0;
  double robust_accuracy = 0.0;
  std::vector<double> loss_curve;
  std::vector<ClassMetrics> per_class;
  std::vector<SampleResult> samples;
};

/// Encoder-ready copy: resampled to `points` (order-preserving subset, or
/// replacement fill) and scaled into the unit sphere about its centroid.
inline PointCloud prepare(const PointCloud& cloud, std::size_t points, std::uint64_t seed) {
  require_valid(cloud);
  std::vector<Point3> pts = cloud.points;
  if (pts.size() != points) {
    std::vector<std::size_t> src(pts.size());
    std::iota(src.begin(), src.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    resample_to(pts, src, points, rng);
  }
  normalize_unit_sphere(pts);
  return PointCloud(std::move(pts), cloud.label, cloud.id);
}

inline std::vector<PointCloud> prepare_all(const std::vector<PointCloud>& clouds, std::size_t points, std::uint64_t seed) {
  std::vector<PointCloud> out(clouds.size());
  parallel_for(clouds.size(), [&](std::size_t i) { out[i] = prepare(clouds[i], points, derive_seed(seed, {0x5052ull, i})); });
  return out;
}

/// High-difference view: top keep_fraction of DoN magnitudes on the raw cloud,
/// then resampled to the encoder size and normalized.
inline PointCloud high_difference_view(const PointCloud& cloud, const TrainConfig& cfg, std::uint64_t seed) {
  const DoNField field = don_field(cloud, cfg.r1, cfg.r2);
  return prepare(select_high_difference(cloud, field, cfg.keep_fraction), cfg.dims.points, seed);
}

namespace detail {

inline const Eigen::VectorXd& rep(const FeatureBundle& fb, Representation r) {
  return r == Representation::unprojected ? fb.h : fb.z;
}

// Per-object gradient slots summed in index order so the result does not
// depend on the thread count.
inline ModelParams reduce(std::vector<ModelParams>& parts, const ModelDims& dims) {
  ModelParams total = ModelParams::zeros(dims);
  for (const auto& p : parts) total.add_scaled(p);
  return total;
}

inline std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch, std::mt19937_64& rng, bool drop_last) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < n; b += batch) {
    const std::size_t e = std::min(n, b + batch);
    if (drop_last && e - b < batch) break;
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b), order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

}  // namespace detail

/// Number of optimizer steps pretrain() will take on n objects.
inline std::size_t pretrain_steps(std::size_t n, const TrainConfig& cfg) {
  return cfg.epochs * (n / cfg.batch_size);
}

/// Called after every pretraining step with (step, loss).
using StepObserver = std::function<void(std::size_t, const RobustLoss&)>;

/// Contrastive pretraining of encoder and projector. Per object and step: two
/// augmented views; optionally the high-difference view (precomputed once per
/// object) and an adversarial view from a feature-space attack on the first
/// augmented view. The adversarial view is treated as data (no gradient
/// through the attack). Adam with cosine decay; classifier weights untouched.
inline ModelParams pretrain(const std::vector<PointCloud>& data, const TrainConfig& cfg, Metrics* metrics = nullptr,
                            const StepObserver& observer = {}) {
  cfg.validate();
  if (data.size() < cfg.batch_size) throw InvalidInput("pretraining needs at least batch_size objects");
  for (const auto& c : data) require_valid(c, "training cloud");
  const LossConfig lc = cfg.loss();
  const ModelDims dims = cfg.dims;
  ModelParams params = init_params(derive_seed(cfg.seed, {0x494eull}), dims);

  std::vector<PointCloud> hd;
  if (cfg.hd_view) {
    hd.resize(data.size());
    parallel_for(data.size(), [&](std::size_t i) { hd[i] = high_difference_view(data[i], cfg, derive_seed(cfg.seed, {0x4844ull, i})); });
  }

  Adam opt(dims, {ParamGroup::encoder, ParamGroup::projector});
  const std::size_t total_steps = pretrain_steps(data.size(), cfg);
  std::mt19937_64 order_rng(derive_seed(cfg.seed, {0x4f52ull}));
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& batch : detail::batches(data.size(), cfg.batch_size, order_rng, true)) {
      const std::size_t b = batch.size();
      // views per object in contrastive order: aug1, aug2, [hd], [adv]
      std::vector<std::vector<FeatureBundle>> fb(b);
      parallel_for(b, [&](std::size_t o) {
        const std::size_t idx = batch[o];
        const auto s1 = sample_spec(derive_seed(cfg.seed, {0x4131ull, step, idx}), dims.points, cfg.augment);
        const auto s2 = sample_spec(derive_seed(cfg.seed, {0x4132ull, step, idx}), dims.points, cfg.augment);
        const PointCloud x1 = apply(data[idx], s1), x2 = apply(data[idx], s2);
        fb[o].push_back(encode(params, x1));
        fb[o].push_back(encode(params, x2));
        if (cfg.hd_view) fb[o].push_back(encode(params, hd[idx]));
        if (cfg.adversarial_view) {
          AttackConfig ac = cfg.attack;
          ac.seed = derive_seed(cfg.seed, {0x4144ull, step, idx});
          fb[o].push_back(encode(params, ifgm_feature(params, x1, x1, ac)));
        }
      });
      const std::size_t hd_slot = 2, adv_slot = cfg.hd_view ? 3 : 2;
      const Representation r = cfg.attack.representation;
      RobustBatch rb;
      for (std::size_t o = 0; o < b; ++o) {
        rb.views.emplace_back();
        for (const auto& f : fb[o]) rb.views.back().push_back(f.z);
        if (cfg.adversarial_view) {
          rb.clean.push_back(detail::rep(fb[o][0], r));
          rb.adv.push_back(detail::rep(fb[o][adv_slot], r));
          if (cfg.hd_view) rb.hd.push_back(detail::rep(fb[o][hd_slot], r));
        }
      }
      const RobustLoss loss = robust_loss(rb, lc, true);
      if (!std::isfinite(loss.total)) throw DivergenceError(step, "pretraining loss is " + std::to_string(loss.total));
      if (metrics) metrics->loss_curve.push_back(loss.total);
      if (observer) observer(step, loss);

      std::vector<ModelParams> parts(b);
      parallel_for(b, [&](std::size_t o) {
        parts[o] = ModelParams::zeros(dims);
        for (std::size_t v = 0; v < fb[o].size(); ++v) {
          Upstream up;
          up.dz = loss.d_views[o][v];
          const Eigen::VectorXd* dr = nullptr;
          if (cfg.adversarial_view) {
            if (v == 0) dr = &loss.d_clean[o];
            else if (v == adv_slot) dr = &loss.d_adv[o];
            else if (cfg.hd_view && v == hd_slot) dr = &loss.d_hd[o];
          }
          if (dr) {
            if (r == Representation::unprojected) up.dh = *dr;
            else up.dz += *dr;
          }
          backward(params, fb[o][v], up, &parts[o]);
        }
      });
      const ModelParams grad = detail::reduce(parts, dims);
      opt.step(params, grad, cosine_lr(cfg.learning_rate, step, total_steps));
      if (!params.all_finite()) throw DivergenceError(step, "parameters became non-finite");
      ++step;
    }
  }
  return params;
}

/// Unprojected features of prepared clouds.
inline std::vector<Eigen::VectorXd> features(const ModelParams& params, const std::vector<PointCloud>& clouds) {
  std::vector<Eigen::VectorXd> h(clouds.size());
  parallel_for(clouds.size(), [&](std::size_t i) { h[i] = encode(params, clouds[i], false).h; });
  return h;
}

/// Softmax-regression head on fixed features (labels 1-based). Mini-batch
/// Adam on mean cross-entropy; only the classifier group changes.
inline ModelParams train_linear_head(const ModelParams& params, const std::vector<Eigen::VectorXd>& h,
                                     const std::vector<int>& labels, std::size_t epochs, double lr, std::size_t batch,
                                     std::uint64_t seed, std::vector<double>* curve = nullptr) {
  if (h.size() != labels.size()) throw InvalidInput("features and labels differ in count");
  ModelParams out = params;
  if (epochs == 0 || h.empty()) return out;
  const ModelDims dims = params.dims;
  Adam opt(dims, {ParamGroup::classifier});
  std::mt19937_64 rng(derive_seed(seed, {0x4c48ull}));
  const std::size_t bs = std::max<std::size_t>(1, batch);
  const std::size_t total = epochs * ((h.size() + bs - 1) / bs);
  std::size_t step = 0;
  ModelParams grad = ModelParams::zeros(dims);
  for (std::size_t e = 0; e < epochs; ++e) {
    double epoch_loss = 0.0;
    for (const auto& idx : detail::batches(h.size(), bs, rng, false)) {
      grad.cw.setZero();
      grad.cb.setZero();
      const double inv = 1.0 / static_cast<double>(idx.size());
      for (std::size_t i : idx) {
        Eigen::VectorXd d;
        epoch_loss += cross_entropy(classify(out, h[i]), labels[i] - 1, &d);
        grad.cw.noalias() += h[i] * (inv * d).transpose();
        grad.cb += inv * d;
      }
      opt.step(out, grad, cosine_lr(lr, step++, total));
    }
    if (curve) curve->push_back(epoch_loss / static_cast<double>(h.size()));
  }
  return out;
}

inline std::vector<int> labels_of(const std::vector<PointCloud>& clouds) {
  std::vector<int> y;
  for (const auto& c : clouds) {
    if (!c.label) throw InvalidInput("labeled data required (sample '" + c.id + "')");
    y.push_back(*c.label);
  }
  return y;
}

/// Linear probe: the encoder and projector stay bit-identical; only the head trains.
/// `data` must already be prepared to the encoder size.
inline ModelParams linear_finetune(const ModelParams& params, const std::vector<PointCloud>& data, std::size_t epochs,
                                   double lr, std::size_t batch = 32, std::uint64_t seed = 0,
                                   std::vector<double>* curve = nullptr) {
  return train_linear_head(params, features(params, data), labels_of(data), epochs, lr, batch, seed, curve);
}

/// Per-epoch mean losses of adversarial_full_finetune.
struct AffCurve {
  std::vector<double> clean, adversarial;
};

/// Full-network supervised finetune on clean samples plus per-batch
/// ifgm_supervised examples generated from the current weights. The
/// classifier head should already be initialized (e.g. by a linear probe).
inline ModelParams adversarial_full_finetune(const ModelParams& params, const std::vector<PointCloud>& data,
                                             const TrainConfig& cfg, AffCurve* curve = nullptr) {
  cfg.validate();
  ModelParams p = params;
  if (cfg.aff_epochs == 0 || data.empty()) return p;
  const std::vector<int> y = labels_of(data);
  Adam opt(p.dims, {ParamGroup::encoder, ParamGroup::classifier});
  std::mt19937_64 rng(derive_seed(cfg.seed, {0x4146ull}));
  const std::size_t bs = cfg.batch_size;
  const std::size_t total = cfg.aff_epochs * ((data.size() + bs - 1) / bs);
  std::size_t step = 0;
  for (std::size_t e = 0; e < cfg.aff_epochs; ++e) {
    double lc = 0.0, la = 0.0;
    for (const auto& idx : detail::batches(data.size(), bs, rng, false)) {
      const double inv = 1.0 / static_cast<double>(2 * idx.size());
      std::vector<ModelParams> parts(idx.size());
      std::vector<double> loss_c(idx.size()), loss_a(idx.size());
      parallel_for(idx.size(), [&](std::size_t k) {
        const std::size_t i = idx[k];
        AttackConfig ac = cfg.eval_attack;
        ac.mode = AttackMode::supervised_ce;
        ac.seed = derive_seed(cfg.seed, {0x4141ull, step, i});
        const PointCloud adv = ifgm_supervised(p, data[i], y[i], ac);
        parts[k] = ModelParams::zeros(p.dims);
        for (int which = 0; which < 2; ++which) {
          const FeatureBundle fb = encode(p, which == 0 ? data[i] : adv);
          Upstream up;
          const double l = cross_entropy(classify(p, fb.h), y[i] - 1, &up.dlogits);
          up.dlogits *= inv;
          (which == 0 ? loss_c : loss_a)[k] = l;
          backward(p, fb, up, &parts[k]);
        }
      });
      for (std::size_t k = 0; k < idx.size(); ++k) {
        lc += loss_c[k];
        la += loss_a[k];
      }
      const ModelParams grad = detail::reduce(parts, p.dims);
      opt.step(p, grad, cosine_lr(cfg.aff_lr, step++, total));
      if (!p.all_finite()) throw DivergenceError(step, "finetuning produced non-finite parameters");
    }
    if (curve) {
      curve->clean.push_back(lc / static_cast<double>(data.size()));
      curve->adversarial.push_back(la / static_cast<double>(data.size()));
    }
  }
  return p;
}

/// SA on the clean clouds and RA on per-sample ifgm_supervised examples of the
/// same clouds. `data` must already be prepared to the encoder size.
inline Metrics evaluate(const ModelParams& params, const std::vector<PointCloud>& data, const AttackConfig& eval_attack,
                        std::uint64_t seed = 0) {
  AttackConfig ac = eval_attack;
  ac.mode = AttackMode::supervised_ce;
  ac.validate();
  const std::vector<int> y = labels_of(data);
  Metrics m;
  m.samples.resize(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    AttackConfig a = ac;
    a.seed = derive_seed(seed, {0x4556ull, i});
    const PointCloud adv = ifgm_supervised(params, data[i], y[i], a);
    SampleResult& s = m.samples[i];
    s.id = data[i].id;
    s.label = y[i];
    s.clean_pred = predict_index(classify(params, encode(params, data[i], false).h)) + 1;
    s.adv_pred = predict_index(classify(params, encode(params, adv, false).h)) + 1;
    s.linf_used = linf_distance(adv, data[i]);
  });
  std::map<int, ClassMetrics> per;
  std::size_t sa = 0, ra = 0;
  for (const auto& s : m.samples) {
    auto& c = per[s.label];
    c.label = s.label;
    ++c.count;
    if (s.clean_pred == s.label) {
      ++sa;
      c.standard_accuracy += 1.0;
    }
    if (s.adv_pred == s.label) {
      ++ra;
      c.robust_accuracy += 1.0;
    }
  }
  for (auto& [label, c] : per) {
    c.standard_accuracy /= static_cast<double>(c.count);
    c.robust_accuracy /= static_cast<double>(c.count);
    m.per_class.push_back(c);
  }
  if (!data.empty()) {
    m.standard_accuracy = static_cast<double>(sa) / static_cast<double>(data.size());
    m.robust_accuracy = static_cast<double>(ra) / static_cast<double>(data.size());
  }
  return m;
}

/// Mean KLD(h(x), h(x_adv)) over prepared clouds, x_adv from the feature attack `attack`.
inline double mean_feature_divergence(const ModelParams& params, const std::vector<PointCloud>& data,
                                      const AttackConfig& attack, std::uint64_t seed = 0) {
  if (data.empty()) return 0.0;
  AttackConfig ac = attack;
  ac.mode = AttackMode::feature_kld;
  ac.representation = Representation::unprojected;
  std::vector<double> d(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    AttackConfig a = ac;
    a.seed = derive_seed(seed, {0x4d46ull, i});
    const PointCloud adv = ifgm_feature(params, data[i], data[i], a);
    d[i] = kld_features(encode(params, data[i], false).h, encode(params, adv, false).h);
  });
  double s = 0.0;
  for (double v : d) s += v;
  return s / static_cast<double>(d.size());
}

}  // namespace pointacl

#endif  // POINTACL_PIPELINE_HPP
