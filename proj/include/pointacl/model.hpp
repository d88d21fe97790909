#ifndef POINTACL_MODEL_HPP
#define POINTACL_MODEL_HPP

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pointacl/point_cloud.hpp"

namespace pointacl {

/// Layer widths. The encoder is a shared per-point MLP
/// 3 -> hidden1 -> hidden2 -> features followed by a channel-wise max-pool;
/// the projector is features -> proj_hidden -> proj; the classifier is linear.
struct ModelDims {
  std::size_t points = 256;
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 128;
  std::size_t features = 128;
  std::size_t proj_hidden = 64;
  std::size_t proj = 32;
  std::size_t classes = 3;

  void validate() const {
    if (points == 0 || hidden1 == 0 || hidden2 == 0 || features == 0 || proj_hidden == 0 || proj == 0 || classes == 0)
      throw InvalidInput("model dimensions must all be >= 1");
  }
  bool operator==(const ModelDims&) const = default;
};

enum class ParamGroup { encoder, projector, classifier };

/// All trainable weights. Weight matrices are stored input-major (fan_in x fan_out).
struct ModelParams {
  ModelDims dims;
  Eigen::MatrixXd w1, w2, w3;
  Eigen::RowVectorXd b1, b2, b3;
  Eigen::MatrixXd pw1, pw2;
  Eigen::VectorXd pb1, pb2;
  Eigen::MatrixXd cw;
  Eigen::VectorXd cb;

  static ModelParams zeros(const ModelDims& d) {
    d.validate();
    const auto i = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
    ModelParams p;
    p.dims = d;
    p.w1 = Eigen::MatrixXd::Zero(3, i(d.hidden1));
    p.b1 = Eigen::RowVectorXd::Zero(i(d.hidden1));
    p.w2 = Eigen::MatrixXd::Zero(i(d.hidden1), i(d.hidden2));
    p.b2 = Eigen::RowVectorXd::Zero(i(d.hidden2));
    p.w3 = Eigen::MatrixXd::Zero(i(d.hidden2), i(d.features));
    p.b3 = Eigen::RowVectorXd::Zero(i(d.features));
    p.pw1 = Eigen::MatrixXd::Zero(i(d.features), i(d.proj_hidden));
    p.pb1 = Eigen::VectorXd::Zero(i(d.proj_hidden));
    p.pw2 = Eigen::MatrixXd::Zero(i(d.proj_hidden), i(d.proj));
    p.pb2 = Eigen::VectorXd::Zero(i(d.proj));
    p.cw = Eigen::MatrixXd::Zero(i(d.features), i(d.classes));
    p.cb = Eigen::VectorXd::Zero(i(d.classes));
    return p;
  }

  /// Calls fn(name, group, tensor) for every tensor in a fixed order.
  template <class Self, class Fn>
  static void visit(Self& self, Fn&& fn) {
    fn("encoder.w1", ParamGroup::encoder, self.w1);
    fn("encoder.b1", ParamGroup::encoder, self.b1);
    fn("encoder.w2", ParamGroup::encoder, self.w2);
    fn("encoder.b2", ParamGroup::encoder, self.b2);
    fn("encoder.w3", ParamGroup::encoder, self.w3);
    fn("encoder.b3", ParamGroup::encoder, self.b3);
    fn("projector.w1", ParamGroup::projector, self.pw1);
    fn("projector.b1", ParamGroup::projector, self.pb1);
    fn("projector.w2", ParamGroup::projector, self.pw2);
    fn("projector.b2", ParamGroup::projector, self.pb2);
    fn("classifier.w", ParamGroup::classifier, self.cw);
    fn("classifier.b", ParamGroup::classifier, self.cb);
  }
  template <class Fn>
  void for_each(Fn&& fn) {
    visit(*this, std::forward<Fn>(fn));
  }
  template <class Fn>
  void for_each(Fn&& fn) const {
    visit(*this, std::forward<Fn>(fn));
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, ParamGroup, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  void set_zero() {
    for_each([](std::string_view, ParamGroup, auto& t) { t.setZero(); });
  }

  /// this += scale * other, tensor by tensor in visit order.
  void add_scaled(const ModelParams& other, double scale = 1.0) {
    std::vector<const double*> src;
    other.for_each([&](std::string_view, ParamGroup, const auto& t) { src.push_back(t.data()); });
    std::size_t k = 0;
    for_each([&](std::string_view, ParamGroup, auto& t) {
      const double* s = src[k++];
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += scale * s[i];
    });
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, ParamGroup, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }
};

/// Bitwise equality of every tensor (optionally restricted to one group).
inline bool same_bits(const ModelParams& a, const ModelParams& b, std::optional<ParamGroup> group = std::nullopt) {
  if (!(a.dims == b.dims)) return false;
  std::vector<std::pair<const double*, Eigen::Index>> lhs;
  a.for_each([&](std::string_view, ParamGroup g, const auto& t) {
    if (!group || *group == g) lhs.emplace_back(t.data(), t.size());
  });
  std::size_t k = 0;
  bool eq = true;
  b.for_each([&](std::string_view, ParamGroup g, const auto& t) {
    if (group && *group != g) return;
    eq = eq && std::equal(t.data(), t.data() + t.size(), lhs[k].first,
                          [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
    ++k;
  });
  return eq;
}

/// 64-bit FNV-1a over the raw bytes of a parameter group.
inline std::uint64_t parameter_hash(const ModelParams& p, std::optional<ParamGroup> group = std::nullopt) {
  std::uint64_t h = 1469598103934665603ull;
  p.for_each([&](std::string_view, ParamGroup g, const auto& t) {
    if (group && *group != g) return;
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(t.size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  });
  return h;
}

/// Deterministic fan-in scaled initialization: He-uniform for layers followed
/// by a rectifier, uniform(+-1/sqrt(fan_in)) for linear outputs and all biases.
inline ModelParams init_params(std::uint64_t seed, const ModelDims& dims) {
  ModelParams p = ModelParams::zeros(dims);
  std::mt19937_64 rng(seed);
  const auto fill = [&](auto& t, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  };
  const auto fan = [](std::size_t v) { return static_cast<double>(v); };
  fill(p.w1, std::sqrt(6.0 / 3.0));
  fill(p.b1, 1.0 / std::sqrt(3.0));
  fill(p.w2, std::sqrt(6.0 / fan(dims.hidden1)));
  fill(p.b2, 1.0 / std::sqrt(fan(dims.hidden1)));
  fill(p.w3, std::sqrt(6.0 / fan(dims.hidden2)));
  fill(p.b3, 1.0 / std::sqrt(fan(dims.hidden2)));
  fill(p.pw1, std::sqrt(6.0 / fan(dims.features)));
  fill(p.pb1, 1.0 / std::sqrt(fan(dims.features)));
  fill(p.pw2, 1.0 / std::sqrt(fan(dims.proj_hidden)));
  fill(p.pb2, 1.0 / std::sqrt(fan(dims.proj_hidden)));
  fill(p.cw, 1.0 / std::sqrt(fan(dims.features)));
  fill(p.cb, 1.0 / std::sqrt(fan(dims.features)));
  return p;
}

inline ModelParams init_params(std::uint64_t seed, std::size_t features, std::size_t proj, std::size_t classes) {
  ModelDims d;
  d.features = features;
  d.proj = proj;
  d.classes = classes;
  return init_params(seed, d);
}

/// Pre-activations kept by a forward pass for reverse-mode differentiation.
struct Activations {
  Coords x;
  Eigen::MatrixXd a1, a2, a3;         // per point, before the rectifier
  std::vector<Eigen::Index> argmax;   // winning point per feature channel
  Eigen::VectorXd pu;                 // projector hidden pre-activation
};

/// Encoder output: unprojected h, projected z = g(h), optional retained activations.
struct FeatureBundle {
  Eigen::VectorXd h;
  Eigen::VectorXd z;
  std::optional<Activations> act;
};

inline Eigen::VectorXd project(const ModelParams& p, const Eigen::VectorXd& h, Eigen::VectorXd* pre = nullptr) {
  Eigen::VectorXd u = p.pw1.transpose() * h + p.pb1;
  Eigen::VectorXd z = p.pw2.transpose() * u.cwiseMax(0.0) + p.pb2;
  if (pre) *pre = std::move(u);
  return z;
}

inline Eigen::VectorXd classify(const ModelParams& p, const Eigen::VectorXd& h) { return p.cw.transpose() * h + p.cb; }

/// Index of the largest logit; first index on ties. Add one for a 1-based label.
inline int predict_index(const Eigen::VectorXd& logits) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return static_cast<int>(best);
}

/// Forward pass over one cloud. h is the channel-wise max of the rectified
/// per-point features (first point wins ties), so permuting the input points
/// leaves h unchanged.
inline FeatureBundle encode(const ModelParams& p, const Coords& x, bool retain = true) {
  if (static_cast<std::size_t>(x.rows()) != p.dims.points)
    throw InvalidInput("encoder expects " + std::to_string(p.dims.points) + " points, got " + std::to_string(x.rows()));
  Activations act;
  act.a1 = (x * p.w1).rowwise() + p.b1;
  act.a2 = (act.a1.cwiseMax(0.0) * p.w2).rowwise() + p.b2;
  act.a3 = (act.a2.cwiseMax(0.0) * p.w3).rowwise() + p.b3;
  const Eigen::Index n = x.rows(), f = act.a3.cols();
  FeatureBundle out;
  out.h.resize(f);
  act.argmax.assign(static_cast<std::size_t>(f), 0);
  for (Eigen::Index j = 0; j < f; ++j) {
    const double* col = act.a3.col(j).data();
    Eigen::Index best = 0;
    double best_v = std::max(col[0], 0.0);
    for (Eigen::Index i = 1; i < n; ++i) {
      const double v = std::max(col[i], 0.0);
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    out.h[j] = best_v;
    act.argmax[static_cast<std::size_t>(j)] = best;
  }
  out.z = project(p, out.h, &act.pu);
  if (retain) {
    act.x = x;
    out.act = std::move(act);
  }
  return out;
}

inline FeatureBundle encode(const ModelParams& p, const PointCloud& cloud, bool retain = true) {
  return encode(p, cloud.coords(), retain);
}

/// Co-gradients flowing into the forward outputs; empty vectors count as zero.
struct Upstream {
  Eigen::VectorXd dh;
  Eigen::VectorXd dz;
  Eigen::VectorXd dlogits;
};

/// Reverse pass: accumulates d(functional)/d(weights) into `grad` (when
/// non-null) and writes d/d(input coordinates) into `input_grad` (when
/// non-null). The max-pool routes each channel's gradient to its winning point only.
inline void backward(const ModelParams& p, const FeatureBundle& fb, const Upstream& up, ModelParams* grad,
                     Coords* input_grad = nullptr) {
  if (!fb.act) throw InvalidInput("gradients need a forward pass with retained activations");
  const Activations& act = *fb.act;
  const Eigen::Index f = static_cast<Eigen::Index>(p.dims.features);
  Eigen::VectorXd dh = up.dh.size() ? up.dh : Eigen::VectorXd::Zero(f);
  if (dh.size() != f) throw InvalidInput("upstream dh has the wrong width");

  if (up.dlogits.size()) {
    if (up.dlogits.size() != p.cb.size()) throw InvalidInput("upstream dlogits has the wrong width");
    if (grad) {
      grad->cw.noalias() += fb.h * up.dlogits.transpose();
      grad->cb += up.dlogits;
    }
    dh.noalias() += p.cw * up.dlogits;
  }
  if (up.dz.size()) {
    if (up.dz.size() != p.pb2.size()) throw InvalidInput("upstream dz has the wrong width");
    const Eigen::VectorXd v = act.pu.cwiseMax(0.0);
    const Eigen::VectorXd du = ((p.pw2 * up.dz).array() * (act.pu.array() > 0.0).cast<double>()).matrix();
    if (grad) {
      grad->pw2.noalias() += v * up.dz.transpose();
      grad->pb2 += up.dz;
      grad->pw1.noalias() += fb.h * du.transpose();
      grad->pb1 += du;
    }
    dh.noalias() += p.pw1 * du;
  }
  if (input_grad) *input_grad = Coords::Zero(act.x.rows(), 3);

  // rows that win at least one channel with a live rectifier and nonzero co-gradient
  std::vector<Eigen::Index> rows;
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(act.x.rows()), -1);
  for (Eigen::Index j = 0; j < f; ++j) {
    const Eigen::Index r = act.argmax[static_cast<std::size_t>(j)];
    if (dh[j] == 0.0 || !(act.a3(r, j) > 0.0)) continue;
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<Eigen::Index>(rows.size());
      rows.push_back(r);
    }
  }
  if (rows.empty()) return;
  std::sort(rows.begin(), rows.end());
  for (std::size_t k = 0; k < rows.size(); ++k) slot[static_cast<std::size_t>(rows[k])] = static_cast<Eigen::Index>(k);

  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd da3 = Eigen::MatrixXd::Zero(m, f);
  for (Eigen::Index j = 0; j < f; ++j) {
    const Eigen::Index r = act.argmax[static_cast<std::size_t>(j)];
    if (dh[j] == 0.0 || !(act.a3(r, j) > 0.0)) continue;
    da3(slot[static_cast<std::size_t>(r)], j) = dh[j];
  }
  Eigen::MatrixXd a1c(m, act.a1.cols()), a2c(m, act.a2.cols());
  Coords xc(m, 3);
  for (Eigen::Index k = 0; k < m; ++k) {
    a1c.row(k) = act.a1.row(rows[static_cast<std::size_t>(k)]);
    a2c.row(k) = act.a2.row(rows[static_cast<std::size_t>(k)]);
    xc.row(k) = act.x.row(rows[static_cast<std::size_t>(k)]);
  }
  const Eigen::MatrixXd da2 = ((da3 * p.w3.transpose()).array() * (a2c.array() > 0.0).cast<double>()).matrix();
  const Eigen::MatrixXd da1 = ((da2 * p.w2.transpose()).array() * (a1c.array() > 0.0).cast<double>()).matrix();
  if (grad) {
    grad->b3 += da3.colwise().sum();
    grad->w3.noalias() += a2c.cwiseMax(0.0).transpose() * da3;
    grad->b2 += da2.colwise().sum();
    grad->w2.noalias() += a1c.cwiseMax(0.0).transpose() * da2;
    grad->b1 += da1.colwise().sum();
    grad->w1.noalias() += xc.transpose() * da1;
  }
  if (input_grad) {
    const Eigen::MatrixXd dx = da1 * p.w1.transpose();
    for (Eigen::Index k = 0; k < m; ++k) input_grad->row(rows[static_cast<std::size_t>(k)]) = dx.row(k);
  }
}

struct Gradients {
  ModelParams params;
  Coords input;
};

/// Exact derivatives of <up, outputs> with respect to every weight and input coordinate.
inline Gradients gradients(const ModelParams& p, const FeatureBundle& fb, const Upstream& up) {
  Gradients g{ModelParams::zeros(p.dims), Coords()};
  backward(p, fb, up, &g.params, &g.input);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoint container. Text, versioned:
//
//   pointacl-checkpoint 1
//   dims <points> <hidden1> <hidden2> <features> <proj_hidden> <proj> <classes>
//   tensor <name> <rows> <cols>
//   <row-major values, one matrix row per line, shortest round-trip decimal>
//   ... (12 tensors in ModelParams::visit order)
//
// Shortest round-trip formatting makes load(save(p)) bitwise equal to p.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCheckpointMagic = "pointacl-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidInput("not a number: '" + std::string(s) + "'");
  return v;
}

inline void write_checkpoint(std::ostream& os, const ModelParams& p) {
  const ModelDims& d = p.dims;
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  os << "dims " << d.points << ' ' << d.hidden1 << ' ' << d.hidden2 << ' ' << d.features << ' ' << d.proj_hidden << ' '
     << d.proj << ' ' << d.classes << '\n';
  p.for_each([&](std::string_view name, ParamGroup, const auto& t) {
    os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) os << (c ? " " : "") << format_double(t(r, c));
      os << '\n';
    }
  });
}

inline ModelParams read_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) throw InvalidInput("not a pointacl checkpoint");
  if (version != kCheckpointVersion) throw InvalidInput("unsupported checkpoint version " + std::to_string(version));
  std::string tag;
  ModelDims d;
  if (!(is >> tag >> d.points >> d.hidden1 >> d.hidden2 >> d.features >> d.proj_hidden >> d.proj >> d.classes) ||
      tag != "dims")
    throw InvalidInput("checkpoint dims header missing");
  ModelParams p = ModelParams::zeros(d);
  p.for_each([&](std::string_view name, ParamGroup, auto& t) {
    std::string kw, nm;
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> kw >> nm >> rows >> cols) || kw != "tensor" || nm != name || rows != t.rows() || cols != t.cols())
      throw InvalidInput("checkpoint tensor header mismatch at " + std::string(name));
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(is >> tok)) throw InvalidInput("checkpoint truncated in " + std::string(name));
        t(r, c) = parse_double(tok);
      }
  });
  return p;
}

inline void save_checkpoint(const std::string& path, const ModelParams& p) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  write_checkpoint(os, p);
  if (!os) throw Error("write failed: " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path);
  return read_checkpoint(is);
}

}  // namespace pointacl

#endif  // POINTACL_MODEL_HPP
