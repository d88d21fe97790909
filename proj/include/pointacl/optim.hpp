#ifndef POINTACL_OPTIM_HPP
#define POINTACL_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <string_view>
#include <vector>

#include "pointacl/model.hpp"

namespace pointacl {

/// Learning rate after `step` of `total` steps under half-cosine decay to zero.
inline double cosine_lr(double base, std::size_t step, std::size_t total) {
  if (total == 0) return base;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * progress));
}

/// Adam with bias correction, applied tensor-wise to the selected parameter groups.
class Adam {
 public:
  Adam(const ModelDims& dims, std::set<ParamGroup> groups, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(ModelParams::zeros(dims)), v_(ModelParams::zeros(dims)), groups_(std::move(groups)),
        beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ModelParams& params, const ModelParams& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<double*> m, v;
    std::vector<const double*> g;
    m_.for_each([&](std::string_view, ParamGroup, auto& t) { m.push_back(t.data()); });
    v_.for_each([&](std::string_view, ParamGroup, auto& t) { v.push_back(t.data()); });
    grad.for_each([&](std::string_view, ParamGroup, const auto& t) { g.push_back(t.data()); });
    std::size_t k = 0;
    params.for_each([&](std::string_view, ParamGroup group, auto& t) {
      const std::size_t idx = k++;
      if (!groups_.count(group)) return;
      double* p = t.data();
      for (Eigen::Index i = 0; i < t.size(); ++i) {
        const double gi = g[idx][i];
        m[idx][i] = beta1_ * m[idx][i] + (1.0 - beta1_) * gi;
        v[idx][i] = beta2_ * v[idx][i] + (1.0 - beta2_) * gi * gi;
        p[i] -= lr * (m[idx][i] / c1) / (std::sqrt(v[idx][i] / c2) + eps_);
      }
    });
  }

  std::size_t iterations() const noexcept { return t_; }

 private:
  ModelParams m_, v_;
  std::set<ParamGroup> groups_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

}  // namespace pointacl

#endif  // POINTACL_OPTIM_HPP
