#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pointacl/attack.hpp"
#include "pointacl/dataio.hpp"
#include "pointacl/pipeline.hpp"

using namespace pointacl;

namespace {

ModelDims small_dims(std::size_t n = 32) {
  ModelDims d;
  d.points = n;
  d.hidden1 = 8;
  d.hidden2 = 12;
  d.features = 16;
  d.proj_hidden = 10;
  d.proj = 6;
  d.classes = 3;
  return d;
}

PointCloud random_cloud(std::size_t n, std::mt19937_64& rng, int label = 1) {
  return PointCloud(oracle::random_points(n, rng), label, "x");
}

AttackConfig kld_cfg(double eps, std::size_t steps, std::uint64_t seed = 0) {
  AttackConfig c;
  c.epsilon = eps;
  c.steps = steps;
  c.mode = AttackMode::feature_kld;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Attack, ZeroStepsZeroInitIsIdentity) {
  std::mt19937_64 rng(1);
  const auto p = init_params(1, small_dims());
  const auto x = random_cloud(32, rng);
  auto cfg = kld_cfg(0.05, 0);
  cfg.init_scale = 0.0;
  EXPECT_EQ(ifgm_feature(p, x, x, cfg), x);
  cfg.mode = AttackMode::supervised_ce;
  const auto adv = ifgm_supervised(p, x, cfg);
  EXPECT_EQ(adv, x);
  EXPECT_EQ(predict_index(classify(p, encode(p, adv).h)), predict_index(classify(p, encode(p, x).h)));
}

TEST(Attack, ZeroBudgetIsIdentity) {
  std::mt19937_64 rng(2);
  const auto p = init_params(2, small_dims());
  const auto x = random_cloud(32, rng);
  EXPECT_EQ(ifgm_feature(p, x, x, kld_cfg(0.0, 9)), x);
}

TEST(Attack, BudgetHoldsAfterEveryIteration) {
  std::mt19937_64 rng(3);
  const auto p = init_params(3, small_dims());
  std::uniform_real_distribution<double> ue(1e-4, 0.2), ui(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const auto x = random_cloud(32, rng);
    auto cfg = kld_cfg(ue(rng), 1 + t % 9, t);
    cfg.init_scale = ui(rng);
    cfg.step_size = t % 3 ? 0.0 : cfg.epsilon;  // oversized steps exercise the clip
    const Coords x0 = x.coords();
    std::size_t calls = 0;
    ifgm_feature(p, x, x, cfg, [&](std::size_t, const Coords& xa) {
      ++calls;
      ASSERT_LE((xa - x0).cwiseAbs().maxCoeff(), cfg.epsilon);
    });
    EXPECT_EQ(calls, cfg.steps + 1);
  }
}

TEST(Attack, DeterministicAndInputsUntouched) {
  std::mt19937_64 rng(4);
  const auto p = init_params(4, small_dims());
  const auto x = random_cloud(32, rng, 2);
  const auto copy = x;
  const auto a = ifgm_feature(p, x, x, kld_cfg(0.02, 5, 77));
  const auto b = ifgm_feature(p, x, x, kld_cfg(0.02, 5, 77));
  EXPECT_EQ(a, b);
  EXPECT_EQ(x, copy);
  EXPECT_EQ(a.label, x.label);
  EXPECT_FALSE(a == ifgm_feature(p, x, x, kld_cfg(0.02, 5, 78)));
}

TEST(Attack, ContractViolationsRejected) {
  std::mt19937_64 rng(5);
  const auto p = init_params(5, small_dims());
  const auto x = random_cloud(32, rng);
  auto ce = kld_cfg(0.02, 3);
  ce.mode = AttackMode::supervised_ce;
  EXPECT_THROW(ifgm_feature(p, x, x, ce), InvalidInput);
  EXPECT_THROW(ifgm_supervised(p, x, kld_cfg(0.02, 3)), InvalidInput);
  EXPECT_THROW(ifgm_supervised(p, x, std::nullopt, ce), InvalidInput);
  EXPECT_THROW(ifgm_supervised(p, x, 4, ce), InvalidInput);
  const auto shorter = random_cloud(31, rng);
  EXPECT_THROW(ifgm_feature(p, x, shorter, kld_cfg(0.02, 3)), InvalidInput);
  auto neg = kld_cfg(-0.1, 3);
  EXPECT_THROW(ifgm_feature(p, x, x, neg), InvalidInput);
}

TEST(Attack, ObjectiveGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  oracle::FdReport rep;
  for (std::uint64_t t = 0; t < 4; ++t) {
    const auto p = init_params(10 + t, small_dims());
    const auto anchor = random_cloud(32, rng);
    Coords x = anchor.coords() + 0.05 * Coords::Random(32, 3);
    const auto piece = [&] { return oracle::activation_pattern(encode(p, x)); };
    for (Representation r : {Representation::unprojected, Representation::projected}) {
      const auto target = detail::pick(encode(p, anchor), r);
      const auto f = [&] { return kld_features(target, detail::pick(encode(p, x, false), r)); };
      const auto fb = encode(p, x);
      Upstream up;
      (r == Representation::unprojected ? up.dh : up.dz) = kld_features_grad(target, detail::pick(fb, r)).db;
      rep.merge(oracle::fd_check_coords(x, gradients(p, fb, up).input, f, piece));
    }
    const auto ce = [&] { return cross_entropy(classify(p, encode(p, x, false).h), 1); };
    const auto fb = encode(p, x);
    Upstream up;
    cross_entropy(classify(p, fb.h), 1, &up.dlogits);
    rep.merge(oracle::fd_check_coords(x, gradients(p, fb, up).input, ce, piece));
  }
  EXPECT_LT(rep.worst, 1e-4);
  EXPECT_LT(static_cast<double>(rep.kinks), 0.02 * static_cast<double>(rep.checked));
}

TEST(Attack, FeatureAttackBeatsRandomSearchUsually) {
  std::mt19937_64 rng(7);
  const auto p = init_params(21, small_dims());
  int wins = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto x = random_cloud(32, rng);
    const auto h = encode(p, x, false).h;
    const auto adv = ifgm_feature(p, x, x, kld_cfg(0.01, 7, t));
    const double att = kld_features(h, encode(p, adv, false).h);
    double best = 0.0;
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    for (int r = 0; r < 50; ++r) {
      Coords xr = x.coords();
      for (Eigen::Index i = 0; i < xr.size(); ++i) xr.data()[i] += u(rng);
      best = std::max(best, kld_features(h, encode(p, xr, false).h));
    }
    wins += att >= best;
  }
  EXPECT_GE(wins, 18);
}

TEST(Attack, SuccessNonDecreasingInBudget) {
  auto ds = generate_synthetic({"sphere", "cube", "cone"}, 20, 64, 0.01, 3);
  ModelDims d = small_dims(64);
  std::vector<PointCloud> data = prepare_all(ds.samples, 64, 1);
  auto p = linear_finetune(init_params(5, d), data, 60, 1e-2, 16, 2);
  AttackConfig cfg;
  cfg.steps = 7;
  double prev = -1.0;
  for (double eps : {0.001, 0.005, 0.01, 0.02}) {
    cfg.epsilon = eps;
    const Metrics m = evaluate(p, data, cfg, 9);
    const double success = m.standard_accuracy - m.robust_accuracy;
    EXPECT_GE(success, prev - 1e-12) << "eps " << eps;
    prev = success;
  }
}
