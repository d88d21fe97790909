#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pointacl/model.hpp"

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

Coords random_coords(std::size_t n, std::mt19937_64& rng) {
  return PointCloud(oracle::random_points(n, rng)).coords();
}

}  // namespace

TEST(Init, DeterministicAndSeedSensitive) {
  ModelDims d;
  const auto a = init_params(5, d), b = init_params(5, d), c = init_params(6, d);
  EXPECT_TRUE(same_bits(a, b));
  std::size_t total = 0, differ = 0;
  std::vector<const double*> cs;
  c.for_each([&](std::string_view, ParamGroup, const auto& t) { cs.push_back(t.data()); });
  std::size_t k = 0;
  a.for_each([&](std::string_view, ParamGroup, const auto& t) {
    const double* o = cs[k++];
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      ++total;
      differ += t.data()[i] != o[i];
    }
  });
  EXPECT_GE(static_cast<double>(differ), 0.99 * static_cast<double>(total));
}

TEST(Init, FiniteFeatures) {
  std::mt19937_64 rng(1);
  const auto p = init_params(3, 128, 32, 3);
  const auto fb = encode(p, random_coords(256, rng));
  EXPECT_TRUE(fb.h.allFinite());
  EXPECT_TRUE(fb.z.allFinite());
  EXPECT_EQ(fb.h.size(), 128);
  EXPECT_EQ(fb.z.size(), 32);
}

TEST(Encode, PermutationInvariantBitwise) {
  std::mt19937_64 rng(2);
  const auto p = init_params(1, ModelDims{});
  Coords x = random_coords(256, rng);
  const auto h = encode(p, x, false).h;
  std::vector<Eigen::Index> perm(256);
  for (Eigen::Index i = 0; i < 256; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int t = 0; t < 5; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Coords y(256, 3);
    for (Eigen::Index i = 0; i < 256; ++i) y.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    const auto hy = encode(p, y, false).h;
    EXPECT_EQ(0, std::memcmp(h.data(), hy.data(), sizeof(double) * static_cast<std::size_t>(h.size())));
  }
}

TEST(Encode, ZeroCloudEqualsSinglePointFeature) {
  const auto d = small_dims();
  const auto p = init_params(4, d);
  const auto h = encode(p, Coords::Zero(32, 3)).h;
  const auto one = oracle::encode_h(p, Coords::Zero(1, 3));
  for (Eigen::Index j = 0; j < h.size(); ++j) EXPECT_NEAR(h[j], one[static_cast<std::size_t>(j)], 1e-12);
}

TEST(Encode, MatchesStraightLineOracle) {
  std::mt19937_64 rng(3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = init_params(s, ModelDims{});
    const Coords x = random_coords(256, rng);
    const auto fb = encode(p, x);
    const auto h = oracle::encode_h(p, x);
    for (Eigen::Index j = 0; j < fb.h.size(); ++j) EXPECT_NEAR(fb.h[j], h[static_cast<std::size_t>(j)], 1e-12);
    const Eigen::VectorXd z = project(p, fb.h);
    EXPECT_EQ(z, fb.z);
  }
}

TEST(Encode, WrongPointCountRejected) {
  const auto p = init_params(1, small_dims());
  EXPECT_THROW(encode(p, Coords::Zero(31, 3)), InvalidInput);
}

TEST(Classify, ZeroWeightsPickFirstClass) {
  auto p = ModelParams::zeros(small_dims());
  const Eigen::VectorXd logits = classify(p, Eigen::VectorXd::Ones(16));
  EXPECT_TRUE(logits.isZero(0.0));
  EXPECT_EQ(predict_index(logits) + 1, 1);
}

TEST(Classify, LinearInH) {
  std::mt19937_64 rng(4);
  auto p = init_params(7, small_dims());
  p.cb.setZero();
  const Eigen::VectorXd h = Eigen::VectorXd::Random(16);
  const Eigen::VectorXd l1 = classify(p, h), l2 = classify(p, 3.5 * h);
  EXPECT_TRUE(l2.isApprox(3.5 * l1, 1e-14));
  EXPECT_EQ(predict_index(l1), predict_index(l2));
}

TEST(Classify, ManualDotProducts) {
  const auto p = init_params(8, small_dims());
  const Eigen::VectorXd h = Eigen::VectorXd::Random(16);
  const Eigen::VectorXd l = classify(p, h);
  for (Eigen::Index c = 0; c < 3; ++c) {
    double s = p.cb[c];
    for (Eigen::Index f = 0; f < 16; ++f) s += p.cw(f, c) * h[f];
    EXPECT_NEAR(l[c], s, 1e-12);
  }
}

TEST(Gradients, ZeroUpstreamGivesZero) {
  std::mt19937_64 rng(5);
  const auto p = init_params(1, small_dims());
  const auto fb = encode(p, random_coords(32, rng));
  Upstream up;
  up.dh = Eigen::VectorXd::Zero(16);
  up.dz = Eigen::VectorXd::Zero(6);
  up.dlogits = Eigen::VectorXd::Zero(3);
  const auto g = gradients(p, fb, up);
  EXPECT_TRUE(same_bits(g.params, ModelParams::zeros(p.dims)));
  EXPECT_TRUE(g.input.isZero(0.0));
}

TEST(Gradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  oracle::FdReport total;
  for (std::uint64_t t = 0; t < 5; ++t) {
    auto p = init_params(100 + t, small_dims());
    Coords x = random_coords(32, rng);
    const Eigen::VectorXd wh = Eigen::VectorXd::Random(16), wz = Eigen::VectorXd::Random(6),
                          wl = Eigen::VectorXd::Random(3);
    // scalar functional <wh, h> + <wz, z> + <wl, logits>
    const auto f = [&] {
      const auto fb = encode(p, x, false);
      return wh.dot(fb.h) + wz.dot(fb.z) + wl.dot(classify(p, fb.h));
    };
    const auto g = gradients(p, encode(p, x), Upstream{wh, wz, wl});
    const auto piece = [&] { return oracle::activation_pattern(encode(p, x)); };
    total.merge(oracle::fd_check_params(p, g.params, f, piece));
    total.merge(oracle::fd_check_coords(x, g.input, f, piece));
  }
  EXPECT_LT(total.worst, 1e-4);
  EXPECT_LT(static_cast<double>(total.kinks), 0.02 * static_cast<double>(total.checked));
}

TEST(Gradients, AccumulateIntoExistingBuffer) {
  std::mt19937_64 rng(7);
  const auto p = init_params(2, small_dims());
  const auto fb = encode(p, random_coords(32, rng));
  const Upstream up{Eigen::VectorXd::Ones(16), {}, {}};
  auto g = gradients(p, fb, up);
  ModelParams twice = g.params;
  backward(p, fb, up, &twice);
  ModelParams expect = g.params;
  expect.add_scaled(g.params);
  EXPECT_TRUE(same_bits(twice, expect));
}

TEST(Gradients, DuplicatePointTieGoesToLowerIndex) {
  std::mt19937_64 rng(8);
  const auto p = init_params(3, small_dims());
  Coords x = random_coords(32, rng);
  x.row(20) = x.row(5);
  const auto fb = encode(p, x);
  const auto g = gradients(p, fb, Upstream{Eigen::VectorXd::Ones(16), {}, {}});
  const auto& act = *fb.act;
  bool any_tie = false;
  for (std::size_t j = 0; j < 16; ++j)
    if (act.argmax[j] == 5 || act.argmax[j] == 20) {
      EXPECT_EQ(act.argmax[j], 5);
      any_tie = true;
    }
  if (any_tie) EXPECT_TRUE(g.input.row(20).isZero(0.0));
  // a cloud of identical points routes everything to point 0
  const auto same = encode(p, Coords::Zero(32, 3));
  for (auto r : same.act->argmax) EXPECT_EQ(r, 0);
}

TEST(Gradients, RequireRetainedActivations) {
  std::mt19937_64 rng(9);
  const auto p = init_params(3, small_dims());
  const auto fb = encode(p, random_coords(32, rng), false);
  EXPECT_THROW(gradients(p, fb, Upstream{Eigen::VectorXd::Ones(16), {}, {}}), InvalidInput);
}

TEST(Checkpoint, RoundTripBitwise) {
  const auto p = init_params(11, ModelDims{});
  std::stringstream ss;
  write_checkpoint(ss, p);
  const auto q = read_checkpoint(ss);
  EXPECT_TRUE(same_bits(p, q));
  EXPECT_EQ(parameter_hash(p), parameter_hash(q));
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad("not-a-checkpoint 1");
  EXPECT_THROW(read_checkpoint(bad), InvalidInput);
  std::stringstream ss;
  write_checkpoint(ss, init_params(1, small_dims()));
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::stringstream cut(text);
  EXPECT_THROW(read_checkpoint(cut), InvalidInput);
}
