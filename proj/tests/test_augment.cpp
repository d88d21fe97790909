#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "pointacl/augment.hpp"

using namespace pointacl;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed, int label = 2) {
  std::mt19937_64 rng(seed);
  return PointCloud(oracle::random_points(n, rng), label, "c");
}

double max_pairwise_change(const PointCloud& a, const PointCloud& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      worst = std::max(worst, std::abs((a.points[i] - a.points[j]).norm() - (b.points[i] - b.points[j]).norm()));
  return worst;
}

}  // namespace

TEST(SampleSpec, Deterministic) {
  EXPECT_EQ(sample_spec(42, 256), sample_spec(42, 256));
  EXPECT_FALSE(sample_spec(42, 256) == sample_spec(43, 256));
}

TEST(SampleSpec, RangeAudit) {
  const AugmentationBounds b;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto spec = sample_spec(s, 256);
    for (double a : spec.rotation_deg) ASSERT_LE(std::abs(a), 15.0);
    for (double t : spec.translation) ASSERT_LE(std::abs(t), 0.10);
    ASSERT_GE(spec.scale, 0.8);
    ASSERT_LE(spec.scale, 1.25);
    ASSERT_TRUE(spec.crop.has_value());
    const Point3 e = spec.crop->extent_frac;
    const double vol = e.prod();
    ASSERT_GE(vol, 0.6 - 1e-12);
    ASSERT_LE(vol, 1.0 + 1e-12);
    ASSERT_LE(e.maxCoeff(), 1.0 + 1e-12);
    // cube-root fallback has ratio 1; otherwise both ratios to the z side are sampled in range
    ASSERT_GE(e.x() / e.z(), b.aspect_min - 1e-12);
    ASSERT_LE(e.x() / e.z(), b.aspect_max + 1e-12);
    ASSERT_GE(e.y() / e.z(), b.aspect_min - 1e-12);
    ASSERT_LE(e.y() / e.z(), b.aspect_max + 1e-12);
    ASSERT_TRUE(spec.cutout.has_value());
    for (int k = 0; k < 3; ++k) {
      ASSERT_GE(spec.cutout->extent_frac[k], 0.1);
      ASSERT_LE(spec.cutout->extent_frac[k], 0.4);
    }
    ASSERT_GE(spec.jitter, 0.0);
    ASSERT_LE(spec.jitter, 0.05);
    ASSERT_GE(spec.dropout_ratio, 0.0);
    ASSERT_LE(spec.dropout_ratio, 0.7);
  }
}

TEST(Apply, IdentityIsBitEqual) {
  const auto c = random_cloud(300, 1);
  EXPECT_EQ(apply(c, AugmentationSpec::identity(c.size())), c);
}

TEST(Apply, RotationPreservesDistances) {
  const auto c = random_cloud(200, 2);
  AugmentationSpec s = AugmentationSpec::identity(c.size());
  s.rotation_deg = {12.0, -7.5, 14.0};
  const auto r = apply(c, s);
  EXPECT_LT(max_pairwise_change(c, r), 1e-6);
  s.translation = {0.1, -0.05, 0.02};
  EXPECT_LT(max_pairwise_change(c, apply(c, s)), 1e-6);
}

TEST(Apply, DropoutKeepsDistinctSources) {
  const auto c = random_cloud(2048, 3);
  AugmentationSpec s = AugmentationSpec::identity(2048);
  s.dropout_ratio = 0.7;
  s.sample_seed = 99;
  AugmentReport rep;
  const auto out = apply(c, s, &rep);
  ASSERT_EQ(out.size(), 2048u);
  const std::set<std::size_t> distinct(rep.source_indices.begin(), rep.source_indices.end());
  EXPECT_GE(distinct.size(), 615u);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out.points[i], c.points[rep.source_indices[i]]);
}

TEST(Apply, SampledSpecsHitTargetAndNormalize) {
  const auto c = random_cloud(400, 4, 3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto out = apply(c, sample_spec(seed, 256));
    ASSERT_EQ(out.size(), 256u);
    ASSERT_EQ(out.label, c.label);
    Point3 mean = Point3::Zero();
    for (const auto& p : out.points) mean += p;
    mean /= 256.0;
    for (const auto& p : out.points) ASSERT_LE((p - mean).norm(), 1.0 + 1e-6);
  }
}

TEST(Apply, Deterministic) {
  const auto c = random_cloud(300, 5);
  const auto s = sample_spec(7, 128);
  EXPECT_EQ(apply(c, s), apply(c, s));
}

TEST(Apply, EmptyCropFallsBackToFullVolume) {
  // two clusters at the box corners; a small central crop contains nothing
  std::vector<Point3> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(0.0, 0.0, 0.01 * i);
  for (int i = 0; i < 10; ++i) pts.emplace_back(1.0, 1.0, 1.0 - 0.01 * i);
  PointCloud c(pts);
  AugmentationSpec s = AugmentationSpec::identity(c.size());
  s.crop = Cuboid{Point3::Constant(0.5), Point3::Constant(0.2)};
  s.cutout = Cuboid{Point3::Constant(0.5), Point3::Constant(3.0)};
  AugmentReport rep;
  const auto out = apply(c, s, &rep);
  EXPECT_EQ(rep.crop_retries, 1u);
  EXPECT_EQ(rep.cutout_retries, 1u);
  EXPECT_EQ(out, c);
}

TEST(Apply, RejectsInvalidClouds) {
  EXPECT_THROW(apply(PointCloud{}, AugmentationSpec{}), InvalidInput);
  PointCloud bad({Point3(0, std::nan(""), 0)});
  EXPECT_THROW(apply(bad, AugmentationSpec{}), InvalidInput);
}
