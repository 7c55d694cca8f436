#include <cmath>

#include <gtest/gtest.h>

#include "npmvs/error.hpp"
#include "npmvs/evaluation.hpp"
#include "oracles.hpp"

namespace npmvs {
namespace {

using testing::Rng;

TEST(Segmentation, ConstantDepthIsAllLowestFrequency) {
  const DepthMap gt(32, 32, 1, 5.0);
  const RegionLabels labels = laplacian_segmentation(gt);
  for (std::uint8_t l : labels.data()) EXPECT_EQ(l, 4);
}

TEST(Segmentation, StepEdgeIsSharpestRegion) {
  DepthMap gt(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) gt(x, y) = x < 32 ? 10.0 : 20.0;
  const RegionLabels labels = laplacian_segmentation(gt);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      if (x == 31 || x == 32)
        EXPECT_EQ(labels(x, y), 0) << x;
      else
        EXPECT_GT(labels(x, y), 0) << x;
    }
  EXPECT_EQ(labels(0, 0), 4);
  EXPECT_EQ(labels(63, 63), 4);
}

TEST(Segmentation, AbsoluteThresholdOverridesFraction) {
  DepthMap gt(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) gt(x, y) = x < 16 ? 10.0 : 11.0;
  SegmentationOptions options;
  options.theta_absolute = 100.0;
  const RegionLabels labels = laplacian_segmentation(gt, options);
  for (std::uint8_t l : labels.data()) EXPECT_EQ(l, 4);
}

TEST(Segmentation, TooSmallMapThrows) {
  EXPECT_THROW(laplacian_segmentation(DepthMap(16, 40, 1, 1.0)), Error);
  EXPECT_NO_THROW(laplacian_segmentation(DepthMap(32, 32, 1, 1.0)));
}

TEST(Segmentation, PropertyPartitionsValidPixels) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = rng.integer(32, 70), h = rng.integer(32, 70);
    DepthMap gt(w, h);
    for (double& d : gt.data())
      d = rng.uniform(0, 1) < 0.1 ? std::nan("") : rng.uniform(1.0, 3.0);
    const RegionLabels labels = laplacian_segmentation(gt);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (std::isfinite(gt(x, y)))
          EXPECT_LT(labels(x, y), kRegionCount);
        else
          EXPECT_EQ(labels(x, y), kInvalidRegion);
      }
  }
}

TEST(UpsampleDepth, EqualCornersAreExact) {
  const DepthMap coarse(3, 3, 1, 0.1);
  const DepthMap fine = upsample_depth(coarse, 6, 6);
  for (double d : fine.data()) EXPECT_EQ(d, 0.1);
}

TEST(DownsampleDepth, IgnoresMissingChildren) {
  DepthMap d(3, 2, 1, std::nan(""));
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const DepthMap out = downsample_depth(d);
  EXPECT_EQ(out.width(), 2);
  EXPECT_EQ(out(0, 0), 3.0);
  EXPECT_TRUE(std::isnan(out(1, 0)));
}

TEST(RegionDepthError, MeansPerRegion) {
  DepthMap est(4, 1), gt(4, 1, 1, 10.0);
  RegionLabels labels(4, 1);
  est(0, 0) = 11.0;
  est(1, 0) = 13.0;
  est(2, 0) = 9.0;
  est(3, 0) = std::nan("");
  labels(0, 0) = 0;
  labels(1, 0) = 0;
  labels(2, 0) = 3;
  labels(3, 0) = 4;
  const auto err = region_depth_error(est, gt, labels);
  EXPECT_EQ(err[0], 2.0);
  EXPECT_FALSE(err[1]);
  EXPECT_FALSE(err[2]);
  EXPECT_EQ(err[3], 1.0);
  EXPECT_FALSE(err[4]);
  EXPECT_THROW(region_depth_error(DepthMap(3, 1), gt, labels), Error);
}

std::vector<FusionView> plane_views(int count, double z = 10.0) {
  std::vector<FusionView> views;
  for (int i = 0; i < count; ++i) {
    FusionView v;
    v.camera = testing::simple_camera(20, 9.5, 9.5, 20, 20, Vec3(0.5 * i, 0, 0));
    v.depth = DepthMap(20, 20, 1, z);
    views.push_back(std::move(v));
  }
  return views;
}

TEST(Fusion, NoRequiredViewsAcceptsEveryValidPixel) {
  auto views = plane_views(2);
  views[0].depth(3, 3) = std::nan("");
  FusionOptions options;
  options.n_min = 0;
  options.deduplicate = false;
  const FusionResult r = fuse_depth_maps(views, options);
  EXPECT_EQ(r.accepted_count, 799u);
  EXPECT_EQ(r.cloud.size(), 799u);
}

TEST(Fusion, ConsistentPlaneAcceptsOverlap) {
  const auto views = plane_views(3);
  FusionOptions options;
  options.n_min = 2;
  options.deduplicate = false;
  const FusionResult r = fuse_depth_maps(views, options);
  // View j sees pixel x of view 0 at column x - j.
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) EXPECT_EQ(r.accepted[0](x, y), x >= 2 ? 1 : 0) << x;
  for (const Vec3& p : r.cloud.points) EXPECT_NEAR(p.z(), 10.0, 1e-12);
}

TEST(Fusion, CorruptedViewIsNotConfirmed) {
  auto views = plane_views(3);
  for (double& d : views[2].depth.data()) d *= 1.5;
  FusionOptions options;
  options.n_min = 2;
  options.deduplicate = false;
  EXPECT_EQ(fuse_depth_maps(views, options).accepted_count, 0u);
  options.n_min = 1;
  const FusionResult r = fuse_depth_maps(views, options);
  for (std::uint8_t a : r.accepted[2].data()) EXPECT_EQ(a, 0);
  EXPECT_GT(r.accepted_count, 0u);
}

TEST(Fusion, DeduplicationConsumesConfirmingPixels) {
  auto views = plane_views(1);
  views.push_back(views[0]);
  FusionOptions options;
  options.n_min = 1;
  const FusionResult r = fuse_depth_maps(views, options);
  EXPECT_EQ(r.accepted_count, 800u);
  EXPECT_EQ(r.cloud.size(), 400u);
}

TEST(Fusion, PropertyMonotoneInThresholds) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto views = plane_views(4);
    for (auto& v : views)
      for (double& d : v.depth.data()) d *= 1.0 + 0.02 * rng.normal();
    std::size_t previous = SIZE_MAX;
    for (int n = 0; n <= 3; ++n) {
      FusionOptions options;
      options.n_min = n;
      const std::size_t c = fuse_depth_maps(views, options).accepted_count;
      EXPECT_LE(c, previous);
      previous = c;
    }
    previous = 0;
    for (double tau : {0.001, 0.01, 0.02, 0.05, 0.1}) {
      FusionOptions options;
      options.tau = tau;
      options.n_min = 2;
      const std::size_t c = fuse_depth_maps(views, options).accepted_count;
      EXPECT_GE(c, previous);
      previous = c;
    }
  }
}

TEST(NearestNeighborIndex, PropertyMatchesBruteForce) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> cloud(rng.integer(1, 300));
    for (Vec3& p : cloud) p = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const double cell = rng.uniform(0.2, 2.0);
    const NearestNeighborIndex index(cloud, cell);
    for (int q = 0; q < 200; ++q) {
      const Vec3 query(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6));
      const double radius = rng.uniform(0, cell);
      const double truth = testing::brute_nearest(cloud, query);
      const auto found = index.nearest_within(query, radius);
      if (truth <= radius) {
        ASSERT_TRUE(found);
        EXPECT_EQ(*found, truth);
      } else {
        EXPECT_FALSE(found);
      }
    }
  }
  const std::vector<Vec3> one{Vec3::Zero()};
  EXPECT_THROW(NearestNeighborIndex(one, 1.0).nearest_within(Vec3::Zero(), 2.0), Error);
}

TEST(AccuracyCompleteness, HandExample) {
  PointCloud est, gt;
  est.points = {Vec3(0, 0, 0)};
  gt.points = {Vec3(1, 0, 0), Vec3(0, 3, 0)};
  const CloudMetrics m = accuracy_completeness(est, gt, 2.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.completeness, 1.0);
  EXPECT_EQ(m.accuracy_inliers, 1u);
  EXPECT_EQ(m.completeness_inliers, 1u);
  EXPECT_EQ(m.overall, 1.0);
}

TEST(AccuracyCompleteness, IdenticalCloudsScoreZero) {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1, 2, 3)};
  const CloudMetrics m = accuracy_completeness(c, c, 0.5);
  EXPECT_EQ(m.overall, 0.0);
}

TEST(AccuracyCompleteness, NoInliersIsNaN) {
  PointCloud a, b;
  a.points = {Vec3(0, 0, 0)};
  b.points = {Vec3(10, 0, 0)};
  EXPECT_TRUE(std::isnan(accuracy_completeness(a, b, 1.0).overall));
  EXPECT_TRUE(std::isnan(accuracy_completeness(a, PointCloud{}, 1.0).accuracy));
}

TEST(AccuracyCompleteness, PropertySwappingCloudsSwapsTerms) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    PointCloud a, b;
    a.points.resize(rng.integer(1, 100));
    b.points.resize(rng.integer(1, 100));
    for (Vec3& p : a.points) p = Vec3(rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 3));
    for (Vec3& p : b.points) p = Vec3(rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 3));
    const CloudMetrics ab = accuracy_completeness(a, b, 1.0);
    const CloudMetrics ba = accuracy_completeness(b, a, 1.0);
    EXPECT_EQ(ab.accuracy, ba.completeness);
    EXPECT_EQ(ab.completeness, ba.accuracy);
    EXPECT_EQ(ab.overall, ba.overall);
  }
}

}  // namespace
}  // namespace npmvs
