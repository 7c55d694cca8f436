#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "npmvs/dense_costvol.hpp"
#include "npmvs/error.hpp"
#include "npmvs/features.hpp"
#include "oracles.hpp"

namespace npmvs {
namespace {

using testing::Rng;

TEST(GroupwiseCorrelation, OnesGiveOnes) {
  const std::vector<double> a{1, 1, 1, 1};
  EXPECT_EQ(groupwise_correlation(a, a, 2), (std::vector<double>{1, 1}));
}

TEST(GroupwiseCorrelation, ZeroSourceGivesZero) {
  const std::vector<double> a{1, 2, 3, 4}, z{0, 0, 0, 0};
  EXPECT_EQ(groupwise_correlation(a, z, 2), (std::vector<double>{0, 0}));
}

TEST(GroupwiseCorrelation, HandDotProducts) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 1, 1, 1};
  const auto c = groupwise_correlation(a, b, 2);
  EXPECT_DOUBLE_EQ(c[0], 1.5);
  EXPECT_DOUBLE_EQ(c[1], 3.5);
}

TEST(GroupwiseCorrelation, RejectsIndivisibleGroups) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  EXPECT_THROW(groupwise_correlation(a, a, 4), Error);
}

FeatureMap random_features(Rng& rng, int w, int h) {
  FeatureMap f(w, h, kFeatureChannels);
  for (double& v : f.values.data()) v = rng.normal();
  return f;
}

TEST(BuildViewCost, SameViewGivesSelfCorrelationInside) {
  Rng rng(1);
  const FeatureMap f = random_features(rng, 6, 5);
  const CameraView cam = testing::simple_camera(5, 3, 2, 6, 5);
  const std::vector<double> depths{1.0, 2.0, 4.0};
  const CostVolume v = build_view_cost(f, f, cam, cam, depths, 4);
  // The homography is the identity only up to rounding, so border pixels may
  // land a hair outside the image.
  for (int y = 1; y < 4; ++y)
    for (int x = 1; x < 5; ++x) {
      const auto self = groupwise_correlation(f.values.cell(x, y), f.values.cell(x, y), 4);
      for (int m = 0; m < 3; ++m) {
        EXPECT_EQ(v.valid_views(x, y, m), 1);
        for (int g = 0; g < 4; ++g) EXPECT_NEAR(v.cost(x, y, m)[g], self[g], 1e-9);
      }
    }
}

TEST(BuildViewCost, DisjointFrustaGiveZeroVolume) {
  Rng rng(2);
  const FeatureMap f = random_features(rng, 6, 5);
  const CameraView ref = testing::simple_camera(5, 3, 2, 6, 5);
  const CameraView src = testing::simple_camera(5, 3, 2, 6, 5, Vec3(1000, 0, 0));
  const std::vector<double> depths{1.0, 2.0};
  const CostVolume v = build_view_cost(f, f, ref, src, depths, 2);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x)
      for (int m = 0; m < 2; ++m) {
        EXPECT_EQ(v.valid_views(x, y, m), 0);
        for (double c : v.cost(x, y, m)) EXPECT_EQ(c, 0.0);
      }
}

TEST(BuildViewCost, TexturedPlaneArgmaxIsNearestSample) {
  // Two views of a plane at z = 4 with a one-pixel disparity step between
  // consecutive samples; the true depth sits on sample 6.
  const int w = 48, h = 40;
  const double f = 40, b = 1.0, z = 4.0;
  const CameraView ref = testing::simple_camera(f, 23.5, 19.5, w, h);
  std::vector<CameraView> srcs{
      testing::simple_camera(f, 23.5, 19.5, w, h, Vec3(b, 0, 0)),
      testing::simple_camera(f, 23.5, 19.5, w, h, Vec3(-b, 0, 0))};
  std::vector<double> depths;
  const double true_disp = f * b / z;
  for (int m = 0; m < 12; ++m) depths.push_back(f * b / (true_disp + 6 - m));
  std::sort(depths.begin(), depths.end());
  const FeatureMap rf = extract_features(testing::render_plane(ref, z));
  std::vector<CostVolume> vols;
  for (const CameraView& s : srcs)
    vols.push_back(build_view_cost(rf, extract_features(testing::render_plane(s, z)), ref, s,
                                   depths, 4));
  const ProbabilityVolume p = regularize_dense(aggregate_views(vols));
  int hits = 0, total = 0;
  for (int y = 6; y < h - 6; ++y)
    for (int x = 12; x < w - 12; ++x) {
      const auto pr = p.probs(x, y);
      const int arg = static_cast<int>(std::max_element(pr.begin(), pr.end()) - pr.begin());
      const int nearest = static_cast<int>(
          std::min_element(depths.begin(), depths.end(),
                           [&](double a, double c) { return std::abs(a - z) < std::abs(c - z); }) -
          depths.begin());
      hits += arg == nearest;
      ++total;
    }
  EXPECT_GE(static_cast<double>(hits) / total, 0.95);
}

CostVolume volume_from(const std::vector<std::vector<double>>& per_sample_groups, int valid = 1) {
  const int m_count = static_cast<int>(per_sample_groups.size());
  const int g = static_cast<int>(per_sample_groups[0].size());
  CostVolume v(1, 1, m_count, g);
  for (int m = 0; m < m_count; ++m) {
    for (int k = 0; k < g; ++k) v.cost(0, 0, m)[k] = per_sample_groups[m][k];
    v.valid_views(0, 0, m) = valid;
  }
  return v;
}

TEST(AggregateViews, SingleViewIsUnchanged) {
  const CostVolume v = volume_from({{0.5, 0.1}, {0.2, 0.9}});
  const std::vector<CostVolume> views{v};
  const CostVolume fused = aggregate_views(views);
  for (int m = 0; m < 2; ++m)
    for (int g = 0; g < 2; ++g) EXPECT_DOUBLE_EQ(fused.cost(0, 0, m)[g], v.cost(0, 0, m)[g]);
}

TEST(AggregateViews, IdenticalViewsFuseToEither) {
  const CostVolume v = volume_from({{0.5, 0.1}, {0.2, 0.9}});
  const std::vector<CostVolume> views{v, v};
  const CostVolume fused = aggregate_views(views);
  for (int m = 0; m < 2; ++m)
    for (int g = 0; g < 2; ++g) EXPECT_DOUBLE_EQ(fused.cost(0, 0, m)[g], v.cost(0, 0, m)[g]);
  EXPECT_EQ(fused.valid_views(0, 0, 0), 2);
}

TEST(AggregateViews, VisibilityWeightedMean) {
  // View a: best group mean 1 -> v = 1; view b: best group mean 3 -> v = 3.
  // Group 0 of sample 0 carries costs 0 and 4: fused (1*0 + 3*4) / 4 = 3.
  const CostVolume a = volume_from({{0.0, 2.0}, {0.5, 0.5}});
  const CostVolume b = volume_from({{4.0, 2.0}, {1.0, 1.0}});
  EXPECT_DOUBLE_EQ(visibility_weights(a)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(visibility_weights(b)(0, 0), 3.0);
  const std::vector<CostVolume> views{a, b};
  EXPECT_DOUBLE_EQ(aggregate_views(views).cost(0, 0, 0)[0], 3.0);
}

TEST(AggregateViews, NegativeCorrelationGivesZeroWeightAndInvalidPixel) {
  const CostVolume a = volume_from({{-1.0, -2.0}, {-0.5, -0.5}});
  const std::vector<CostVolume> views{a};
  const CostVolume fused = aggregate_views(views);
  EXPECT_EQ(visibility_weights(a)(0, 0), 0.0);
  EXPECT_EQ(fused.valid_views(0, 0, 0), 0);
  EXPECT_FALSE(regularize_dense(fused).valid(0, 0));
}

TEST(AggregateViews, RejectsEmptyInput) {
  const std::vector<CostVolume> none;
  EXPECT_THROW(aggregate_views(none), Error);
}

TEST(AggregateViews, PropertyPermutationInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<CostVolume> views;
    for (int i = 0; i < 4; ++i) {
      CostVolume v(3, 2, 5, 2);
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 3; ++x)
          for (int m = 0; m < 5; ++m) {
            for (double& c : v.cost(x, y, m)) c = rng.normal();
            v.valid_views(x, y, m) = rng.integer(0, 1);
          }
      views.push_back(v);
    }
    const CostVolume a = aggregate_views(views);
    std::reverse(views.begin(), views.end());
    std::swap(views[0], views[2]);
    const CostVolume b = aggregate_views(views);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 3; ++x)
        for (int m = 0; m < 5; ++m) {
          EXPECT_EQ(a.valid_views(x, y, m), b.valid_views(x, y, m));
          for (int g = 0; g < 2; ++g)
            EXPECT_NEAR(a.cost(x, y, m)[g], b.cost(x, y, m)[g], 1e-12);
        }
  }
}

TEST(RegularizeDense, UniformCostGivesUniformDistribution) {
  CostVolume v(4, 3, 6, 2);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int m = 0; m < 6; ++m) {
        v.cost(x, y, m)[0] = v.cost(x, y, m)[1] = 0.3;
        v.valid_views(x, y, m) = 1;
      }
  const ProbabilityVolume p = regularize_dense(v);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (double q : p.probs(x, y)) EXPECT_NEAR(q, 1.0 / 6.0, 1e-12);
}

TEST(RegularizeDense, SoftmaxOfLnNineWithoutSmoothing) {
  const CostVolume v = volume_from({{0.0}, {std::log(9.0)}});
  const ProbabilityVolume p = regularize_dense(v, RegularizeOptions{0, 1.0});
  EXPECT_NEAR(p.probs(0, 0)[0], 0.1, 1e-12);
  EXPECT_NEAR(p.probs(0, 0)[1], 0.9, 1e-12);
}

TEST(RegularizeDense, SmoothingAlongDepthOnASinglePixel) {
  // Two passes of the renormalised (1,2,1) kernel over depth on two samples:
  // pass 1 gives (ln9/3, 2ln9/3), pass 2 gives (4ln9/9, 5ln9/9).
  const CostVolume v = volume_from({{0.0}, {std::log(9.0)}});
  const ProbabilityVolume p = regularize_dense(v);
  const double gap = std::log(9.0) / 9.0;
  EXPECT_NEAR(p.probs(0, 0)[0], 1.0 / (1.0 + std::exp(gap)), 1e-12);
  EXPECT_NEAR(p.probs(0, 0)[1], std::exp(gap) / (1.0 + std::exp(gap)), 1e-12);
}

TEST(RegularizeDense, PropertyNormalisedOnRandomVolumes) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    CostVolume v(rng.integer(1, 6), rng.integer(1, 6), rng.integer(1, 12), 2);
    for (int y = 0; y < v.height(); ++y)
      for (int x = 0; x < v.width(); ++x)
        for (int m = 0; m < v.samples(); ++m) {
          for (double& c : v.cost(x, y, m)) c = 3.0 * rng.normal();
          v.valid_views(x, y, m) = rng.integer(0, 2);
        }
    const ProbabilityVolume p = regularize_dense(v);
    for (int y = 0; y < v.height(); ++y)
      for (int x = 0; x < v.width(); ++x) {
        const auto pr = p.probs(x, y);
        const double s = std::accumulate(pr.begin(), pr.end(), 0.0);
        if (p.valid(x, y)) {
          EXPECT_NEAR(s, 1.0, 1e-6);
          for (double q : pr) EXPECT_TRUE(q >= 0.0 && q <= 1.0);
        } else {
          EXPECT_EQ(s, 0.0);
        }
      }
  }
}

TEST(RegularizeDense, PropertyArgmaxKeptForSymmetricUnimodalProfiles) {
  // A depth profile that is symmetric and unimodal about the middle sample,
  // constant over (x, y), keeps its argmax through smoothing.
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int peak = rng.integer(1, 12);
    const int m_count = 2 * peak + 1;
    const double width = rng.uniform(0.3, 6.0);
    CostVolume v(rng.integer(1, 5), rng.integer(1, 5), m_count, 1);
    for (int y = 0; y < v.height(); ++y)
      for (int x = 0; x < v.width(); ++x)
        for (int m = 0; m < m_count; ++m) {
          v.cost(x, y, m)[0] = std::exp(-std::abs(m - peak) / width);
          v.valid_views(x, y, m) = 1;
        }
    const ProbabilityVolume p = regularize_dense(v);
    for (int y = 0; y < v.height(); ++y)
      for (int x = 0; x < v.width(); ++x) {
        const auto pr = p.probs(x, y);
        EXPECT_EQ(std::max_element(pr.begin(), pr.end()) - pr.begin(), peak);
      }
  }
}

TEST(Softmax, StableForLargeScores) {
  const std::vector<double> s{1000.0, 1000.0 + std::log(3.0)};
  std::vector<double> out(2);
  softmax(s, 1.0, out);
  EXPECT_NEAR(out[0], 0.25, 1e-12);
  EXPECT_NEAR(out[1], 0.75, 1e-12);
  EXPECT_THROW(softmax(s, 0.0, out), Error);
}

}  // namespace
}  // namespace npmvs
