#include <cmath>

#include <gtest/gtest.h>

#include "npmvs/error.hpp"
#include "npmvs/geometry.hpp"
#include "oracles.hpp"

namespace npmvs {
namespace {

using testing::Rng;

TEST(ScaleCamera, LevelZeroIsIdentity) {
  Rng rng(1);
  const CameraView cam = testing::random_camera(rng);
  const CameraView out = scale_camera(cam, 0);
  EXPECT_EQ(out.intrinsics, cam.intrinsics);
  EXPECT_EQ(out.rotation, cam.rotation);
  EXPECT_EQ(out.translation, cam.translation);
  EXPECT_EQ(out.width, cam.width);
  EXPECT_EQ(out.height, cam.height);
}

TEST(ScaleCamera, FocalAndSizeDivideByPowerOfTwo) {
  const CameraView cam = testing::simple_camera(1600, 800, 600, 1600, 1200);
  const CameraView l2 = scale_camera(cam, 2);
  EXPECT_DOUBLE_EQ(l2.intrinsics(0, 0), 400.0);
  EXPECT_DOUBLE_EQ(l2.intrinsics(1, 1), 400.0);
  EXPECT_EQ(l2.width, 400);
  EXPECT_EQ(l2.height, 300);
  const CameraView l1 = scale_camera(cam, 1);
  EXPECT_DOUBLE_EQ(l1.intrinsics(0, 2), 400.0);
  EXPECT_DOUBLE_EQ(l1.intrinsics(1, 2), 300.0);
  EXPECT_EQ(l1.rotation, cam.rotation);
  EXPECT_EQ(l1.translation, cam.translation);
}

TEST(ScaleCamera, OddSizesRoundUpToMatchThePyramid) {
  const CameraView cam = testing::simple_camera(10, 2, 2, 5, 3);
  const CameraView l1 = scale_camera(cam, 1);
  EXPECT_EQ(l1.width, 3);
  EXPECT_EQ(l1.height, 2);
  EXPECT_EQ(scale_camera(cam, 4).width, 1);
}

TEST(ScaleCamera, RejectsEmptyCameraAndNegativeLevel) {
  CameraView cam = testing::simple_camera(10, 2, 2, 0, 3);
  EXPECT_THROW(scale_camera(cam, 1), Error);
  cam.width = 4;
  EXPECT_THROW(scale_camera(cam, -1), Error);
}

TEST(CameraView, ValidateRejectsBadRotationAndIntrinsics) {
  CameraView cam = testing::simple_camera(10, 2, 2, 4, 4);
  EXPECT_NO_THROW(cam.validate());
  CameraView reflected = cam;
  reflected.rotation(0, 0) = -1.0;  // determinant -1
  EXPECT_THROW(reflected.validate(), Error);
  CameraView skewed = cam;
  skewed.rotation(0, 1) = 0.1;
  EXPECT_THROW(skewed.validate(), Error);
  CameraView lower = cam;
  lower.intrinsics(1, 0) = 0.5;
  EXPECT_THROW(lower.validate(), Error);
  CameraView negative = cam;
  negative.intrinsics(0, 0) = -3.0;
  EXPECT_THROW(negative.validate(), Error);
}

TEST(SampleInverseDepth, UniformInInverseDepth) {
  const DepthSamples s = sample_inverse_depth({1.0, 2.0}, 3);
  ASSERT_EQ(s.depths.size(), 3u);
  EXPECT_DOUBLE_EQ(s.depths[0], 1.0);
  EXPECT_NEAR(s.depths[1], 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.depths[2], 2.0);
  EXPECT_DOUBLE_EQ(s.inverse_step, 0.25);
  ASSERT_EQ(s.metric_intervals.size(), 3u);
  EXPECT_NEAR(s.metric_intervals[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.metric_intervals[1], 0.5, 1e-15);
  EXPECT_NEAR(s.metric_intervals[2], 2.0 / 3.0, 1e-15);
}

TEST(SampleInverseDepth, TwoSamplesAreTheEndpoints) {
  const DepthSamples s = sample_inverse_depth({3.0, 7.0}, 2);
  ASSERT_EQ(s.depths.size(), 2u);
  EXPECT_EQ(s.depths[0], 3.0);
  EXPECT_EQ(s.depths[1], 7.0);
}

TEST(SampleInverseDepth, RejectsDegenerateInput) {
  EXPECT_THROW(sample_inverse_depth({2.0, 2.0}, 4), Error);
  EXPECT_THROW(sample_inverse_depth({3.0, 2.0}, 4), Error);
  EXPECT_THROW(sample_inverse_depth({0.0, 2.0}, 4), Error);
  EXPECT_THROW(sample_inverse_depth({1.0, 2.0}, 1), Error);
}

TEST(SampleInverseDepth, PropertyStrictlyIncreasingWithExactEndpoints) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const double lo = rng.uniform(0.01, 100.0);
    const double hi = lo * rng.uniform(1.001, 100.0);
    const int m = rng.integer(2, 200);
    const DepthSamples s = sample_inverse_depth({lo, hi}, m);
    ASSERT_EQ(static_cast<int>(s.depths.size()), m);
    EXPECT_EQ(s.depths.front(), lo);
    EXPECT_EQ(s.depths.back(), hi);
    for (int i = 1; i < m; ++i) {
      ASSERT_LT(s.depths[i - 1], s.depths[i]);
      EXPECT_NEAR(1.0 / s.depths[i - 1] - 1.0 / s.depths[i], s.inverse_step,
                  1e-9 * (1.0 / lo));
    }
  }
}

TEST(PlaneHomography, SameCameraIsIdentity) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const CameraView cam = testing::random_camera(rng);
    Mat3 h = plane_homography(cam, cam, rng.uniform(0.5, 50.0));
    h /= h(2, 2);
    EXPECT_LT((h - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PlaneHomography, PureTranslationShiftsByBaselineOverDepth) {
  const double b = 0.7, d = 4.0;
  const CameraView ref = testing::simple_camera(1, 0, 0, 10, 10);
  const CameraView src = testing::simple_camera(1, 0, 0, 10, 10, Vec3(b, 0, 0));
  const Mat3 h = plane_homography(ref, src, d);
  for (const Vec2& p : {Vec2(0, 0), Vec2(3, -2), Vec2(1.5, 8)}) {
    const Vec3 q = h * Vec3(p.x(), p.y(), 1.0);
    EXPECT_NEAR(q.x() / q.z(), p.x() - b / d, 1e-12);
    EXPECT_NEAR(q.y() / q.z(), p.y(), 1e-12);
  }
}

TEST(PlaneHomography, FarPlaneApproachesInfiniteHomography) {
  Rng rng(5);
  const CameraView ref = testing::random_camera(rng);
  const CameraView src = testing::random_camera(rng);
  Mat3 h = plane_homography(ref, src, 1e12);
  Mat3 inf = src.intrinsics * src.rotation * ref.rotation.transpose() * ref.intrinsics.inverse();
  h /= h(2, 2);
  inf /= inf(2, 2);
  EXPECT_LT((h - inf).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PlaneHomography, AgreesWithUnprojectThenProject) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const CameraView ref = testing::random_camera(rng);
    CameraView src = ref;
    src.translation += Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    const double d = rng.uniform(5.0, 50.0);
    const Vec2 px(rng.uniform(0, 63), rng.uniform(0, 47));
    const Vec3 q = plane_homography(ref, src, d) * Vec3(px.x(), px.y(), 1.0);
    const Projection p = project(unproject(px, d, ref), src);
    EXPECT_NEAR(q.x() / q.z(), p.pixel.x(), 1e-7);
    EXPECT_NEAR(q.y() / q.z(), p.pixel.y(), 1e-7);
  }
}

TEST(PlaneHomography, RejectsNonPositiveDepth) {
  const CameraView cam = testing::simple_camera(1, 0, 0, 4, 4);
  EXPECT_THROW(plane_homography(cam, cam, 0.0), Error);
}

TEST(Unproject, IdentityCameraOnAxis) {
  const CameraView cam = testing::simple_camera(1, 0, 0, 4, 4);
  EXPECT_EQ(unproject(Vec2(0, 0), 5.0, cam), Vec3(0, 0, 5));
}

TEST(Unproject, FocalTwoOffAxis) {
  const CameraView cam = testing::simple_camera(2, 0, 0, 4, 4);
  const Vec3 p = unproject(Vec2(2, 0), 3.0, cam);
  EXPECT_NEAR(p.x(), 3.0, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_NEAR(p.z(), 3.0, 1e-15);
}

TEST(Project, RoundTripBelowNanopixel) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const CameraView cam = testing::random_camera(rng);
    const Vec2 px(rng.uniform(-10, 70), rng.uniform(-10, 60));
    const double d = rng.uniform(0.1, 1000.0);
    const Projection p = project(unproject(px, d, cam), cam);
    EXPECT_LT((p.pixel - px).norm(), 1e-9);
    EXPECT_NEAR(p.depth, d, 1e-9 * d);
  }
}

TEST(Project, BehindCameraIsAGeometryError) {
  const CameraView cam = testing::simple_camera(1, 0, 0, 4, 4);
  EXPECT_FALSE(try_project(Vec3(0, 0, -1), cam).has_value());
  try {
    project(Vec3(0, 0, -1), cam);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Geometry);
  }
}

FeatureMap ramp_map(int w, int h, int channels) {
  FeatureMap m(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) m.values(x, y, c) = x + 10.0 * y + 100.0 * c;
  return m;
}

TEST(WarpMap, IdentityIsBitExact) {
  Rng rng(17);
  FeatureMap m(9, 7, 3);
  for (double& v : m.values.data()) v = rng.normal();
  const FeatureMap out = warp_map(m, Mat3::Identity(), 9, 7);
  EXPECT_EQ(out.values, m.values);
  EXPECT_EQ(out.valid, m.valid);
}

TEST(WarpMap, IntegerTranslationOfConstantMap) {
  FeatureMap m(8, 6, 2);
  for (double& v : m.values.data()) v = 3.5;
  Mat3 h = Mat3::Identity();
  h(0, 2) = 2.0;  // reference x -> source x + 2
  const FeatureMap out = warp_map(m, h, 8, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool inside = x + 2 <= 7;
      EXPECT_EQ(out.is_valid(x, y), inside) << x << "," << y;
      for (int c = 0; c < 2; ++c) EXPECT_EQ(out.values(x, y, c), inside ? 3.5 : 0.0);
    }
}

TEST(WarpMap, HalfPixelShiftOfRamp) {
  const FeatureMap m = ramp_map(8, 4, 1);
  Mat3 h = Mat3::Identity();
  h(0, 2) = 0.5;
  const FeatureMap out = warp_map(m, h, 8, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 7; ++x) {
      ASSERT_TRUE(out.is_valid(x, y));
      EXPECT_NEAR(out.values(x, y, 0), x + 0.5 + 10.0 * y, 1e-12);
    }
  EXPECT_FALSE(out.is_valid(7, 0));
}

TEST(SampleBilinear, ExactAtIntegersAndRejectsOutside) {
  const FeatureMap m = ramp_map(5, 5, 2);
  double out[2];
  ASSERT_TRUE(sample_bilinear(m, 4.0, 4.0, out));
  EXPECT_EQ(out[0], 44.0);
  EXPECT_EQ(out[1], 144.0);
  ASSERT_TRUE(sample_bilinear(m, 1.25, 2.5, out));
  EXPECT_NEAR(out[0], 26.25, 1e-12);
  EXPECT_FALSE(sample_bilinear(m, -0.01, 2.0, out));
  EXPECT_FALSE(sample_bilinear(m, 4.01, 2.0, out));
}

TEST(SampleBilinear, InvalidNeighbourOnlyMattersWithWeight) {
  FeatureMap m = ramp_map(4, 4, 1);
  m.valid(2, 1) = 0;
  double out[1];
  EXPECT_TRUE(sample_bilinear(m, 1.0, 1.0, out));
  EXPECT_FALSE(sample_bilinear(m, 1.5, 1.0, out));
}

}  // namespace
}  // namespace npmvs
