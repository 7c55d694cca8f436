#include "npmvs/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

void CameraView::validate() const {
  const Mat3 should_be_identity = rotation * rotation.transpose();
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(rotation.determinant() - 1.0) > 1e-6)
    fail(ErrorKind::Geometry, "rotation is not orthonormal with determinant +1");
  if (intrinsics(1, 0) != 0.0 || intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0)
    fail(ErrorKind::Geometry, "intrinsics must be upper triangular");
  if (!(intrinsics(0, 0) > 0.0) || !(intrinsics(1, 1) > 0.0))
    fail(ErrorKind::Geometry, "focal lengths must be positive");
  if (width < 1 || height < 1) fail(ErrorKind::Geometry, "image dimensions must be positive");
}

void DepthRange::validate() const {
  if (!(min > 0.0) || !(max > min) || !std::isfinite(max)) {
    std::ostringstream os;
    os << "invalid depth range [" << min << ", " << max << "]";
    fail(ErrorKind::InvalidArgument, os.str());
  }
}

CameraView scale_camera(const CameraView& cam, int level) {
  require(level >= 0 && level < 31, "pyramid level out of range");
  if (cam.width < 1 || cam.height < 1) fail(ErrorKind::Geometry, "camera has no pixels");
  if (level == 0) return cam;
  const double s = std::ldexp(1.0, -level);
  const int div = 1 << level;
  CameraView out = cam;
  out.intrinsics(0, 0) *= s;
  out.intrinsics(0, 1) *= s;
  out.intrinsics(0, 2) *= s;
  out.intrinsics(1, 1) *= s;
  out.intrinsics(1, 2) *= s;
  out.width = (cam.width + div - 1) / div;
  out.height = (cam.height + div - 1) / div;
  return out;
}

DepthSamples sample_inverse_depth(const DepthRange& range, int count) {
  require(count >= 2, "at least two depth samples are required");
  range.validate();
  DepthSamples out;
  const double inv_near = 1.0 / range.min;
  const double inv_far = 1.0 / range.max;
  out.inverse_step = (inv_near - inv_far) / (count - 1);
  out.depths.resize(count);
  for (int m = 0; m < count; ++m) {
    // Interpolate rather than accumulate so both endpoints are exact.
    const double t = static_cast<double>(m) / (count - 1);
    out.depths[m] = 1.0 / ((1.0 - t) * inv_near + t * inv_far);
  }
  out.depths.front() = range.min;
  out.depths.back() = range.max;
  out.metric_intervals.resize(count);
  for (int m = 0; m < count; ++m) {
    if (m == 0)
      out.metric_intervals[m] = out.depths[1] - out.depths[0];
    else if (m == count - 1)
      out.metric_intervals[m] = out.depths[m] - out.depths[m - 1];
    else
      out.metric_intervals[m] = 0.5 * (out.depths[m + 1] - out.depths[m - 1]);
  }
  return out;
}

Mat3 plane_homography(const CameraView& ref, const CameraView& src, double depth) {
  require(depth > 0.0, "plane depth must be positive");
  Eigen::FullPivLU<Mat3> lu(ref.intrinsics);
  if (!lu.isInvertible()) fail(ErrorKind::Geometry, "reference intrinsics are singular");
  if (Eigen::FullPivLU<Mat3>(src.intrinsics).rank() < 3)
    fail(ErrorKind::Geometry, "source intrinsics are singular");
  // x_src = R_rel x_ref + t', with t' = t_src - R_rel t_ref. The source
  // centre as seen from the reference frame is -t', so with
  // baseline = R_rel t_ref - t_src the plane z = depth maps as below.
  const Mat3 r_rel = src.rotation * ref.rotation.transpose();
  const Vec3 baseline = r_rel * ref.translation - src.translation;
  const Vec3 normal(0.0, 0.0, 1.0);
  return src.intrinsics * (r_rel - baseline * normal.transpose() / depth) * lu.inverse();
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraView& cam) {
  require(depth > 0.0, "unproject depth must be positive");
  const Mat3& k = cam.intrinsics;
  // Solve the upper-triangular K for the normalised ray.
  const double y = (pixel.y() - k(1, 2)) / k(1, 1);
  const double x = (pixel.x() - k(0, 2) - k(0, 1) * y) / k(0, 0);
  const Vec3 camera_point(x * depth, y * depth, depth);
  return cam.rotation.transpose() * (camera_point - cam.translation);
}

std::optional<Projection> try_project(const Vec3& point, const CameraView& cam) {
  const Vec3 pc = cam.rotation * point + cam.translation;
  if (!(pc.z() > 0.0)) return std::nullopt;
  const Vec3 h = cam.intrinsics * pc;
  return Projection{Vec2(h.x() / h.z(), h.y() / h.z()), pc.z()};
}

Projection project(const Vec3& point, const CameraView& cam) {
  auto p = try_project(point, cam);
  if (!p) fail(ErrorKind::Geometry, "point is behind the camera");
  return *p;
}

bool sample_bilinear(const FeatureMap& map, double x, double y, double* out) {
  const int w = map.width();
  const int h = map.height();
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return false;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = x0 + 1 < w ? x0 + 1 : x0;
  const int y1 = y0 + 1 < h ? y0 + 1 : y0;
  const double ax = x - x0;
  const double ay = y - y0;
  const double w00 = (1.0 - ax) * (1.0 - ay);
  const double w10 = ax * (1.0 - ay);
  const double w01 = (1.0 - ax) * ay;
  const double w11 = ax * ay;
  // Corners with zero weight do not need to be valid.
  if ((w00 > 0.0 && !map.is_valid(x0, y0)) || (w10 > 0.0 && !map.is_valid(x1, y0)) ||
      (w01 > 0.0 && !map.is_valid(x0, y1)) || (w11 > 0.0 && !map.is_valid(x1, y1)))
    return false;
  const int d = map.channels();
  const double* p00 = &map.values(x0, y0);
  const double* p10 = &map.values(x1, y0);
  const double* p01 = &map.values(x0, y1);
  const double* p11 = &map.values(x1, y1);
  if (ax == 0.0 && ay == 0.0) {
    for (int c = 0; c < d; ++c) out[c] = p00[c];
    return true;
  }
  for (int c = 0; c < d; ++c)
    out[c] = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
  return true;
}

FeatureMap warp_map(const FeatureMap& src_map, const Mat3& homography, int out_width,
                    int out_height) {
  if (Eigen::FullPivLU<Mat3>(homography).rank() < 3)
    fail(ErrorKind::Geometry, "homography is singular");
  FeatureMap out(out_width, out_height, src_map.channels());
  parallel_for(0, static_cast<std::size_t>(out_height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < out_width; ++x) {
      const Vec3 h = homography * Vec3(x, y, 1.0);
      bool ok = h.z() > 0.0;
      if (ok) ok = sample_bilinear(src_map, h.x() / h.z(), h.y() / h.z(), &out.values(x, y));
      if (!ok) {
        for (int c = 0; c < out.channels(); ++c) out.values(x, y, c) = 0.0;
        out.valid(x, y) = 0;
      }
    }
  });
  return out;
}

}  // namespace npmvs
