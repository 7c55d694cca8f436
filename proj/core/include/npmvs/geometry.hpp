#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "npmvs/grid.hpp"

namespace npmvs {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Pinhole camera with world-to-camera extrinsics: x_cam = R * x_world + t.
/// Pixel (i, j) sits at continuous image coordinate (i, j).
struct CameraView {
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 0;
  int height = 0;

  Vec3 center() const { return -rotation.transpose() * translation; }

  /// Throws when R is not a proper rotation (1e-6) or K is not an
  /// upper-triangular matrix with positive focal entries.
  void validate() const;
};

struct DepthRange {
  double min = 0.0;
  double max = 0.0;

  void validate() const;
};

/// Camera for pyramid level `level`: focal lengths and principal point are
/// divided by 2^level, image dimensions become ceil(dim / 2^level) so they
/// match the image pyramid.
CameraView scale_camera(const CameraView& cam, int level);

/// Fronto-parallel sweep planes uniformly spaced in inverse depth.
struct DepthSamples {
  std::vector<double> depths;            // ascending, first == min, last == max
  std::vector<double> metric_intervals;  // (d[m+1] - d[m-1]) / 2, one-sided at ends
  double inverse_step = 0.0;             // spacing of 1/d between samples
};

DepthSamples sample_inverse_depth(const DepthRange& range, int count);

/// Homography taking reference pixels to source pixels for the plane at
/// `depth` in front of the reference camera.
Mat3 plane_homography(const CameraView& ref, const CameraView& src, double depth);

/// World point that projects to `pixel` with camera-frame depth `depth`.
Vec3 unproject(const Vec2& pixel, double depth, const CameraView& cam);

struct Projection {
  Vec2 pixel;
  double depth;
};

/// Throws ErrorKind::Geometry when the point is not in front of the camera.
Projection project(const Vec3& point, const CameraView& cam);

/// Non-throwing variant; empty when the camera-frame depth is <= 0.
std::optional<Projection> try_project(const Vec3& point, const CameraView& cam);

/// Bilinear lookup of all channels at continuous (x, y). Returns false when
/// (x, y) falls outside [0, W-1] x [0, H-1] or touches an invalid source pixel.
bool sample_bilinear(const FeatureMap& map, double x, double y, double* out);

/// Resamples `src_map` onto the reference grid through `homography`
/// (reference pixel -> source pixel). Out-of-bounds pixels are marked invalid
/// and carry zeros.
FeatureMap warp_map(const FeatureMap& src_map, const Mat3& homography,
                    int out_width, int out_height);

}  // namespace npmvs
