#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "npmvs/geometry.hpp"
#include "npmvs/grid.hpp"

namespace npmvs {

inline constexpr int kRegionCount = 5;
inline constexpr std::uint8_t kInvalidRegion = 255;

/// Per-pixel region index 0..4 (R0 = sharpest depth variation) or
/// kInvalidRegion where the ground truth has no depth.
using RegionLabels = Grid<std::uint8_t>;

struct SegmentationOptions {
  int bands = kRegionCount;
  /// Threshold as a fraction of the valid depth span of the map.
  double theta_fraction = 0.01;
  /// Overrides theta_fraction when set (scene units).
  std::optional<double> theta_absolute;
};

/// Valid-aware 2x2 mean downsampling; a coarse pixel is valid when any of
/// its children is.
DepthMap downsample_depth(const DepthMap& depth);

/// Bilinear upsampling of a valid-aware mean pyramid level back to the
/// finer grid (pixel centres at half-integers of the coarse grid).
DepthMap upsample_depth(const DepthMap& coarse, int width, int height);

/// Labels each valid pixel with the finest Laplacian band whose absolute
/// response exceeds theta; pixels under threshold in every band are R4.
RegionLabels laplacian_segmentation(const DepthMap& gt_depth,
                                    const SegmentationOptions& options = {});

/// Mean |est - gt| per region over pixels where both are finite; empty
/// regions are absent.
std::array<std::optional<double>, kRegionCount> region_depth_error(const DepthMap& est,
                                                                   const DepthMap& gt,
                                                                   const RegionLabels& labels);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::array<std::uint8_t, 3>> colors;  // empty or one per point

  std::size_t size() const { return points.size(); }
};

struct FusionView {
  DepthMap depth;
  CameraView camera;
  const Image* color = nullptr;  // optional, for vertex colours
};

struct FusionOptions {
  double tau = 0.01;  // relative depth tolerance
  int n_min = 3;      // consistent source views required
  bool deduplicate = true;
};

struct FusionResult {
  PointCloud cloud;
  /// Per view, 1 where the pixel passed the consistency test.
  std::vector<Grid<std::uint8_t>> accepted;
  std::size_t accepted_count = 0;
};

/// Keeps a reference pixel when at least n_min other views see its point with
/// relative depth error <= tau (nearest-pixel lookup). With deduplication,
/// source pixels confirming an emitted point are consumed so later views do
/// not emit them again; views are processed in order.
FusionResult fuse_depth_maps(std::span<const FusionView> views, const FusionOptions& options);

/// Exact fixed-radius nearest neighbour search over a hashed voxel grid.
class NearestNeighborIndex {
 public:
  NearestNeighborIndex(std::span<const Vec3> points, double cell_size);

  /// Distance to the nearest indexed point if it lies within `radius`
  /// (radius must not exceed the cell size).
  std::optional<double> nearest_within(const Vec3& query, double radius) const;

 private:
  struct CellHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& c) const noexcept;
  };

  std::array<std::int64_t, 3> cell_of(const Vec3& p) const;

  double cell_size_;
  std::vector<Vec3> points_;
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::uint32_t>, CellHash> cells_;
};

struct CloudMetrics {
  double accuracy = 0.0;
  double completeness = 0.0;
  double overall = 0.0;
  std::size_t accuracy_inliers = 0;
  std::size_t completeness_inliers = 0;
};

/// Mean nearest-neighbour distance est->gt (accuracy) and gt->est
/// (completeness), each over distances <= d_cap; overall is their mean.
CloudMetrics accuracy_completeness(const PointCloud& est, const PointCloud& gt, double d_cap);

}  // namespace npmvs
