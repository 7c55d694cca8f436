#pragma once

#include <span>
#include <vector>

#include "npmvs/geometry.hpp"
#include "npmvs/grid.hpp"

namespace npmvs {

/// Matching costs for every (pixel, depth sample, group).
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, int samples, int groups);

  int width() const { return width_; }
  int height() const { return height_; }
  int samples() const { return samples_; }
  int groups() const { return groups_; }

  std::span<double> cost(int x, int y, int m);
  std::span<const double> cost(int x, int y, int m) const;

  /// Number of views that produced a valid warp for this cell.
  int& valid_views(int x, int y, int m) { return valid_[cell(x, y, m)]; }
  int valid_views(int x, int y, int m) const { return valid_[cell(x, y, m)]; }

  /// Mean over groups.
  double mean_cost(int x, int y, int m) const;

 private:
  std::size_t cell(int x, int y, int m) const {
    return (static_cast<std::size_t>(y) * width_ + x) * samples_ + m;
  }

  int width_ = 0, height_ = 0, samples_ = 0, groups_ = 0;
  std::vector<double> costs_;
  std::vector<int> valid_;
};

/// Per-pixel discrete distribution over that pixel's depth samples.
/// Invalid pixels carry all-zero probabilities.
class ProbabilityVolume {
 public:
  ProbabilityVolume() = default;
  ProbabilityVolume(int width, int height, int samples);

  int width() const { return width_; }
  int height() const { return height_; }
  int samples() const { return samples_; }

  std::span<double> probs(int x, int y);
  std::span<const double> probs(int x, int y) const;

  bool valid(int x, int y) const { return valid_[pixel(x, y)] != 0; }
  void set_valid(int x, int y, bool v) { valid_[pixel(x, y)] = v ? 1 : 0; }

 private:
  std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0, height_ = 0, samples_ = 0;
  std::vector<double> probs_;
  std::vector<unsigned char> valid_;
};

/// Group g holds the mean of f_ref[c] * f_src[c] over the g-th contiguous
/// block of D / G channels.
std::vector<double> groupwise_correlation(std::span<const double> f_ref,
                                          std::span<const double> f_src, int groups);

/// Writes into `out` (size `groups`) without allocating.
void groupwise_correlation(std::span<const double> f_ref, std::span<const double> f_src,
                           std::span<double> out);

/// Plane-sweep cost of one source view against the reference for every
/// depth in `depths`. Cells whose warp leaves the source image get zero cost
/// and zero validity.
CostVolume build_view_cost(const FeatureMap& ref_features, const FeatureMap& src_features,
                           const CameraView& ref_cam, const CameraView& src_cam,
                           std::span<const double> depths, int groups);

/// Per-pixel visibility weight of one view: the largest group-mean cost over
/// the pixel's samples, clamped at zero.
Grid<double> visibility_weights(const CostVolume& view);

/// Visibility-weighted mean over views. Pixels whose weights sum to zero are
/// flagged by zero validity on every sample.
CostVolume aggregate_views(std::span<const CostVolume> views);

struct RegularizeOptions {
  int passes = 2;
  double temperature = 1.0;
};

/// Group-average, separable (1,2,1)/4 smoothing along x, y and depth
/// repeated `passes` times (kernel renormalised at borders), then a softmax
/// over depth per pixel. Pixels with no supporting view are invalid.
ProbabilityVolume regularize_dense(const CostVolume& volume,
                                   const RegularizeOptions& options = {});

/// Numerically stable softmax of `scores / temperature` into `out`.
void softmax(std::span<const double> scores, double temperature, std::span<double> out);

}  // namespace npmvs
