#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "npmvs/dense_costvol.hpp"
#include "npmvs/features.hpp"
#include "npmvs/geometry.hpp"
#include "npmvs/npdist.hpp"

namespace npmvs {

/// Integer (u, v, depth-bin) coordinate of a sparse cost sample.
struct LatticeKey {
  int u = 0;
  int v = 0;
  int bin = 0;

  friend bool operator==(const LatticeKey&, const LatticeKey&) = default;
};

struct LatticeKeyHash {
  std::size_t operator()(const LatticeKey& k) const noexcept {
    // 64-bit mix of the three coordinates.
    std::uint64_t h = static_cast<std::uint32_t>(k.u);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.v);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.bin);
    h ^= h >> 29;
    return static_cast<std::size_t>(h * 0xBF58476D1CE4E5B9ull);
  }
};

enum class LatticeAxis { U = 0, V = 1, Depth = 2 };

/// Maps depths of one level to depth bins. Bins count steps of `step` in
/// inverse depth away from `origin` (the inverse of the nearest depth), after
/// removing `offset` so that the level's samples sit on bin centres.
struct DepthLattice {
  double origin = 0.0;
  double step = 1.0;
  double offset = 0.0;

  /// Continuous bin position of a depth.
  double position(double depth) const { return (origin - 1.0 / depth) / step - offset; }
  /// Round-half-up of position().
  int bin(double depth) const;

  /// Lattice for `level` when the coarsest level `coarsest` was swept over
  /// `range` with inverse spacing `coarsest_step`.
  static DepthLattice for_level(const DepthRange& range, double coarsest_step,
                                int coarsest, int level);
};

struct SparsePoint {
  int u = 0;
  int v = 0;
  int sample = 0;
  LatticeKey key;
  double depth = 0.0;
  Vec3 position = Vec3::Zero();  // world frame
  int valid_views = 0;
};

/// Cost samples at per-pixel hypothesis locations, indexed by lattice key.
class SparseCostVolume {
 public:
  SparseCostVolume() = default;
  SparseCostVolume(int width, int height, int samples_per_pixel, int groups);

  int width() const { return width_; }
  int height() const { return height_; }
  int samples_per_pixel() const { return samples_; }
  int groups() const { return groups_; }
  std::size_t size() const { return points_.size(); }

  /// Points of one pixel are expected to be added consecutively in sample
  /// order. Throws if the key is already present.
  std::size_t add_point(const SparsePoint& point, std::span<const double> costs);

  const std::vector<SparsePoint>& points() const { return points_; }
  const SparsePoint& point(std::size_t i) const { return points_[i]; }
  std::span<const double> cost(std::size_t i) const;

  const SparsePoint* find(const LatticeKey& key) const;
  std::optional<std::size_t> find_index(const LatticeKey& key) const;

  /// The point at `key` moved by `offset` along `axis`, if present.
  const SparsePoint* neighbor_lookup(const LatticeKey& key, LatticeAxis axis,
                                     int offset) const;

  bool pixel_valid(int u, int v) const { return pixel_valid_[pixel(u, v)] != 0; }
  void set_pixel_valid(int u, int v, bool valid) { pixel_valid_[pixel(u, v)] = valid ? 1 : 0; }

  /// Index of the first point of pixel (u, v); points of a pixel are contiguous.
  std::size_t pixel_begin(int u, int v) const { return first_[pixel(u, v)]; }

 private:
  std::size_t pixel(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

  int width_ = 0, height_ = 0, samples_ = 0, groups_ = 0;
  std::vector<SparsePoint> points_;
  std::vector<double> costs_;
  std::vector<std::size_t> first_;
  std::vector<unsigned char> pixel_valid_;
  std::unordered_map<LatticeKey, std::size_t, LatticeKeyHash> index_;
};

struct SourceView {
  const FeatureMap* features = nullptr;
  CameraView camera;
};

/// Unprojects every hypothesis of every pixel, projects it into each source
/// view, correlates bilinearly sampled source features with the reference
/// feature and fuses views with the visibility weighting of the dense stage.
SparseCostVolume build_sparse_volume(const HypothesisSet& hyps, const FeatureMap& ref_features,
                                     const CameraView& ref_cam,
                                     std::span<const SourceView> sources,
                                     const DepthLattice& lattice, int groups);

struct SparseAggregateOptions {
  int passes = 2;
  double temperature = 1.0;
};

/// Group-averages each cost, filters with a (1,2,1)/4 kernel along u, then v,
/// then depth bin over lattice neighbours (renormalising over the neighbours
/// that exist), repeats `passes` times and takes a softmax over each pixel's
/// samples.
ProbabilityVolume sparse_aggregate(const SparseCostVolume& volume,
                                   const SparseAggregateOptions& options = {});

/// The filtered scalar value of every point, before the softmax.
std::vector<double> sparse_filter(const SparseCostVolume& volume, int passes);

}  // namespace npmvs
