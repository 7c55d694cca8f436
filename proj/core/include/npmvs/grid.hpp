#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace npmvs {

/// Row-major H x W grid with `channels` interleaved values per cell.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixels() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y, int c = 0) const {
    assert(contains(x, y) && c >= 0 && c < channels_);
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  T& operator()(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<T> cell(int x, int y) {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> cell(int x, int y) const {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

/// Single-channel intensity image, values nominally in [0, 1].
using Image = Grid<double>;

/// Depth map in scene units; NaN marks a pixel without depth.
using DepthMap = Grid<double>;

/// Multi-channel descriptor map with a per-pixel validity mask.
struct FeatureMap {
  Grid<double> values;
  Grid<unsigned char> valid;

  FeatureMap() = default;
  FeatureMap(int width, int height, int channels)
      : values(width, height, channels, 0.0), valid(width, height, 1, 1) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  int channels() const { return values.channels(); }
  bool is_valid(int x, int y) const { return valid(x, y) != 0; }
};

}  // namespace npmvs
