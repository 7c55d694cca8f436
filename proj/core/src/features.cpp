#include "npmvs/features.hpp"

#include <array>
#include <cmath>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {
namespace {

// Mirror without repeating the edge sample (reflect-101).
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

Image blur_axis(const Image& in, bool along_x) {
  static constexpr std::array<double, 5> kTaps{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  Image out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) {
        const double v = along_x ? in(reflect(x + k, in.width()), y)
                                 : in(x, reflect(y + k, in.height()));
        acc += kTaps[k + 2] * v;
      }
      out(x, y) = acc;
    }
  return out;
}

// The four local descriptors of one scale, written to channels [base, base + 4).
void describe(const Image& img, FeatureMap& out, int base) {
  const int w = img.width();
  const int h = img.height();
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      std::array<double, 9> window{};
      int n = 0;
      double mean = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          window[n] = img(reflect(x + dx, w), reflect(y + dy, h));
          mean += window[n++];
        }
      mean /= 9.0;
      double var = 0.0;
      for (double v : window) var += (v - mean) * (v - mean);
      var /= 9.0;
      out.values(x, y, base + 0) = img(x, y) - mean;
      out.values(x, y, base + 1) = 0.5 * (img(reflect(x + 1, w), y) - img(reflect(x - 1, w), y));
      out.values(x, y, base + 2) = 0.5 * (img(x, reflect(y + 1, h)) - img(x, reflect(y - 1, h)));
      out.values(x, y, base + 3) = std::sqrt(var);
    }
  });
}

void normalize_channels(FeatureMap& map) {
  const std::size_t n = map.values.pixels();
  const int d = map.channels();
  auto& data = map.values.data();
  for (int c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += data[i * d + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = data[i * d + c] - mean;
      var += r * r;
    }
    var /= static_cast<double>(n);
    // Channels that are constant up to rounding carry no signal.
    const double scale = var > 1e-24 ? 1.0 / std::sqrt(var) : 0.0;
    for (std::size_t i = 0; i < n; ++i) data[i * d + c] = (data[i * d + c] - mean) * scale;
  }
}

}  // namespace

Image to_luma(const Grid<double>& rgb) {
  require(rgb.channels() == 3, "to_luma expects three channels");
  Image out(rgb.width(), rgb.height());
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x)
      out(x, y) = 0.299 * rgb(x, y, 0) + 0.587 * rgb(x, y, 1) + 0.114 * rgb(x, y, 2);
  return out;
}

Image binomial_blur(const Image& image) {
  require(image.channels() == 1, "binomial_blur expects one channel");
  return blur_axis(blur_axis(image, true), false);
}

std::vector<Image> build_image_pyramid(const Image& image, int levels) {
  require(levels >= 0, "pyramid depth must be non-negative");
  require(!image.empty(), "cannot build a pyramid of an empty image");
  std::vector<Image> pyramid{image};
  for (int l = 1; l <= levels; ++l) {
    const Image blurred = binomial_blur(pyramid.back());
    const int w = (blurred.width() + 1) / 2;
    const int h = (blurred.height() + 1) / 2;
    Image next(w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) next(x, y) = blurred(2 * x, 2 * y);
    pyramid.push_back(std::move(next));
  }
  return pyramid;
}

FeatureMap extract_features(const Image& image, const FeatureOptions& options) {
  if (image.width() < 3 || image.height() < 3)
    fail(ErrorKind::InvalidArgument, "feature extraction needs at least a 3x3 image");
  FeatureMap out(image.width(), image.height(), kFeatureChannels);
  describe(image, out, 0);
  describe(binomial_blur(image), out, 4);
  if (options.normalize) normalize_channels(out);
  return out;
}

FeaturePyramid build_feature_pyramid(const Image& image, int levels) {
  FeaturePyramid out;
  for (const Image& level : build_image_pyramid(image, levels))
    out.levels.push_back(extract_features(level));
  return out;
}

}  // namespace npmvs
