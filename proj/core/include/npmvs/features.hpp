#pragma once

#include <vector>

#include "npmvs/grid.hpp"

namespace npmvs {

inline constexpr int kFeatureChannels = 8;

/// Luma from interleaved RGB using the 0.299 / 0.587 / 0.114 weights.
Image to_luma(const Grid<double>& rgb);

/// Level 0 is the input; each further level is a 5-tap binomial blur
/// followed by keeping every second pixel, so level l has ceil(dim / 2^l)
/// pixels and pixel i at level l sits on pixel 2^l * i of level 0.
std::vector<Image> build_image_pyramid(const Image& image, int levels);

/// Separable [1 4 6 4 1] / 16 blur with mirrored borders.
Image binomial_blur(const Image& image);

struct FeatureOptions {
  bool normalize = true;
};

/// Eight channels per pixel: 3x3 mean-centred intensity, central-difference
/// x and y gradients, and 3x3 standard deviation, computed once on the image
/// and once on its binomially blurred copy. With `normalize`, every channel
/// is shifted and scaled to zero mean and unit variance over the image;
/// constant channels become zero.
FeatureMap extract_features(const Image& image, const FeatureOptions& options = {});

struct FeaturePyramid {
  std::vector<FeatureMap> levels;
};

FeaturePyramid build_feature_pyramid(const Image& image, int levels);

}  // namespace npmvs
