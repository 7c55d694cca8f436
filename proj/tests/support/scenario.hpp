#pragma once

// Scoring of inferred depth against synthetic ground truth, shared by the
// pipeline tests and the acceptance suite.

#include <cmath>
#include <cstdint>

#include "npmvs/geometry.hpp"
#include "npmvs/grid.hpp"
#include "npmvs/synth.hpp"

namespace npmvs::testing {

/// Pixels of `view` away from surface changes and seen by every other view.
inline Grid<std::uint8_t> interior_mask(const SynthScene& scene, int view, int radius = 8) {
  const Grid<std::uint8_t> boundary = boundary_mask(scene.surface_ids[view], radius);
  const Grid<int> seen = visibility_count(scene.bundle, view);
  const int others = static_cast<int>(scene.bundle.size()) - 1;
  Grid<std::uint8_t> mask(boundary.width(), boundary.height(), 1, 0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      mask(x, y) = !boundary(x, y) && seen(x, y) == others ? 1 : 0;
  return mask;
}

struct AccuracyReport {
  std::size_t pixels = 0;
  std::size_t missing = 0;
  double mae = 0.0;             // scene units
  double normalized_mae = 0.0;  // in units of the local finest sample spacing
  double within_two = 0.0;      // fraction with error <= 2 spacings
};

/// `finest_inverse_step` is the inverse-depth spacing of the finest level;
/// the metric spacing at depth d is d^2 times it. Missing estimates count
/// as failures.
inline AccuracyReport score_depth(const DepthMap& est, const DepthMap& gt,
                                  const Grid<std::uint8_t>& mask, double finest_inverse_step) {
  AccuracyReport r;
  double sum = 0.0, sum_norm = 0.0;
  std::size_t within = 0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!mask(x, y) || !std::isfinite(gt(x, y))) continue;
      ++r.pixels;
      const double e = est(x, y);
      if (!std::isfinite(e)) {
        ++r.missing;
        continue;
      }
      const double spacing = gt(x, y) * gt(x, y) * finest_inverse_step;
      const double err = std::abs(e - gt(x, y));
      sum += err;
      sum_norm += err / spacing;
      if (err <= 2.0 * spacing) ++within;
    }
  const std::size_t scored = r.pixels - r.missing;
  if (scored > 0) {
    r.mae = sum / static_cast<double>(scored);
    r.normalized_mae = sum_norm / static_cast<double>(scored);
  }
  if (r.pixels > 0) r.within_two = static_cast<double>(within) / static_cast<double>(r.pixels);
  return r;
}

}  // namespace npmvs::testing
