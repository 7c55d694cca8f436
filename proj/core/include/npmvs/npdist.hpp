#pragma once

#include <span>
#include <vector>

#include "npmvs/dense_costvol.hpp"
#include "npmvs/geometry.hpp"
#include "npmvs/grid.hpp"

namespace npmvs {

/// Per-pixel depth samples at one pyramid level.
///
/// Samples are stored as metric depths, ascending per pixel. The search
/// interval lives in inverse depth, the space the coarsest level is swept
/// in: subdivision, the ground-truth histogram and the covering test all
/// measure distances as |1/d - 1/d'| against `interval`. This keeps one
/// interval per level, halving exactly from level to level, and puts every
/// sample of a level on a common lattice.
struct HypothesisSet {
  int level = 0;
  int width = 0;
  int height = 0;
  int samples = 0;
  double interval = 0.0;  // inverse-depth units
  std::vector<double> depths;

  HypothesisSet() = default;
  HypothesisSet(int level, int width, int height, int samples, double interval);

  std::span<double> at(int x, int y);
  std::span<const double> at(int x, int y) const;

  /// Metric spacing of the interval around `depth` (depth^2 * interval).
  double metric_interval(double depth) const { return depth * depth * interval; }

  /// Every pixel shares `global` (ascending depths).
  static HypothesisSet uniform(int level, int width, int height,
                               std::span<const double> global, double interval);

  /// Throws if any pixel's samples are not strictly increasing or the
  /// interval is not positive.
  void validate() const;
};

/// Indices of the K largest probabilities, ties going to the smaller index,
/// returned in ascending index order.
std::vector<int> topk_select(std::span<const double> probs, int k);

struct Subdivision {
  std::vector<double> samples;  // ascending
  double interval = 0.0;
};

/// Each selected value v becomes v - interval/4 and v + interval/4; the new
/// interval is interval/2. Output is sorted and values closer than 1e-12
/// (relative) are merged.
Subdivision subdivide(std::span<const double> selected, double interval);

/// Keeps the K most probable samples of every pixel.
HypothesisSet select_topk(const HypothesisSet& hyps, const ProbabilityVolume& probs, int k);

/// Subdivides each coarse pixel's samples (in inverse depth) and hands the
/// 2K children to every fine pixel of its 2x2 patch. Fine pixels beyond
/// 2 * coarse dimensions reuse the nearest coarse pixel.
HypothesisSet upsample_hypotheses(const HypothesisSet& coarse, int fine_width,
                                  int fine_height);

/// Sum of samples[m] * probs[m]. Throws if probs do not sum to 1 within 1e-6.
double expectation(std::span<const double> samples, std::span<const double> probs);

/// Fraction of valid ground-truth pixels for which some sample of the
/// covering hypothesis pixel lies within interval/2 (in inverse depth).
/// `gt_depth` may be at the hypotheses' resolution or any 2^k multiple of
/// it; each gt pixel is tested against the hypothesis pixel above it.
double covering_ratio(const HypothesisSet& hyps, const DepthMap& gt_depth);

/// Restricted to gt pixels where `mask` is non-zero.
double covering_ratio(const HypothesisSet& hyps, const DepthMap& gt_depth,
                      const Grid<unsigned char>* mask);

/// True when some sample lies within interval/2 of value.
bool covers(std::span<const double> samples, double interval, double value);

/// `count` samples spaced `interval` apart, centred on `center`.
std::vector<double> centered_window(double center, double interval, int count);

/// Unimodal baseline: collapse the distribution to its expectation and lay
/// `next_count` samples at spacing interval/2 around it.
std::vector<double> unimodal_baseline_samples(std::span<const double> probs,
                                              std::span<const double> samples,
                                              double interval, int next_count);

/// Pipeline form of the unimodal baseline: the window is centred on the
/// inverse of each coarse pixel's expected depth and replicated over its
/// 2x2 patch.
HypothesisSet unimodal_upsample(const HypothesisSet& coarse, const ProbabilityVolume& probs,
                                int next_count, int fine_width, int fine_height);

/// Branching factor per level from the sample budget: K^l = M^{l-1} / 2.
/// Index l of the result is K^l; K^0 is 0 (no further branching).
std::vector<int> derive_branching(std::span<const int> samples_per_level);

}  // namespace npmvs
