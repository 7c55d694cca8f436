#pragma once

#include <span>
#include <vector>

#include "npmvs/dense_costvol.hpp"
#include "npmvs/grid.hpp"
#include "npmvs/npdist.hpp"

namespace npmvs {

/// Same layout as ProbabilityVolume; pixels without any histogram mass are
/// flagged invalid and all-zero.
using GroundTruthDistribution = ProbabilityVolume;

inline constexpr double kBceEpsilon = 1e-7;

/// Triangular-weight histogram of `patch` values over `samples`:
/// hist[m] = sum over patch of max(0, 1 - |v - s_m| / interval), where values
/// exactly `interval` away contribute zero. Non-finite values are skipped.
std::vector<double> patch_histogram(std::span<const double> patch,
                                    std::span<const double> samples, double interval);

/// Ground-truth distribution over `hyps` from the full-resolution depth map:
/// pixel p at level l pools the 2^l x 2^l block under it. Distances are
/// measured in inverse depth, the space of the hypotheses' interval.
GroundTruthDistribution gt_histogram(const DepthMap& gt_fullres, const HypothesisSet& hyps);

/// Binary cross entropy with the estimate clamped to [eps, 1 - eps].
double bce_term(double p_est, double p_gt);

struct ClassBalance {
  double sigma = 0.0;           // fraction of positive entries over valid pixels
  double positive_weight = 0.0; // 1 - sigma
  double negative_weight = 0.0; // sigma
  std::size_t positives = 0;
  std::size_t entries = 0;

  double weight(double p_gt) const { return p_gt > 0.0 ? positive_weight : negative_weight; }
};

ClassBalance class_balance(const GroundTruthDistribution& gt);

/// Class-balanced BCE summed over valid pixels and samples.
double level_loss(const ProbabilityVolume& est, const GroundTruthDistribution& gt);

/// Sum of |gt - est| over pixels where both are finite and `mask` (if given)
/// is non-zero.
double l1_loss(const DepthMap& est, const DepthMap& gt,
               const Grid<unsigned char>* mask = nullptr);

double total_loss(std::span<const double> level_losses, std::span<const double> weights);

/// Neumaier-compensated sum; used for every loss reduction.
double compensated_sum(std::span<const double> values);

}  // namespace npmvs
