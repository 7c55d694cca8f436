#include "npmvs/supervision.hpp"

#include <algorithm>
#include <cmath>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

std::vector<double> patch_histogram(std::span<const double> patch,
                                    std::span<const double> samples, double interval) {
  require(interval > 0.0, "histogram interval must be positive");
  std::vector<double> hist(samples.size(), 0.0);
  for (std::size_t m = 0; m < samples.size(); ++m) {
    std::vector<double> terms;
    terms.reserve(patch.size());
    for (double d : patch) {
      if (!std::isfinite(d)) continue;
      const double w = 1.0 - std::abs(d - samples[m]) / interval;
      if (w > 0.0) terms.push_back(w);
    }
    hist[m] = compensated_sum(terms);
  }
  return hist;
}

GroundTruthDistribution gt_histogram(const DepthMap& gt_fullres, const HypothesisSet& hyps) {
  require(hyps.level >= 0, "hypothesis level must be non-negative");
  const int block = 1 << hyps.level;
  const int expected_w = (gt_fullres.width() + block - 1) / block;
  const int expected_h = (gt_fullres.height() + block - 1) / block;
  if (expected_w != hyps.width || expected_h != hyps.height)
    fail(ErrorKind::InvalidArgument,
         "ground-truth depth map does not match the hypothesis grid at this level");

  GroundTruthDistribution gt(hyps.width, hyps.height, hyps.samples);
  parallel_for(0, static_cast<std::size_t>(hyps.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<double> patch;
    std::vector<double> inverse_samples(hyps.samples);
    for (int x = 0; x < hyps.width; ++x) {
      patch.clear();
      const int x1 = std::min((x + 1) * block, gt_fullres.width());
      const int y1 = std::min((y + 1) * block, gt_fullres.height());
      for (int fy = y * block; fy < y1; ++fy)
        for (int fx = x * block; fx < x1; ++fx) {
          const double d = gt_fullres(fx, fy);
          if (std::isfinite(d) && d > 0.0) patch.push_back(1.0 / d);
        }
      const auto depths = hyps.at(x, y);
      for (int m = 0; m < hyps.samples; ++m) inverse_samples[m] = 1.0 / depths[m];
      const std::vector<double> hist = patch_histogram(patch, inverse_samples, hyps.interval);
      const double total = compensated_sum(hist);
      if (!(total > 0.0)) continue;
      auto out = gt.probs(x, y);
      for (int m = 0; m < hyps.samples; ++m) out[m] = hist[m] / total;
      gt.set_valid(x, y, true);
    }
  });
  return gt;
}

double bce_term(double p_est, double p_gt) {
  const double p = std::clamp(p_est, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(p_gt * std::log(p) + (1.0 - p_gt) * std::log(1.0 - p));
}

ClassBalance class_balance(const GroundTruthDistribution& gt) {
  ClassBalance balance;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!gt.valid(x, y)) continue;
      for (double p : gt.probs(x, y)) {
        ++balance.entries;
        if (p > 0.0) ++balance.positives;
      }
    }
  if (balance.entries == 0) return balance;
  balance.sigma = static_cast<double>(balance.positives) / static_cast<double>(balance.entries);
  balance.positive_weight = 1.0 - balance.sigma;
  balance.negative_weight = balance.sigma;
  return balance;
}

double level_loss(const ProbabilityVolume& est, const GroundTruthDistribution& gt) {
  if (est.width() != gt.width() || est.height() != gt.height() || est.samples() != gt.samples())
    fail(ErrorKind::InvalidArgument, "estimated and ground-truth volumes differ in shape");
  const ClassBalance balance = class_balance(gt);
  std::vector<double> rows(static_cast<std::size_t>(gt.height()), 0.0);
  parallel_for(0, rows.size(), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    std::vector<double> terms;
    for (int x = 0; x < gt.width(); ++x) {
      if (!gt.valid(x, y)) continue;
      const auto pg = gt.probs(x, y);
      const auto pe = est.probs(x, y);
      for (int m = 0; m < gt.samples(); ++m)
        terms.push_back(balance.weight(pg[m]) * bce_term(pe[m], pg[m]));
    }
    rows[row] = compensated_sum(terms);
  });
  return compensated_sum(rows);
}

double l1_loss(const DepthMap& est, const DepthMap& gt, const Grid<unsigned char>* mask) {
  if (est.width() != gt.width() || est.height() != gt.height())
    fail(ErrorKind::InvalidArgument, "depth maps differ in size");
  if (mask && (mask->width() != gt.width() || mask->height() != gt.height()))
    fail(ErrorKind::InvalidArgument, "mask differs in size from the depth maps");
  std::vector<double> terms;
  terms.reserve(gt.pixels());
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (mask && (*mask)(x, y) == 0) continue;
      const double a = est(x, y);
      const double b = gt(x, y);
      if (std::isfinite(a) && std::isfinite(b)) terms.push_back(std::abs(b - a));
    }
  return compensated_sum(terms);
}

double total_loss(std::span<const double> level_losses, std::span<const double> weights) {
  require(level_losses.size() == weights.size(), "one weight is needed per level loss");
  std::vector<double> terms(level_losses.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = weights[i] * level_losses[i];
  return compensated_sum(terms);
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double compensation = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      compensation += (sum - t) + v;
    else
      compensation += (v - t) + sum;
    sum = t;
  }
  return sum + compensation;
}

}  // namespace npmvs
