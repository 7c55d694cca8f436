#include "npmvs/npdist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

HypothesisSet::HypothesisSet(int level_, int width_, int height_, int samples_,
                             double interval_)
    : level(level_), width(width_), height(height_), samples(samples_), interval(interval_),
      depths(static_cast<std::size_t>(width_) * height_ * samples_, 0.0) {
  require(width_ > 0 && height_ > 0 && samples_ > 0, "hypothesis set dimensions must be positive");
}

std::span<double> HypothesisSet::at(int x, int y) {
  return {depths.data() + (static_cast<std::size_t>(y) * width + x) * samples,
          static_cast<std::size_t>(samples)};
}

std::span<const double> HypothesisSet::at(int x, int y) const {
  return {depths.data() + (static_cast<std::size_t>(y) * width + x) * samples,
          static_cast<std::size_t>(samples)};
}

HypothesisSet HypothesisSet::uniform(int level, int width, int height,
                                     std::span<const double> global, double interval) {
  HypothesisSet out(level, width, height, static_cast<int>(global.size()), interval);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) std::copy(global.begin(), global.end(), out.at(x, y).begin());
  return out;
}

void HypothesisSet::validate() const {
  if (!(interval > 0.0)) fail(ErrorKind::InvalidArgument, "hypothesis interval must be positive");
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto s = at(x, y);
      for (int m = 0; m < samples; ++m) {
        if (!(s[m] > 0.0)) fail(ErrorKind::InvalidArgument, "hypothesis depth must be positive");
        if (m > 0 && !(s[m] > s[m - 1]))
          fail(ErrorKind::InvalidArgument, "hypotheses must be strictly increasing per pixel");
      }
    }
}

std::vector<int> topk_select(std::span<const double> probs, int k) {
  const int m = static_cast<int>(probs.size());
  if (k < 1 || k > m) {
    std::ostringstream os;
    os << "top-k size " << k << " outside [1, " << m << "]";
    fail(ErrorKind::InvalidArgument, os.str());
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

Subdivision subdivide(std::span<const double> selected, double interval) {
  require(interval > 0.0, "subdivision interval must be positive");
  Subdivision out;
  out.interval = 0.5 * interval;
  const double quarter = 0.25 * interval;
  out.samples.reserve(2 * selected.size());
  for (double v : selected) {
    out.samples.push_back(v - quarter);
    out.samples.push_back(v + quarter);
  }
  std::sort(out.samples.begin(), out.samples.end());
  auto same = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
  };
  out.samples.erase(std::unique(out.samples.begin(), out.samples.end(), same), out.samples.end());
  return out;
}

HypothesisSet select_topk(const HypothesisSet& hyps, const ProbabilityVolume& probs, int k) {
  require(probs.width() == hyps.width && probs.height() == hyps.height &&
              probs.samples() == hyps.samples,
          "probability volume does not match the hypotheses");
  HypothesisSet out(hyps.level, hyps.width, hyps.height, k, hyps.interval);
  parallel_for(0, static_cast<std::size_t>(hyps.height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < hyps.width; ++x) {
      const auto idx = topk_select(probs.probs(x, y), k);
      const auto src = hyps.at(x, y);
      auto dst = out.at(x, y);
      for (int i = 0; i < k; ++i) dst[i] = src[idx[i]];
    }
  });
  return out;
}

namespace {

void check_patch_dims(const HypothesisSet& coarse, int fine_width, int fine_height) {
  if ((fine_width + 1) / 2 != coarse.width || (fine_height + 1) / 2 != coarse.height) {
    std::ostringstream os;
    os << "fine grid " << fine_width << "x" << fine_height << " does not sit under coarse grid "
       << coarse.width << "x" << coarse.height;
    fail(ErrorKind::InvalidArgument, os.str());
  }
}

// Depths (ascending) from inverse depths in any order.
void to_depths(std::span<const double> inverse, std::span<double> out) {
  for (std::size_t i = 0; i < inverse.size(); ++i) out[i] = 1.0 / inverse[i];
  std::sort(out.begin(), out.end());
}

}  // namespace

HypothesisSet upsample_hypotheses(const HypothesisSet& coarse, int fine_width, int fine_height) {
  require(coarse.level >= 1, "cannot refine below level 0");
  check_patch_dims(coarse, fine_width, fine_height);
  const int children = 2 * coarse.samples;
  HypothesisSet refined(coarse.level - 1, coarse.width, coarse.height, children,
                        0.5 * coarse.interval);
  std::vector<double> inverse(coarse.samples);
  for (int y = 0; y < coarse.height; ++y)
    for (int x = 0; x < coarse.width; ++x) {
      const auto s = coarse.at(x, y);
      for (int m = 0; m < coarse.samples; ++m) inverse[m] = 1.0 / s[m];
      const Subdivision sub = subdivide(inverse, coarse.interval);
      if (static_cast<int>(sub.samples.size()) != children)
        fail(ErrorKind::InvalidArgument, "subdivision produced coincident children");
      if (!(sub.samples.front() > 0.0))
        fail(ErrorKind::Geometry, "subdivision crossed the plane at infinity");
      to_depths(sub.samples, refined.at(x, y));
    }

  HypothesisSet fine(coarse.level - 1, fine_width, fine_height, children, refined.interval);
  for (int y = 0; y < fine_height; ++y)
    for (int x = 0; x < fine_width; ++x) {
      const auto src = refined.at(std::min(x / 2, coarse.width - 1),
                                  std::min(y / 2, coarse.height - 1));
      std::copy(src.begin(), src.end(), fine.at(x, y).begin());
    }
  return fine;
}

double expectation(std::span<const double> samples, std::span<const double> probs) {
  require(samples.size() == probs.size() && !samples.empty(),
          "samples and probabilities differ in length");
  double total = 0.0;
  double value = 0.0;
  for (std::size_t m = 0; m < samples.size(); ++m) {
    total += probs[m];
    value += samples[m] * probs[m];
  }
  if (std::abs(total - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "probabilities sum to " << total << ", not 1";
    fail(ErrorKind::InvalidArgument, os.str());
  }
  return value;
}

bool covers(std::span<const double> samples, double interval, double value) {
  const double half = 0.5 * interval;
  return std::any_of(samples.begin(), samples.end(),
                     [&](double s) { return std::abs(s - value) <= half; });
}

double covering_ratio(const HypothesisSet& hyps, const DepthMap& gt_depth,
                      const Grid<unsigned char>* mask) {
  int shift = 0;
  while (((gt_depth.width() + (1 << shift) - 1) >> shift) > hyps.width) ++shift;
  const int div = 1 << shift;
  if ((gt_depth.width() + div - 1) / div != hyps.width ||
      (gt_depth.height() + div - 1) / div != hyps.height)
    fail(ErrorKind::InvalidArgument, "ground truth does not align with the hypothesis grid");
  if (mask)
    require(mask->width() == gt_depth.width() && mask->height() == gt_depth.height(),
            "mask does not match the ground truth");

  std::size_t valid = 0, covered = 0;
  std::vector<double> inverse(hyps.samples);
  for (int y = 0; y < gt_depth.height(); ++y)
    for (int x = 0; x < gt_depth.width(); ++x) {
      const double d = gt_depth(x, y);
      if (!std::isfinite(d) || !(d > 0.0)) continue;
      if (mask && !(*mask)(x, y)) continue;
      ++valid;
      const auto s = hyps.at(x >> shift, y >> shift);
      for (int m = 0; m < hyps.samples; ++m) inverse[m] = 1.0 / s[m];
      if (covers(inverse, hyps.interval, 1.0 / d)) ++covered;
    }
  return valid ? static_cast<double>(covered) / static_cast<double>(valid) : 0.0;
}

double covering_ratio(const HypothesisSet& hyps, const DepthMap& gt_depth) {
  return covering_ratio(hyps, gt_depth, nullptr);
}

std::vector<double> centered_window(double center, double interval, int count) {
  require(count >= 1, "window needs at least one sample");
  require(interval > 0.0, "window interval must be positive");
  std::vector<double> out(count);
  const double mid = 0.5 * (count - 1);
  for (int j = 0; j < count; ++j) out[j] = center + (j - mid) * interval;
  return out;
}

std::vector<double> unimodal_baseline_samples(std::span<const double> probs,
                                              std::span<const double> samples,
                                              double interval, int next_count) {
  return centered_window(expectation(samples, probs), 0.5 * interval, next_count);
}

HypothesisSet unimodal_upsample(const HypothesisSet& coarse, const ProbabilityVolume& probs,
                                int next_count, int fine_width, int fine_height) {
  require(coarse.level >= 1, "cannot refine below level 0");
  require(probs.width() == coarse.width && probs.height() == coarse.height &&
              probs.samples() == coarse.samples,
          "probability volume does not match the hypotheses");
  check_patch_dims(coarse, fine_width, fine_height);
  const double next_interval = 0.5 * coarse.interval;
  HypothesisSet refined(coarse.level - 1, coarse.width, coarse.height, next_count, next_interval);
  const double half_width = 0.5 * next_count * next_interval;
  for (int y = 0; y < coarse.height; ++y)
    for (int x = 0; x < coarse.width; ++x) {
      const auto s = coarse.at(x, y);
      // Keep the window inside the span the pixel was searching so that it
      // never reaches the plane at infinity.
      const double lo = 1.0 / s.back() - 0.5 * coarse.interval;
      const double hi = 1.0 / s.front() + 0.5 * coarse.interval;
      double center = 0.5 * (lo + hi);
      if (probs.valid(x, y)) center = 1.0 / expectation(s, probs.probs(x, y));
      if (hi - lo >= 2.0 * half_width)
        center = std::clamp(center, lo + half_width, hi - half_width);
      center = std::max(center, half_width + 0.5 * next_interval);
      const auto window = centered_window(center, next_interval, next_count);
      to_depths(window, refined.at(x, y));
    }
  HypothesisSet fine(coarse.level - 1, fine_width, fine_height, next_count, next_interval);
  for (int y = 0; y < fine_height; ++y)
    for (int x = 0; x < fine_width; ++x) {
      const auto src = refined.at(std::min(x / 2, coarse.width - 1),
                                  std::min(y / 2, coarse.height - 1));
      std::copy(src.begin(), src.end(), fine.at(x, y).begin());
    }
  return fine;
}

std::vector<int> derive_branching(std::span<const int> samples_per_level) {
  const std::size_t n = samples_per_level.size();
  require(n >= 2, "at least two pyramid levels are required");
  std::vector<int> k(n, 0);
  for (std::size_t l = 1; l < n; ++l) {
    const int next = samples_per_level[l - 1];
    if (next < 2 || next % 2 != 0) {
      std::ostringstream os;
      os << "sample count " << next << " at level " << l - 1 << " must be even and >= 2";
      fail(ErrorKind::Config, os.str());
    }
    k[l] = next / 2;
    if (k[l] > samples_per_level[l]) {
      std::ostringstream os;
      os << "level " << l << " would select " << k[l] << " of only " << samples_per_level[l]
         << " samples";
      fail(ErrorKind::Config, os.str());
    }
  }
  return k;
}

}  // namespace npmvs
