#include "npmvs/dense_costvol.hpp"

#include <algorithm>
#include <cmath>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

CostVolume::CostVolume(int width, int height, int samples, int groups)
    : width_(width), height_(height), samples_(samples), groups_(groups),
      costs_(static_cast<std::size_t>(width) * height * samples * groups, 0.0),
      valid_(static_cast<std::size_t>(width) * height * samples, 0) {
  require(width > 0 && height > 0 && samples > 0 && groups > 0,
          "cost volume dimensions must be positive");
}

std::span<double> CostVolume::cost(int x, int y, int m) {
  return {costs_.data() + cell(x, y, m) * groups_, static_cast<std::size_t>(groups_)};
}

std::span<const double> CostVolume::cost(int x, int y, int m) const {
  return {costs_.data() + cell(x, y, m) * groups_, static_cast<std::size_t>(groups_)};
}

double CostVolume::mean_cost(int x, int y, int m) const {
  double s = 0.0;
  for (double c : cost(x, y, m)) s += c;
  return s / groups_;
}

ProbabilityVolume::ProbabilityVolume(int width, int height, int samples)
    : width_(width), height_(height), samples_(samples),
      probs_(static_cast<std::size_t>(width) * height * samples, 0.0),
      valid_(static_cast<std::size_t>(width) * height, 0) {
  require(width > 0 && height > 0 && samples > 0,
          "probability volume dimensions must be positive");
}

std::span<double> ProbabilityVolume::probs(int x, int y) {
  return {probs_.data() + pixel(x, y) * samples_, static_cast<std::size_t>(samples_)};
}

std::span<const double> ProbabilityVolume::probs(int x, int y) const {
  return {probs_.data() + pixel(x, y) * samples_, static_cast<std::size_t>(samples_)};
}

void groupwise_correlation(std::span<const double> f_ref, std::span<const double> f_src,
                           std::span<double> out) {
  const std::size_t d = f_ref.size();
  const std::size_t g = out.size();
  require(f_src.size() == d, "feature vectors differ in length");
  require(g > 0 && d % g == 0, "channel count must be divisible by the group count");
  const std::size_t per = d / g;
  for (std::size_t k = 0; k < g; ++k) {
    double acc = 0.0;
    for (std::size_t c = k * per; c < (k + 1) * per; ++c) acc += f_ref[c] * f_src[c];
    out[k] = acc / static_cast<double>(per);
  }
}

std::vector<double> groupwise_correlation(std::span<const double> f_ref,
                                          std::span<const double> f_src, int groups) {
  require(groups > 0, "group count must be positive");
  std::vector<double> out(groups);
  groupwise_correlation(f_ref, f_src, out);
  return out;
}

CostVolume build_view_cost(const FeatureMap& ref_features, const FeatureMap& src_features,
                           const CameraView& ref_cam, const CameraView& src_cam,
                           std::span<const double> depths, int groups) {
  require(!depths.empty(), "no depth hypotheses");
  require(ref_features.channels() == src_features.channels(),
          "reference and source features differ in channel count");
  require(ref_features.channels() % groups == 0,
          "channel count must be divisible by the group count");
  const int w = ref_features.width();
  const int h = ref_features.height();
  const int m_count = static_cast<int>(depths.size());
  CostVolume volume(w, h, m_count, groups);
  parallel_for(0, depths.size(), [&](std::size_t mi) {
    const int m = static_cast<int>(mi);
    const Mat3 hom = plane_homography(ref_cam, src_cam, depths[mi]);
    const FeatureMap warped = warp_map(src_features, hom, w, h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!warped.is_valid(x, y) || !ref_features.is_valid(x, y)) continue;
        groupwise_correlation(ref_features.values.cell(x, y), warped.values.cell(x, y),
                              volume.cost(x, y, m));
        volume.valid_views(x, y, m) = 1;
      }
  });
  return volume;
}

Grid<double> visibility_weights(const CostVolume& view) {
  Grid<double> weights(view.width(), view.height(), 1, 0.0);
  for (int y = 0; y < view.height(); ++y)
    for (int x = 0; x < view.width(); ++x) {
      double best = 0.0;
      for (int m = 0; m < view.samples(); ++m)
        if (view.valid_views(x, y, m) > 0) best = std::max(best, view.mean_cost(x, y, m));
      weights(x, y) = best;
    }
  return weights;
}

CostVolume aggregate_views(std::span<const CostVolume> views) {
  require(!views.empty(), "view aggregation needs at least one view");
  const CostVolume& first = views.front();
  for (const CostVolume& v : views)
    require(v.width() == first.width() && v.height() == first.height() &&
                v.samples() == first.samples() && v.groups() == first.groups(),
            "per-view cost volumes differ in shape");
  std::vector<Grid<double>> weights;
  weights.reserve(views.size());
  for (const CostVolume& v : views) weights.push_back(visibility_weights(v));

  CostVolume fused(first.width(), first.height(), first.samples(), first.groups());
  parallel_for(0, static_cast<std::size_t>(first.height()), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < first.width(); ++x) {
      double total = 0.0;
      for (const auto& w : weights) total += w(x, y);
      if (!(total > 0.0)) continue;  // stays zero-cost, zero-validity
      for (int m = 0; m < first.samples(); ++m) {
        auto out = fused.cost(x, y, m);
        int valid = 0;
        for (std::size_t i = 0; i < views.size(); ++i) {
          const double wi = weights[i](x, y);
          const auto c = views[i].cost(x, y, m);
          for (int g = 0; g < first.groups(); ++g) out[g] += wi * c[g];
          valid += views[i].valid_views(x, y, m);
        }
        for (double& o : out) o /= total;
        fused.valid_views(x, y, m) = valid;
      }
    }
  });
  return fused;
}

void softmax(std::span<const double> scores, double temperature, std::span<double> out) {
  require(temperature > 0.0, "softmax temperature must be positive");
  require(scores.size() == out.size() && !scores.empty(), "softmax size mismatch");
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - peak) / temperature);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
}

namespace {

// One (1,2,1)/4 pass along `axis` (0 = x, 1 = y, 2 = depth) of a W x H x M
// scalar field, renormalising the kernel where a neighbour falls outside.
void smooth_axis(std::vector<double>& field, int w, int h, int m_count, int axis) {
  std::vector<double> out(field.size());
  const std::size_t stride_m = 1;
  const std::size_t stride_x = static_cast<std::size_t>(m_count);
  const std::size_t stride_y = static_cast<std::size_t>(m_count) * w;
  const std::size_t strides[3] = {stride_x, stride_y, stride_m};
  const int extents[3] = {w, h, m_count};
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x)
      for (int m = 0; m < m_count; ++m) {
        const int coord[3] = {x, y, m};
        const std::size_t i = y * stride_y + x * stride_x + m;
        double acc = 2.0 * field[i];
        double norm = 2.0;
        if (coord[axis] > 0) {
          acc += field[i - strides[axis]];
          norm += 1.0;
        }
        if (coord[axis] + 1 < extents[axis]) {
          acc += field[i + strides[axis]];
          norm += 1.0;
        }
        out[i] = acc / norm;
      }
  });
  field.swap(out);
}

}  // namespace

ProbabilityVolume regularize_dense(const CostVolume& volume, const RegularizeOptions& options) {
  require(options.passes >= 0, "smoothing passes must be non-negative");
  const int w = volume.width();
  const int h = volume.height();
  const int m_count = volume.samples();
  std::vector<double> field(static_cast<std::size_t>(w) * h * m_count);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int m = 0; m < m_count; ++m)
        field[(static_cast<std::size_t>(y) * w + x) * m_count + m] = volume.mean_cost(x, y, m);

  for (int pass = 0; pass < options.passes; ++pass)
    for (int axis = 0; axis < 3; ++axis) smooth_axis(field, w, h, m_count, axis);

  ProbabilityVolume probs(w, h, m_count);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool supported = false;
      for (int m = 0; m < m_count && !supported; ++m) supported = volume.valid_views(x, y, m) > 0;
      if (!supported) continue;
      const std::span<const double> scores(
          field.data() + (static_cast<std::size_t>(y) * w + x) * m_count,
          static_cast<std::size_t>(m_count));
      softmax(scores, options.temperature, probs.probs(x, y));
      probs.set_valid(x, y, true);
    }
  return probs;
}

}  // namespace npmvs
