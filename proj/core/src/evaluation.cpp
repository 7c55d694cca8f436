#include "npmvs/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool has_depth(double d) { return std::isfinite(d); }

}  // namespace

DepthMap downsample_depth(const DepthMap& depth) {
  const int w = (depth.width() + 1) / 2;
  const int h = (depth.height() + 1) / 2;
  DepthMap out(w, h, 1, kNaN);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      int count = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int fx = 2 * x + dx;
          const int fy = 2 * y + dy;
          if (!depth.contains(fx, fy) || !has_depth(depth(fx, fy))) continue;
          sum += depth(fx, fy);
          ++count;
        }
      if (count > 0) out(x, y) = sum / count;
    }
  return out;
}

DepthMap upsample_depth(const DepthMap& coarse, int width, int height) {
  DepthMap out(width, height, 1, kNaN);
  const int cw = coarse.width();
  const int ch = coarse.height();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double cx = std::clamp((x + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(cw - 1));
      const double cy = std::clamp((y + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(ch - 1));
      const int x0 = static_cast<int>(std::floor(cx));
      const int y0 = static_cast<int>(std::floor(cy));
      const int x1 = std::min(x0 + 1, cw - 1);
      const int y1 = std::min(y0 + 1, ch - 1);
      const double ax = cx - x0;
      const double ay = cy - y0;
      const int xs[4] = {x0, x1, x0, x1};
      const int ys[4] = {y0, y0, y1, y1};
      const double ws[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      // Weighted mean relative to the first valid corner, so equal corners
      // reproduce their value exactly.
      double anchor = kNaN;
      double acc = 0.0;
      double norm = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double v = coarse(xs[k], ys[k]);
        if (ws[k] <= 0.0 || !has_depth(v)) continue;
        if (!has_depth(anchor)) anchor = v;
        acc += ws[k] * (v - anchor);
        norm += ws[k];
      }
      if (norm > 0.0) out(x, y) = anchor + acc / norm;
    }
  return out;
}

RegionLabels laplacian_segmentation(const DepthMap& gt_depth, const SegmentationOptions& options) {
  const int bands = options.bands;
  require(bands >= 1 && bands < 31, "band count out of range");
  const int minimum = 1 << bands;
  if (gt_depth.width() < minimum || gt_depth.height() < minimum)
    fail(ErrorKind::InvalidArgument, "depth map is smaller than 2^bands in some dimension");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double d : gt_depth.data())
    if (has_depth(d)) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  RegionLabels labels(gt_depth.width(), gt_depth.height(), 1, kInvalidRegion);
  if (!(hi >= lo)) return labels;  // no valid pixel
  const double theta = options.theta_absolute ? *options.theta_absolute
                                              : options.theta_fraction * (hi - lo);
  require(theta >= 0.0, "segmentation threshold must be non-negative");

  std::vector<DepthMap> pyramid{gt_depth};
  for (int q = 0; q < bands; ++q) pyramid.push_back(downsample_depth(pyramid.back()));

  std::vector<DepthMap> response;
  for (int q = 0; q < bands; ++q) {
    const DepthMap& level = pyramid[q];
    const DepthMap up = upsample_depth(pyramid[q + 1], level.width(), level.height());
    DepthMap band(level.width(), level.height(), 1, 0.0);
    for (int y = 0; y < level.height(); ++y)
      for (int x = 0; x < level.width(); ++x)
        if (has_depth(level(x, y)) && has_depth(up(x, y)))
          band(x, y) = std::abs(level(x, y) - up(x, y));
    response.push_back(std::move(band));
  }

  for (int y = 0; y < gt_depth.height(); ++y)
    for (int x = 0; x < gt_depth.width(); ++x) {
      if (!has_depth(gt_depth(x, y))) continue;
      std::uint8_t label = static_cast<std::uint8_t>(kRegionCount - 1);
      for (int q = 0; q < bands && q < kRegionCount - 1; ++q)
        if (response[q](x >> q, y >> q) > theta) {
          label = static_cast<std::uint8_t>(q);
          break;
        }
      labels(x, y) = label;
    }
  return labels;
}

std::array<std::optional<double>, kRegionCount> region_depth_error(const DepthMap& est,
                                                                   const DepthMap& gt,
                                                                   const RegionLabels& labels) {
  if (est.width() != gt.width() || est.height() != gt.height() ||
      labels.width() != gt.width() || labels.height() != gt.height())
    fail(ErrorKind::InvalidArgument, "depth maps and labels differ in size");
  std::array<double, kRegionCount> sum{};
  std::array<std::size_t, kRegionCount> count{};
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      const std::uint8_t r = labels(x, y);
      if (r >= kRegionCount) continue;
      const double a = est(x, y);
      const double b = gt(x, y);
      if (!has_depth(a) || !has_depth(b)) continue;
      sum[r] += std::abs(a - b);
      ++count[r];
    }
  std::array<std::optional<double>, kRegionCount> out;
  for (int r = 0; r < kRegionCount; ++r)
    if (count[r] > 0) out[r] = sum[r] / static_cast<double>(count[r]);
  return out;
}

FusionResult fuse_depth_maps(std::span<const FusionView> views, const FusionOptions& options) {
  require(options.tau >= 0.0, "fusion tolerance must be non-negative");
  require(options.n_min >= 0, "fusion view count must be non-negative");
  for (const FusionView& v : views) {
    v.camera.validate();
    if (v.depth.width() != v.camera.width || v.depth.height() != v.camera.height)
      fail(ErrorKind::InvalidArgument, "depth map does not match its camera dimensions");
    if (v.color && (v.color->width() != v.depth.width() || v.color->height() != v.depth.height()))
      fail(ErrorKind::InvalidArgument, "colour image does not match its depth map");
  }

  FusionResult result;
  std::vector<Grid<std::uint8_t>> consumed;
  for (const FusionView& v : views) {
    result.accepted.emplace_back(v.depth.width(), v.depth.height(), 1, 0);
    consumed.emplace_back(v.depth.width(), v.depth.height(), 1, 0);
  }

  struct Match {
    std::uint32_t view;
    int x;
    int y;
  };

  for (std::size_t i = 0; i < views.size(); ++i) {
    const FusionView& ref = views[i];
    const int w = ref.depth.width();
    const int h = ref.depth.height();
    // Consistency test per row in parallel; emission stays sequential so the
    // cloud is ordered by (view, row, column).
    std::vector<std::vector<Match>> matches(static_cast<std::size_t>(w) * h);
    parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        const double d = ref.depth(x, y);
        if (!has_depth(d) || d <= 0.0) continue;
        const Vec3 p = unproject(Vec2(x, y), d, ref.camera);
        std::vector<Match>& found = matches[static_cast<std::size_t>(y) * w + x];
        for (std::size_t j = 0; j < views.size(); ++j) {
          if (j == i) continue;
          const auto proj = try_project(p, views[j].camera);
          if (!proj) continue;
          const int sx = static_cast<int>(std::lround(proj->pixel.x()));
          const int sy = static_cast<int>(std::lround(proj->pixel.y()));
          if (!views[j].depth.contains(sx, sy)) continue;
          const double ds = views[j].depth(sx, sy);
          if (!has_depth(ds)) continue;
          if (std::abs(ds - proj->depth) <= options.tau * proj->depth)
            found.push_back(Match{static_cast<std::uint32_t>(j), sx, sy});
        }
        if (static_cast<int>(found.size()) >= options.n_min)
          result.accepted[i](x, y) = 1;
        else
          found.clear();
      }
    });

    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!result.accepted[i](x, y)) continue;
        ++result.accepted_count;
        if (options.deduplicate && consumed[i](x, y)) continue;
        result.cloud.points.push_back(unproject(Vec2(x, y), ref.depth(x, y), ref.camera));
        if (ref.color) {
          const double c = std::clamp((*ref.color)(x, y), 0.0, 1.0);
          const auto g = static_cast<std::uint8_t>(std::lround(c * 255.0));
          result.cloud.colors.push_back({g, g, g});
        }
        if (options.deduplicate)
          for (const Match& m : matches[static_cast<std::size_t>(y) * w + x])
            consumed[m.view](m.x, m.y) = 1;
      }
  }
  if (result.cloud.colors.size() != result.cloud.points.size()) result.cloud.colors.clear();
  return result;
}

std::size_t NearestNeighborIndex::CellHash::operator()(
    const std::array<std::int64_t, 3>& c) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(c[0]);
  h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(c[1]);
  h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(c[2]);
  h ^= h >> 31;
  return static_cast<std::size_t>(h * 0xBF58476D1CE4E5B9ull);
}

NearestNeighborIndex::NearestNeighborIndex(std::span<const Vec3> points, double cell_size)
    : cell_size_(cell_size), points_(points.begin(), points.end()) {
  require(cell_size > 0.0 && std::isfinite(cell_size), "cell size must be positive");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require(points_[i].allFinite(), "point cloud holds a non-finite coordinate");
    cells_[cell_of(points_[i])].push_back(static_cast<std::uint32_t>(i));
  }
}

std::array<std::int64_t, 3> NearestNeighborIndex::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

std::optional<double> NearestNeighborIndex::nearest_within(const Vec3& query,
                                                           double radius) const {
  require(radius >= 0.0 && radius <= cell_size_, "search radius must not exceed the cell size");
  const auto c = cell_of(query);
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t dz = -1; dz <= 1; ++dz)
    for (std::int64_t dy = -1; dy <= 1; ++dy)
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find({c[0] + dx, c[1] + dy, c[2] + dz});
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) best = std::min(best, (points_[i] - query).norm());
      }
  if (best <= radius) return best;
  return std::nullopt;
}

namespace {

// Mean nearest distance from `from` to `to` over distances within the cap.
std::pair<double, std::size_t> directed_distance(const PointCloud& from, const PointCloud& to,
                                                 double d_cap) {
  if (from.points.empty() || to.points.empty()) return {kNaN, 0};
  const NearestNeighborIndex index(to.points, d_cap);
  std::vector<double> distance(from.points.size(), kNaN);
  parallel_for(0, from.points.size(), [&](std::size_t i) {
    if (const auto d = index.nearest_within(from.points[i], d_cap)) distance[i] = *d;
  });
  double sum = 0.0;
  std::size_t count = 0;
  for (double d : distance)
    if (!std::isnan(d)) {
      sum += d;
      ++count;
    }
  return {count > 0 ? sum / static_cast<double>(count) : kNaN, count};
}

}  // namespace

CloudMetrics accuracy_completeness(const PointCloud& est, const PointCloud& gt, double d_cap) {
  require(d_cap > 0.0, "outlier cap must be positive");
  CloudMetrics m;
  std::tie(m.accuracy, m.accuracy_inliers) = directed_distance(est, gt, d_cap);
  std::tie(m.completeness, m.completeness_inliers) = directed_distance(gt, est, d_cap);
  m.overall = 0.5 * (m.accuracy + m.completeness);
  return m;
}

}  // namespace npmvs
