#include "npmvs/sparse_costvol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

int DepthLattice::bin(double depth) const {
  return static_cast<int>(std::floor(position(depth) + 0.5));
}

DepthLattice DepthLattice::for_level(const DepthRange& range, double coarsest_step,
                                     int coarsest, int level) {
  range.validate();
  require(coarsest_step > 0.0, "lattice step must be positive");
  require(level >= 0 && level <= coarsest, "lattice level out of range");
  DepthLattice lattice;
  lattice.origin = 1.0 / range.min;
  lattice.step = std::ldexp(coarsest_step, level - coarsest);
  // Coarsest samples sit on integer positions; every subdivision moves
  // children a quarter interval off their parent, i.e. onto half-integers of
  // the finer lattice.
  lattice.offset = level < coarsest ? 0.5 : 0.0;
  return lattice;
}

SparseCostVolume::SparseCostVolume(int width, int height, int samples_per_pixel, int groups)
    : width_(width), height_(height), samples_(samples_per_pixel), groups_(groups),
      first_(static_cast<std::size_t>(width) * height, 0),
      pixel_valid_(static_cast<std::size_t>(width) * height, 1) {
  require(width > 0 && height > 0 && samples_per_pixel > 0 && groups > 0,
          "sparse volume dimensions must be positive");
  const std::size_t expected = static_cast<std::size_t>(width) * height * samples_per_pixel;
  points_.reserve(expected);
  costs_.reserve(expected * groups);
  index_.reserve(expected);
}

std::size_t SparseCostVolume::add_point(const SparsePoint& point, std::span<const double> costs) {
  require(point.u >= 0 && point.v >= 0 && point.u < width_ && point.v < height_,
          "sparse point outside the pixel grid");
  require(point.sample >= 0 && point.sample < samples_, "sparse point sample index out of range");
  require(static_cast<int>(costs.size()) == groups_, "sparse point cost has the wrong length");
  const std::size_t i = points_.size();
  const auto [it, inserted] = index_.emplace(point.key, i);
  if (!inserted) {
    std::ostringstream os;
    os << "duplicate lattice key (" << point.key.u << ", " << point.key.v << ", " << point.key.bin
       << ")";
    fail(ErrorKind::InvalidArgument, os.str());
  }
  if (point.sample == 0) first_[pixel(point.u, point.v)] = i;
  points_.push_back(point);
  costs_.insert(costs_.end(), costs.begin(), costs.end());
  return i;
}

std::span<const double> SparseCostVolume::cost(std::size_t i) const {
  return {costs_.data() + i * groups_, static_cast<std::size_t>(groups_)};
}

std::optional<std::size_t> SparseCostVolume::find_index(const LatticeKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const SparsePoint* SparseCostVolume::find(const LatticeKey& key) const {
  const auto i = find_index(key);
  return i ? &points_[*i] : nullptr;
}

const SparsePoint* SparseCostVolume::neighbor_lookup(const LatticeKey& key, LatticeAxis axis,
                                                     int offset) const {
  LatticeKey probe = key;
  switch (axis) {
    case LatticeAxis::U: probe.u += offset; break;
    case LatticeAxis::V: probe.v += offset; break;
    case LatticeAxis::Depth: probe.bin += offset; break;
  }
  return find(probe);
}

SparseCostVolume build_sparse_volume(const HypothesisSet& hyps, const FeatureMap& ref_features,
                                     const CameraView& ref_cam,
                                     std::span<const SourceView> sources,
                                     const DepthLattice& lattice, int groups) {
  if (hyps.depths.empty() || hyps.samples == 0)
    fail(ErrorKind::InvalidArgument, "empty hypothesis set");
  require(ref_features.width() == hyps.width && ref_features.height() == hyps.height,
          "reference features do not match the hypothesis grid");
  require(ref_features.channels() % groups == 0,
          "channel count must be divisible by the group count");
  for (const SourceView& s : sources)
    require(s.features && s.features->channels() == ref_features.channels(),
            "source features missing or with a different channel count");

  const int w = hyps.width;
  const int h = hyps.height;
  const int m_count = hyps.samples;
  const std::size_t n_src = sources.size();
  const std::size_t n_points = static_cast<std::size_t>(w) * h * m_count;
  const int channels = ref_features.channels();

  std::vector<double> fused(n_points * groups, 0.0);
  std::vector<int> valid_views(n_points, 0);
  std::vector<Vec3> positions(n_points);
  std::vector<unsigned char> pixel_valid(static_cast<std::size_t>(w) * h, 0);

  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
    const int v = static_cast<int>(row);
    std::vector<double> sampled(channels);
    std::vector<double> per_view(n_src * m_count * groups);
    std::vector<unsigned char> per_valid(n_src * m_count);
    std::vector<double> weights(n_src);
    for (int u = 0; u < w; ++u) {
      const auto depths = hyps.at(u, v);
      const std::size_t base = (static_cast<std::size_t>(v) * w + u) * m_count;
      std::fill(per_view.begin(), per_view.end(), 0.0);
      std::fill(per_valid.begin(), per_valid.end(), 0);
      const bool ref_ok = ref_features.is_valid(u, v);
      const auto ref_cell = ref_features.values.cell(u, v);
      for (int m = 0; m < m_count; ++m) {
        const Vec3 p = unproject(Vec2(u, v), depths[m], ref_cam);
        positions[base + m] = p;
        if (!ref_ok) continue;
        for (std::size_t s = 0; s < n_src; ++s) {
          const auto proj = try_project(p, sources[s].camera);
          if (!proj) continue;
          if (!sample_bilinear(*sources[s].features, proj->pixel.x(), proj->pixel.y(),
                               sampled.data()))
            continue;
          const std::size_t slot = s * m_count + m;
          groupwise_correlation(ref_cell, sampled,
                                std::span<double>(per_view.data() + slot * groups, groups));
          per_valid[slot] = 1;
        }
      }
      // Visibility weight per view: best group-mean correlation over samples.
      double total = 0.0;
      for (std::size_t s = 0; s < n_src; ++s) {
        double best = 0.0;
        for (int m = 0; m < m_count; ++m) {
          const std::size_t slot = s * m_count + m;
          if (!per_valid[slot]) continue;
          double mean = 0.0;
          for (int g = 0; g < groups; ++g) mean += per_view[slot * groups + g];
          best = std::max(best, mean / groups);
        }
        weights[s] = best;
        total += best;
      }
      if (!(total > 0.0)) continue;
      pixel_valid[static_cast<std::size_t>(v) * w + u] = 1;
      for (int m = 0; m < m_count; ++m) {
        double* out = fused.data() + (base + m) * groups;
        for (std::size_t s = 0; s < n_src; ++s) {
          const std::size_t slot = s * m_count + m;
          valid_views[base + m] += per_valid[slot];
          for (int g = 0; g < groups; ++g) out[g] += weights[s] * per_view[slot * groups + g];
        }
        for (int g = 0; g < groups; ++g) out[g] /= total;
      }
    }
  });

  SparseCostVolume volume(w, h, m_count, groups);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const auto depths = hyps.at(u, v);
      const std::size_t base = (static_cast<std::size_t>(v) * w + u) * m_count;
      int previous_bin = 0;
      for (int m = 0; m < m_count; ++m) {
        SparsePoint point;
        point.u = u;
        point.v = v;
        point.sample = m;
        point.depth = depths[m];
        point.position = positions[base + m];
        point.valid_views = valid_views[base + m];
        int bin = lattice.bin(depths[m]);
        // Samples are ascending in depth, hence in bin; nudging keeps keys
        // unique if rounding ever folds two adjacent samples together.
        if (m > 0 && bin <= previous_bin) bin = previous_bin + 1;
        previous_bin = bin;
        point.key = LatticeKey{u, v, bin};
        volume.add_point(point, std::span<const double>(fused.data() + (base + m) * groups,
                                                        static_cast<std::size_t>(groups)));
      }
      volume.set_pixel_valid(u, v, pixel_valid[static_cast<std::size_t>(v) * w + u] != 0);
    }
  return volume;
}

std::vector<double> sparse_filter(const SparseCostVolume& volume, int passes) {
  require(passes >= 0, "filter passes must be non-negative");
  const std::size_t n = volume.size();
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double c : volume.cost(i)) s += c;
    values[i] = s / volume.groups();
  }
  if (passes == 0) return values;

  // Neighbour table: [point][axis][side], -1 when absent.
  constexpr std::int64_t kNone = -1;
  std::vector<std::array<std::int64_t, 6>> neighbors(n);
  parallel_for(0, n, [&](std::size_t i) {
    const LatticeKey key = volume.point(i).key;
    for (int axis = 0; axis < 3; ++axis)
      for (int side = 0; side < 2; ++side) {
        LatticeKey probe = key;
        const int offset = side == 0 ? -1 : 1;
        if (axis == 0) probe.u += offset;
        if (axis == 1) probe.v += offset;
        if (axis == 2) probe.bin += offset;
        const auto j = volume.find_index(probe);
        neighbors[i][axis * 2 + side] = j ? static_cast<std::int64_t>(*j) : kNone;
      }
  });

  std::vector<double> next(n);
  for (int pass = 0; pass < passes; ++pass)
    for (int axis = 0; axis < 3; ++axis) {
      parallel_for(0, n, [&](std::size_t i) {
        double acc = 2.0 * values[i];
        double norm = 2.0;
        for (int side = 0; side < 2; ++side) {
          const std::int64_t j = neighbors[i][axis * 2 + side];
          if (j == kNone) continue;
          acc += values[static_cast<std::size_t>(j)];
          norm += 1.0;
        }
        next[i] = acc / norm;
      });
      values.swap(next);
    }
  return values;
}

ProbabilityVolume sparse_aggregate(const SparseCostVolume& volume,
                                   const SparseAggregateOptions& options) {
  const int w = volume.width();
  const int h = volume.height();
  const int m_count = volume.samples_per_pixel();
  if (volume.size() != static_cast<std::size_t>(w) * h * m_count)
    fail(ErrorKind::InvalidArgument, "sparse volume does not hold every sample of every pixel");
  const std::vector<double> values = sparse_filter(volume, options.passes);
  ProbabilityVolume probs(w, h, m_count);
  std::vector<double> scores(m_count);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (!volume.pixel_valid(u, v)) continue;
      const std::size_t first = volume.pixel_begin(u, v);
      for (int m = 0; m < m_count; ++m) {
        const SparsePoint& p = volume.point(first + m);
        if (p.u != u || p.v != v || p.sample != m)
          fail(ErrorKind::InvalidArgument, "sparse points of a pixel are not contiguous");
        scores[m] = values[first + m];
      }
      softmax(scores, options.temperature, probs.probs(u, v));
      probs.set_valid(u, v, true);
    }
  return probs;
}

}  // namespace npmvs
