#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "npmvs/grid.hpp"
#include "npmvs/scene.hpp"

namespace npmvs {

enum class SynthPreset { TwoPlane, StepBox, Sphere };

SynthPreset parse_preset(const std::string& name);
std::string to_string(SynthPreset preset);

struct SynthOptions {
  SynthPreset preset = SynthPreset::TwoPlane;
  int size = 128;
  int views = 5;
  double noise = 0.0;  // std-dev of additive intensity noise
  std::uint64_t seed = 1;
};

struct SynthScene {
  SceneBundle bundle;
  /// Per view, the index of the surface seen by each pixel (-1 for none).
  std::vector<Grid<int>> surface_ids;
};

/// Renders an analytic scene with procedural texture, exact per-view depth
/// and cameras that share orientation and sit on a ring around view 0.
SynthScene synth_scene(const SynthOptions& options);

/// 1 where a pixel lies within `radius` pixels of a change of visible surface.
Grid<std::uint8_t> boundary_mask(const Grid<int>& surface_ids, int radius);

/// Number of other views that see the same surface point as pixel (x, y) of
/// `view` (projection inside the image and matching depth within `tolerance`
/// relative).
Grid<int> visibility_count(const SceneBundle& scene, int view, double tolerance = 1e-3);

}  // namespace npmvs
