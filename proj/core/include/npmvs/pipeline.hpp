#pragma once

#include <string>
#include <vector>

#include "npmvs/dense_costvol.hpp"
#include "npmvs/features.hpp"
#include "npmvs/npdist.hpp"
#include "npmvs/scene.hpp"

namespace npmvs {

enum class DistributionMode { Nonparametric, Unimodal };

std::string to_string(DistributionMode mode);
DistributionMode parse_mode(const std::string& text);

struct PipelineConfig {
  int levels = 4;                            // L + 1
  std::vector<int> hypotheses{8, 16, 32, 96};  // M^l for l = 0..L
  int groups = 4;
  int views = 5;                             // reference + sources
  DistributionMode mode = DistributionMode::Nonparametric;
  double temperature = 1.0;
  int smoothing_passes = 2;
  std::vector<double> loss_weights{1.0, 1.0, 1.0, 1.0};
  double fusion_tau = 0.01;
  int fusion_min_views = 3;
  double theta_fraction = 0.01;
  double distance_cap = 20.0;

  /// Training-profile sample counts.
  static PipelineConfig training_profile();

  /// K^l per level under K^l = M^{l-1} / 2.
  std::vector<int> branching() const { return derive_branching(hypotheses); }

  /// Throws ErrorKind::Config on inconsistent settings.
  void validate() const;

  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
};

struct LevelOutput {
  HypothesisSet hypotheses;
  ProbabilityVolume probabilities;
};

struct InferenceResult {
  int reference = 0;
  std::vector<int> sources;
  DepthMap depth;                   // full resolution, NaN where invalid
  std::vector<LevelOutput> levels;  // index l, 0 = finest
};

/// Feature pyramids for every view of a scene.
std::vector<FeaturePyramid> build_scene_features(const SceneBundle& scene, int levels);

/// Up to `count` other views nearest to the reference camera centre, ties
/// broken by view index.
std::vector<int> select_sources(const SceneBundle& scene, int reference, int count);

/// Coarse-to-fine depth inference for one reference view.
InferenceResult run_inference(const SceneBundle& scene,
                              const std::vector<FeaturePyramid>& features, int reference,
                              const PipelineConfig& config);

InferenceResult run_inference(const SceneBundle& scene, int reference,
                              const PipelineConfig& config);

/// Every view as reference in turn.
std::vector<InferenceResult> run_inference_all(const SceneBundle& scene,
                                               const PipelineConfig& config);

}  // namespace npmvs
