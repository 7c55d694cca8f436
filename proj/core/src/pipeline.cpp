#include "npmvs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"
#include "npmvs/sparse_costvol.hpp"

namespace npmvs {

DepthRange SceneBundle::global_range() const {
  if (views.empty()) fail(ErrorKind::Config, "scene has no views");
  DepthRange r{std::numeric_limits<double>::infinity(), 0.0};
  for (const SceneView& v : views) {
    r.min = std::min(r.min, v.range.min);
    r.max = std::max(r.max, v.range.max);
  }
  return r;
}

void SceneBundle::validate() const {
  if (views.empty()) fail(ErrorKind::Config, "scene has no views");
  const int w = views.front().image.width();
  const int h = views.front().image.height();
  for (std::size_t i = 0; i < views.size(); ++i) {
    const SceneView& v = views[i];
    const std::string name = "view " + std::to_string(i);
    try {
      v.camera.validate();
      v.range.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, name + ": " + e.what());
    }
    if (v.image.channels() != 1) fail(ErrorKind::Config, name + ": image must be single-channel");
    if (v.image.width() != w || v.image.height() != h)
      fail(ErrorKind::Config, name + ": image size differs from view 0");
    if (v.camera.width != w || v.camera.height != h)
      fail(ErrorKind::Config, name + ": camera size differs from its image");
    if (v.gt_depth && (v.gt_depth->width() != w || v.gt_depth->height() != h))
      fail(ErrorKind::Config, name + ": ground-truth depth size differs from its image");
  }
}

std::string to_string(DistributionMode mode) {
  return mode == DistributionMode::Nonparametric ? "nonparametric" : "unimodal";
}

DistributionMode parse_mode(const std::string& text) {
  if (text == "nonparametric") return DistributionMode::Nonparametric;
  if (text == "unimodal") return DistributionMode::Unimodal;
  fail(ErrorKind::Config, "unknown mode '" + text + "' (expected nonparametric or unimodal)");
}

PipelineConfig PipelineConfig::training_profile() {
  PipelineConfig c;
  c.hypotheses = {8, 16, 32, 48};
  return c;
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::Config, what); };
  if (levels < 2) bad("at least two pyramid levels are required");
  if (static_cast<int>(hypotheses.size()) != levels)
    bad("one hypothesis count is needed per level");
  for (int m : hypotheses)
    if (m < 1) bad("hypothesis counts must be positive");
  if (hypotheses.back() < 2) bad("the coarsest level needs at least two depth planes");
  try {
    (void)branching();
  } catch (const Error& e) {
    bad(e.what());
  }
  if (groups < 1 || kFeatureChannels % groups != 0)
    bad("group count must divide the feature channel count (" +
        std::to_string(kFeatureChannels) + ")");
  if (views < 2) bad("at least one source view is required");
  if (!(temperature > 0.0)) bad("temperature must be positive");
  if (smoothing_passes < 0) bad("smoothing passes must be non-negative");
  if (static_cast<int>(loss_weights.size()) != levels) bad("one loss weight is needed per level");
  if (!(fusion_tau >= 0.0)) bad("fusion tolerance must be non-negative");
  if (fusion_min_views < 0) bad("fusion view count must be non-negative");
  if (!(theta_fraction >= 0.0)) bad("segmentation threshold must be non-negative");
  if (!(distance_cap > 0.0)) bad("distance cap must be positive");
}

std::string PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["levels"] = levels;
  j["hypotheses"] = hypotheses;
  j["groups"] = groups;
  j["views"] = views;
  j["mode"] = to_string(mode);
  j["temperature"] = temperature;
  j["smoothing_passes"] = smoothing_passes;
  j["loss_weights"] = loss_weights;
  j["fusion_tau"] = fusion_tau;
  j["fusion_min_views"] = fusion_min_views;
  j["theta_fraction"] = theta_fraction;
  j["distance_cap"] = distance_cap;
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Parse, "config: expected a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "levels") c.levels = value.get<int>();
      else if (key == "hypotheses") c.hypotheses = value.get<std::vector<int>>();
      else if (key == "groups") c.groups = value.get<int>();
      else if (key == "views") c.views = value.get<int>();
      else if (key == "mode") c.mode = parse_mode(value.get<std::string>());
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "smoothing_passes") c.smoothing_passes = value.get<int>();
      else if (key == "loss_weights") c.loss_weights = value.get<std::vector<double>>();
      else if (key == "fusion_tau") c.fusion_tau = value.get<double>();
      else if (key == "fusion_min_views") c.fusion_min_views = value.get<int>();
      else if (key == "theta_fraction") c.theta_fraction = value.get<double>();
      else if (key == "distance_cap") c.distance_cap = value.get<double>();
      else fail(ErrorKind::Config, "config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  return c;
}

std::vector<FeaturePyramid> build_scene_features(const SceneBundle& scene, int levels) {
  std::vector<FeaturePyramid> out(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i)
    out[i] = build_feature_pyramid(scene.views[i].image, levels);
  return out;
}

std::vector<int> select_sources(const SceneBundle& scene, int reference, int count) {
  require(reference >= 0 && reference < static_cast<int>(scene.size()),
          "reference view index out of range");
  const Vec3 c = scene.views[reference].camera.center();
  std::vector<int> others;
  for (int i = 0; i < static_cast<int>(scene.size()); ++i)
    if (i != reference) others.push_back(i);
  std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
    return (scene.views[a].camera.center() - c).squaredNorm() <
           (scene.views[b].camera.center() - c).squaredNorm();
  });
  if (static_cast<int>(others.size()) > count) others.resize(std::max(count, 0));
  return others;
}

namespace {

HypothesisSet refine(const HypothesisSet& coarse, const ProbabilityVolume& probs,
                     const PipelineConfig& config, int level, int width, int height) {
  if (config.mode == DistributionMode::Unimodal)
    return unimodal_upsample(coarse, probs, config.hypotheses[level], width, height);
  const int k = config.branching()[level + 1];
  return upsample_hypotheses(select_topk(coarse, probs, k), width, height);
}

}  // namespace

InferenceResult run_inference(const SceneBundle& scene,
                              const std::vector<FeaturePyramid>& features, int reference,
                              const PipelineConfig& config) {
  config.validate();
  scene.validate();
  if (reference < 0 || reference >= static_cast<int>(scene.size()))
    fail(ErrorKind::Config, "reference view index out of range");
  if (features.size() != scene.size())
    fail(ErrorKind::Config, "one feature pyramid is needed per view");
  const int coarsest = config.levels - 1;
  for (const FeaturePyramid& f : features)
    if (static_cast<int>(f.levels.size()) < config.levels)
      fail(ErrorKind::Config, "feature pyramid has fewer levels than the configuration");

  InferenceResult result;
  result.reference = reference;
  result.sources = select_sources(scene, reference, config.views - 1);
  if (result.sources.empty()) fail(ErrorKind::Config, "scene has no source view");

  const SceneView& ref = scene.views[reference];
  const DepthRange range = ref.range;
  result.levels.resize(config.levels);

  // Coarsest level: dense plane sweep over the whole range.
  const CameraView ref_cam_l = scale_camera(ref.camera, coarsest);
  const FeatureMap& ref_feat_l = features[reference].levels[coarsest];
  const DepthSamples sweep = sample_inverse_depth(range, config.hypotheses[coarsest]);
  std::vector<CostVolume> per_view;
  for (int s : result.sources)
    per_view.push_back(build_view_cost(ref_feat_l, features[s].levels[coarsest], ref_cam_l,
                                       scale_camera(scene.views[s].camera, coarsest),
                                       sweep.depths, config.groups));
  bool overlap = false;
  for (const CostVolume& v : per_view)
    for (int y = 0; y < v.height() && !overlap; ++y)
      for (int x = 0; x < v.width() && !overlap; ++x)
        for (int m = 0; m < v.samples() && !overlap; ++m) overlap = v.valid_views(x, y, m) > 0;
  if (!overlap) fail(ErrorKind::Geometry, "no source view frustum overlaps the reference view");

  const CostVolume fused = aggregate_views(per_view);
  per_view.clear();
  LevelOutput& top = result.levels[coarsest];
  top.probabilities =
      regularize_dense(fused, RegularizeOptions{config.smoothing_passes, config.temperature});
  top.hypotheses = HypothesisSet::uniform(coarsest, ref_cam_l.width, ref_cam_l.height,
                                          sweep.depths, sweep.inverse_step);

  // Refinement levels on sparse volumes.
  for (int level = coarsest - 1; level >= 0; --level) {
    const CameraView cam = scale_camera(ref.camera, level);
    const LevelOutput& coarse = result.levels[level + 1];
    LevelOutput& out = result.levels[level];
    out.hypotheses = refine(coarse.hypotheses, coarse.probabilities, config, level, cam.width,
                            cam.height);
    std::vector<SourceView> sources;
    for (int s : result.sources)
      sources.push_back(
          SourceView{&features[s].levels[level], scale_camera(scene.views[s].camera, level)});
    const DepthLattice lattice =
        DepthLattice::for_level(range, sweep.inverse_step, coarsest, level);
    const SparseCostVolume volume =
        build_sparse_volume(out.hypotheses, features[reference].levels[level], cam, sources,
                            lattice, config.groups);
    out.probabilities = sparse_aggregate(
        volume, SparseAggregateOptions{config.smoothing_passes, config.temperature});
  }

  // Full-resolution expectation.
  const LevelOutput& finest = result.levels[0];
  result.depth = DepthMap(ref.camera.width, ref.camera.height, 1,
                          std::numeric_limits<double>::quiet_NaN());
  for (int y = 0; y < ref.camera.height; ++y)
    for (int x = 0; x < ref.camera.width; ++x)
      if (finest.probabilities.valid(x, y))
        result.depth(x, y) =
            expectation(finest.hypotheses.at(x, y), finest.probabilities.probs(x, y));
  return result;
}

InferenceResult run_inference(const SceneBundle& scene, int reference,
                              const PipelineConfig& config) {
  config.validate();
  return run_inference(scene, build_scene_features(scene, config.levels), reference, config);
}

std::vector<InferenceResult> run_inference_all(const SceneBundle& scene,
                                               const PipelineConfig& config) {
  config.validate();
  scene.validate();
  const auto features = build_scene_features(scene, config.levels);
  std::vector<InferenceResult> results;
  for (int i = 0; i < static_cast<int>(scene.size()); ++i)
    results.push_back(run_inference(scene, features, i, config));
  return results;
}

}  // namespace npmvs
