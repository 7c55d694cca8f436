// np-mvs: command line front end for the npmvs library.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "npmvs/error.hpp"
#include "npmvs/evaluation.hpp"
#include "npmvs/io.hpp"
#include "npmvs/pipeline.hpp"
#include "npmvs/supervision.hpp"
#include "npmvs/synth.hpp"

namespace fs = std::filesystem;
using namespace npmvs;

namespace {

void print_error(std::string_view kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "invalid integer list '" + text + "'");
    }
  }
  return out;
}

/// View indices present as depths/<name>.pfm in an output directory.
std::vector<int> depth_views(const fs::path& dir) {
  std::vector<int> views;
  const fs::path depths = dir / "depths";
  if (!fs::is_directory(depths)) fail(ErrorKind::Io, dir.string() + " has no depths/ folder");
  for (const auto& e : fs::directory_iterator(depths)) {
    if (e.path().extension() != ".pfm") continue;
    const std::string stem = e.path().stem().string();
    try {
      std::size_t used = 0;
      const int v = std::stoi(stem, &used);
      if (used == stem.size()) views.push_back(v);
    } catch (const std::exception&) {
    }
  }
  std::sort(views.begin(), views.end());
  if (views.empty()) fail(ErrorKind::Io, "no depth maps in " + depths.string());
  return views;
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// ------------------------------------------------------------------ infer

struct InferArgs {
  std::string scene, out, config, hyps, mode;
  int levels = 0, views = 0, groups = 0;
  std::optional<int> reference;
};

int run_infer(const InferArgs& a) {
  PipelineConfig cfg;
  if (!a.config.empty()) cfg = PipelineConfig::from_json(io::read_file(a.config));
  if (a.levels > 0) {
    cfg.levels = a.levels;
    if (a.hyps.empty() && static_cast<int>(cfg.hypotheses.size()) != a.levels)
      fail(ErrorKind::Config, "--levels changes the level count; give --hyps as well");
    cfg.loss_weights.assign(a.levels, 1.0);
  }
  if (!a.hyps.empty()) cfg.hypotheses = parse_int_list(a.hyps);
  if (a.views > 0) cfg.views = a.views;
  if (a.groups > 0) cfg.groups = a.groups;
  if (!a.mode.empty()) cfg.mode = parse_mode(a.mode);
  cfg.validate();

  const SceneBundle scene = io::load_scene(a.scene);
  const auto start = std::chrono::steady_clock::now();
  std::vector<InferenceResult> results;
  if (a.reference) {
    results.push_back(run_inference(scene, *a.reference, cfg));
  } else {
    results = run_inference_all(scene, cfg);
  }
  io::save_inference(scene, results, cfg, a.out);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "inferred " << results.size() << " view(s) in " << number(seconds) << " s -> "
            << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
  std::string est, gt, est_cloud, gt_cloud;
  double theta_pct = -1.0;
  double dcap = 20.0;
};

int run_eval(const EvalArgs& a) {
  SegmentationOptions seg;
  if (a.theta_pct >= 0.0) seg.theta_fraction = a.theta_pct / 100.0;
  std::array<double, kRegionCount> sum{};
  std::array<std::size_t, kRegionCount> count{};
  for (int v : depth_views(a.est)) {
    const std::string name = io::view_name(v);
    const fs::path gt_path = fs::path(a.gt) / "depths" / (name + ".pfm");
    if (!fs::exists(gt_path)) fail(ErrorKind::Io, "view " + name + ": missing " + gt_path.string());
    const DepthMap est = io::read_pfm(fs::path(a.est) / "depths" / (name + ".pfm"));
    const DepthMap gt = io::read_pfm(gt_path);
    const RegionLabels labels = laplacian_segmentation(gt, seg);
    const auto errors = region_depth_error(est, gt, labels);
    // Pool views by pixel count.
    for (int r = 0; r < kRegionCount; ++r) {
      std::size_t n = 0;
      for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
          if (labels(x, y) == r && std::isfinite(est(x, y)) && std::isfinite(gt(x, y))) ++n;
      if (errors[r]) {
        sum[r] += *errors[r] * static_cast<double>(n);
        count[r] += n;
      }
    }
  }
  for (int r = 0; r < kRegionCount; ++r)
    std::cout << (r ? " " : "")
              << number(count[r] ? sum[r] / static_cast<double>(count[r]) : std::nan(""));
  std::cout << "\n";
  if (!a.est_cloud.empty() || !a.gt_cloud.empty()) {
    if (a.est_cloud.empty() || a.gt_cloud.empty())
      fail(ErrorKind::Config, "--est-cloud and --gt-cloud must be given together");
    const CloudMetrics m =
        accuracy_completeness(io::read_ply(a.est_cloud), io::read_ply(a.gt_cloud), a.dcap);
    std::cout << number(m.accuracy) << " " << number(m.completeness) << " " << number(m.overall)
              << "\n";
  }
  return 0;
}

// ------------------------------------------------------------------ fuse

struct FuseArgs {
  std::string in, out;
  double tau = 0.01;
  int nmin = 3;
};

int run_fuse(const FuseArgs& a) {
  std::vector<FusionView> views;
  std::vector<Image> colors;
  const auto indices = depth_views(a.in);
  colors.reserve(indices.size());
  for (int v : indices) {
    const std::string name = io::view_name(v);
    FusionView fv;
    fv.depth = io::read_pfm(fs::path(a.in) / "depths" / (name + ".pfm"));
    const io::CamFile cam = io::read_cam(fs::path(a.in) / "cams" / (name + "_cam.txt"));
    fv.camera.intrinsics = cam.intrinsics;
    fv.camera.rotation = cam.rotation;
    fv.camera.translation = cam.translation;
    fv.camera.width = fv.depth.width();
    fv.camera.height = fv.depth.height();
    const fs::path image = fs::path(a.in) / "images" / (name + ".pgm");
    if (fs::exists(image)) {
      colors.push_back(io::read_image(image));
      fv.color = &colors.back();
    }
    views.push_back(std::move(fv));
  }
  const FusionResult r = fuse_depth_maps(views, FusionOptions{a.tau, a.nmin, true});
  io::write_ply(a.out, r.cloud);
  std::cout << "fused " << r.cloud.size() << " points from " << views.size() << " view(s) -> "
            << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  std::string preset = "two-plane", out;
  int size = 128, views = 5;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  SynthOptions opt;
  opt.preset = parse_preset(a.preset);
  opt.size = a.size;
  opt.views = a.views;
  opt.noise = a.noise;
  opt.seed = a.seed;
  const SynthScene scene = synth_scene(opt);
  io::save_scene(scene.bundle, a.out);
  std::cout << "wrote " << to_string(opt.preset) << " scene with " << scene.bundle.size()
            << " views -> " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ losses

struct LossArgs {
  std::string est, gt;
};

int run_losses(const LossArgs& a) {
  PipelineConfig cfg;
  const fs::path config_path = fs::path(a.est) / "config.json";
  if (fs::exists(config_path)) cfg = PipelineConfig::from_json(io::read_file(config_path));
  std::cout << "view level kind loss sigma positives entries\n";
  std::vector<double> totals(cfg.levels, 0.0);
  for (int v : depth_views(a.est)) {
    const std::string name = io::view_name(v);
    const fs::path gt_path = fs::path(a.gt) / "depths" / (name + ".pfm");
    if (!fs::exists(gt_path)) fail(ErrorKind::Io, "view " + name + ": missing " + gt_path.string());
    const DepthMap gt = io::read_pfm(gt_path);
    const DepthMap est = io::read_pfm(fs::path(a.est) / "depths" / (name + ".pfm"));
    for (int l = cfg.levels - 1; l >= 0; --l) {
      if (l == 0) {
        const double loss = l1_loss(est, gt);
        totals[0] += loss;
        std::cout << name << " 0 l1 " << number(loss) << " - - -\n";
        continue;
      }
      const fs::path level_path =
          fs::path(a.est) / "levels" / (name + "_l" + std::to_string(l) + ".bin");
      const LevelOutput level = io::parse_level(io::read_file(level_path), level_path.string());
      const GroundTruthDistribution hist = gt_histogram(gt, level.hypotheses);
      const ClassBalance balance = class_balance(hist);
      const double loss = level_loss(level.probabilities, hist);
      totals[l] += loss;
      std::cout << name << " " << l << " bce " << number(loss) << " " << number(balance.sigma)
                << " " << balance.positives << " " << balance.entries << "\n";
    }
  }
  for (int l = cfg.levels - 1; l >= 0; --l)
    std::cout << "all " << l << (l == 0 ? " l1 " : " bce ") << number(totals[l]) << " - - -\n";
  std::cout << "all - total " << number(total_loss(totals, cfg.loss_weights)) << " - - -\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view stereo depth inference with non-parametric depth distributions"};
  app.require_subcommand(1);

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "Infer a depth map for every view of a scene");
  c_infer->add_option("--scene", infer.scene, "Scene directory")->required();
  c_infer->add_option("--out", infer.out, "Output directory")->required();
  c_infer->add_option("--config", infer.config, "JSON configuration file");
  c_infer->add_option("--levels", infer.levels, "Pyramid levels (L+1)");
  c_infer->add_option("--hyps", infer.hyps, "Hypotheses per level, finest first (e.g. 8,16,32,96)");
  c_infer->add_option("--views", infer.views, "Views per inference (reference + sources)");
  c_infer->add_option("--groups", infer.groups, "Correlation groups");
  c_infer->add_option("--mode", infer.mode, "nonparametric or unimodal");
  c_infer->add_option("--reference", infer.reference, "Only infer this view");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Per-region depth errors against ground truth");
  c_eval->add_option("--est", eval.est, "Inference output directory")->required();
  c_eval->add_option("--gt", eval.gt, "Scene directory with ground-truth depths")->required();
  c_eval->add_option("--theta", eval.theta_pct, "Band threshold in percent of the depth span");
  c_eval->add_option("--est-cloud", eval.est_cloud, "Estimated point cloud (PLY)");
  c_eval->add_option("--gt-cloud", eval.gt_cloud, "Ground-truth point cloud (PLY)");
  c_eval->add_option("--dcap", eval.dcap, "Outlier distance cap for cloud metrics");

  FuseArgs fuse;
  auto* c_fuse = app.add_subcommand("fuse", "Fuse depth maps into a point cloud");
  c_fuse->add_option("--in", fuse.in, "Directory with depths/ and cams/")->required();
  c_fuse->add_option("--out", fuse.out, "Output PLY file")->required();
  c_fuse->add_option("--tau", fuse.tau, "Relative depth tolerance");
  c_fuse->add_option("--nmin", fuse.nmin, "Consistent views required");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Render a synthetic scene");
  c_synth->add_option("--preset", synth.preset, "two-plane, step-box or sphere");
  c_synth->add_option("--size", synth.size, "Image size in pixels");
  c_synth->add_option("--views", synth.views, "Number of views");
  c_synth->add_option("--out", synth.out, "Output scene directory")->required();
  c_synth->add_option("--seed", synth.seed, "Texture and noise seed");
  c_synth->add_option("--noise", synth.noise, "Std-dev of intensity noise");

  LossArgs losses;
  auto* c_losses = app.add_subcommand("losses", "Supervision losses of an inference output");
  c_losses->add_option("--est", losses.est, "Inference output directory")->required();
  c_losses->add_option("--gt", losses.gt, "Scene directory with ground-truth depths")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*c_infer) return run_infer(infer);
    if (*c_eval) return run_eval(eval);
    if (*c_fuse) return run_fuse(fuse);
    if (*c_synth) return run_synth(synth);
    if (*c_losses) return run_losses(losses);
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
