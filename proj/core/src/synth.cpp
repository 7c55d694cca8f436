#include "npmvs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "npmvs/error.hpp"
#include "npmvs/parallel.hpp"

namespace npmvs {

namespace {

constexpr double kBaseline = 80.0;  // ring radius of the source cameras
constexpr double kDepthMin = 50.0;
constexpr double kDepthMax = 1500.0;
constexpr double kWavelengthMin = 18.0;  // texture wavelengths, scene units
constexpr double kWavelengthMax = 360.0;
constexpr double kBackground = 1000.0;
constexpr int kSupersample = 3;

struct Hit {
  double t;
  int surface;
};

struct Ray {
  Vec3 origin;
  Vec3 dir;
};

// Axis-aligned rectangle in a plane of constant z; infinite when bounds are.
struct ZPlane {
  double z;
  double x0, x1, y0, y1;
};

struct Box {
  Vec3 lo, hi;
};

struct Sphere {
  Vec3 center;
  double radius;
};

struct Geometry {
  std::vector<ZPlane> planes;
  std::vector<Box> boxes;
  std::vector<Sphere> spheres;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

Geometry geometry_for(SynthPreset preset) {
  Geometry g;
  g.planes.push_back({kBackground, -kInf, kInf, -kInf, kInf});
  switch (preset) {
    case SynthPreset::TwoPlane:
      g.planes.push_back({700.0, -180.0, 130.0, -160.0, 140.0});
      break;
    case SynthPreset::StepBox:
      g.boxes.push_back({Vec3(-260.0, -200.0, 650.0), Vec3(-20.0, 150.0, 900.0)});
      g.boxes.push_back({Vec3(40.0, -130.0, 820.0), Vec3(270.0, 220.0, 990.0)});
      break;
    case SynthPreset::Sphere:
      g.spheres.push_back({Vec3(0.0, 0.0, 860.0), 240.0});
      break;
  }
  return g;
}

std::optional<Hit> intersect(const Geometry& g, const Ray& ray) {
  std::optional<Hit> best;
  auto offer = [&](double t, int id) {
    if (t > 1e-9 && (!best || t < best->t)) best = Hit{t, id};
  };
  int id = 0;
  for (const ZPlane& p : g.planes) {
    if (ray.dir.z() != 0.0) {
      const double t = (p.z - ray.origin.z()) / ray.dir.z();
      const Vec3 q = ray.origin + t * ray.dir;
      if (q.x() >= p.x0 && q.x() <= p.x1 && q.y() >= p.y0 && q.y() <= p.y1) offer(t, id);
    }
    ++id;
  }
  for (const Box& b : g.boxes) {
    double t0 = -kInf, t1 = kInf;
    for (int a = 0; a < 3; ++a) {
      if (ray.dir[a] == 0.0) {
        if (ray.origin[a] < b.lo[a] || ray.origin[a] > b.hi[a]) t0 = kInf;
        continue;
      }
      double ta = (b.lo[a] - ray.origin[a]) / ray.dir[a];
      double tb = (b.hi[a] - ray.origin[a]) / ray.dir[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    if (t0 <= t1) offer(t0, id);
    ++id;
  }
  for (const Sphere& s : g.spheres) {
    const Vec3 oc = ray.origin - s.center;
    const double a = ray.dir.squaredNorm();
    const double half_b = oc.dot(ray.dir);
    const double c = oc.squaredNorm() - s.radius * s.radius;
    const double disc = half_b * half_b - a * c;
    if (disc >= 0.0) offer((-half_b - std::sqrt(disc)) / a, id);
    ++id;
  }
  return best;
}

// Band-limited procedural texture defined on world points, so every view sees
// the same surface pattern.
class Texture {
 public:
  explicit Texture(std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5DEECE66Dull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr int kComponents = 24;
    for (int i = 0; i < kComponents; ++i) {
      const double wavelength =
          kWavelengthMin *
          std::pow(kWavelengthMax / kWavelengthMin, (i + unit(rng)) / kComponents);
      Vec3 dir(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5);
      dir.normalize();
      waves_.push_back({dir * (2.0 * std::numbers::pi / wavelength),
                        2.0 * std::numbers::pi * unit(rng), std::sqrt(wavelength / kWavelengthMax)});
      norm_ += waves_.back().amplitude * waves_.back().amplitude;
    }
    norm_ = std::sqrt(0.5 * norm_);
  }

  /// Roughly zero-mean, unit-variance pattern.
  double operator()(const Vec3& p) const {
    double v = 0.0;
    for (const Wave& w : waves_) v += w.amplitude * std::sin(w.k.dot(p) + w.phase);
    return v / norm_;
  }

 private:
  struct Wave {
    Vec3 k;
    double phase;
    double amplitude;
  };
  std::vector<Wave> waves_;
  double norm_ = 0.0;
};

Ray pixel_ray(const CameraView& cam, double x, double y) {
  const Vec3 dir_cam = cam.intrinsics.triangularView<Eigen::Upper>().solve(Vec3(x, y, 1.0));
  return Ray{cam.center(), cam.rotation.transpose() * dir_cam};
}

}  // namespace

SynthPreset parse_preset(const std::string& name) {
  if (name == "two-plane") return SynthPreset::TwoPlane;
  if (name == "step-box") return SynthPreset::StepBox;
  if (name == "sphere") return SynthPreset::Sphere;
  fail(ErrorKind::Config,
       "unknown preset '" + name + "' (expected two-plane, step-box or sphere)");
}

std::string to_string(SynthPreset preset) {
  switch (preset) {
    case SynthPreset::TwoPlane: return "two-plane";
    case SynthPreset::StepBox: return "step-box";
    case SynthPreset::Sphere: return "sphere";
  }
  return "unknown";
}

SynthScene synth_scene(const SynthOptions& options) {
  if (options.size < 16) fail(ErrorKind::Config, "synthetic scenes need a size of at least 16");
  if (options.views < 2) fail(ErrorKind::Config, "synthetic scenes need at least two views");
  if (!(options.noise >= 0.0)) fail(ErrorKind::Config, "noise must be non-negative");

  const Geometry geometry = geometry_for(options.preset);
  const Texture texture(options.seed);
  const int n = options.size;
  const double f = n;
  const double c = 0.5 * (n - 1);

  SynthScene scene;
  for (int k = 0; k < options.views; ++k) {
    CameraView cam;
    cam.intrinsics << f, 0, c, 0, f, c, 0, 0, 1;
    cam.width = n;
    cam.height = n;
    Vec3 center = Vec3::Zero();
    if (k > 0) {
      const double angle = 2.0 * std::numbers::pi * (k - 1) / (options.views - 1);
      center = Vec3(kBaseline * std::cos(angle), kBaseline * std::sin(angle), 0.0);
    }
    cam.translation = -cam.rotation * center;

    SceneView view;
    view.camera = cam;
    view.range = DepthRange{kDepthMin, kDepthMax};
    view.image = Image(n, n, 1, 0.0);
    DepthMap depth(n, n, 1, std::numeric_limits<double>::quiet_NaN());
    Grid<int> ids(n, n, 1, -1);

    parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < n; ++x) {
        const Ray centre_ray = pixel_ray(cam, x, y);
        if (const auto hit = intersect(geometry, centre_ray)) {
          const Vec3 p = centre_ray.origin + hit->t * centre_ray.dir;
          depth(x, y) = static_cast<float>((cam.rotation * p + cam.translation).z());
          ids(x, y) = hit->surface;
        }
        double sum = 0.0;
        int count = 0;
        for (int sy = 0; sy < kSupersample; ++sy)
          for (int sx = 0; sx < kSupersample; ++sx) {
            const double ox = (sx + 0.5) / kSupersample - 0.5;
            const double oy = (sy + 0.5) / kSupersample - 0.5;
            const Ray ray = pixel_ray(cam, x + ox, y + oy);
            if (const auto hit = intersect(geometry, ray)) {
              sum += texture(ray.origin + hit->t * ray.dir);
              ++count;
            }
          }
        view.image(x, y) = count > 0 ? sum / count : 0.0;
      }
    });

    // Noise and 8-bit quantisation happen serially so the result does not
    // depend on the thread count.
    std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : view.image.data()) {
      double value = 0.5 + 0.16 * v;
      if (options.noise > 0.0) value += options.noise * gauss(rng);
      v = std::round(std::clamp(value, 0.0, 1.0) * 255.0) / 255.0;
    }
    view.gt_depth = std::move(depth);
    scene.bundle.views.push_back(std::move(view));
    scene.surface_ids.push_back(std::move(ids));
  }
  scene.bundle.validate();
  return scene;
}

Grid<std::uint8_t> boundary_mask(const Grid<int>& surface_ids, int radius) {
  require(radius >= 0, "boundary radius must be non-negative");
  const int w = surface_ids.width();
  const int h = surface_ids.height();
  Grid<std::uint8_t> edge(w, h, 1, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int id = surface_ids(x, y);
      if ((x + 1 < w && surface_ids(x + 1, y) != id) || (y + 1 < h && surface_ids(x, y + 1) != id)) {
        edge(x, y) = 1;
        if (x + 1 < w && surface_ids(x + 1, y) != id) edge(x + 1, y) = 1;
        if (y + 1 < h && surface_ids(x, y + 1) != id) edge(x, y + 1) = 1;
      }
    }
  Grid<std::uint8_t> mask(w, h, 1, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!edge(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if (mask.contains(x + dx, y + dy)) mask(x + dx, y + dy) = 1;
    }
  return mask;
}

Grid<int> visibility_count(const SceneBundle& scene, int view, double tolerance) {
  require(view >= 0 && view < static_cast<int>(scene.size()), "view index out of range");
  const SceneView& ref = scene.views[view];
  if (!ref.gt_depth) fail(ErrorKind::Config, "visibility needs ground-truth depth");
  Grid<int> count(ref.camera.width, ref.camera.height, 1, 0);
  for (int y = 0; y < ref.camera.height; ++y)
    for (int x = 0; x < ref.camera.width; ++x) {
      const double d = (*ref.gt_depth)(x, y);
      if (!std::isfinite(d)) continue;
      const Vec3 p = unproject(Vec2(x, y), d, ref.camera);
      for (int j = 0; j < static_cast<int>(scene.size()); ++j) {
        if (j == view || !scene.views[j].gt_depth) continue;
        const auto proj = try_project(p, scene.views[j].camera);
        if (!proj) continue;
        const int sx = static_cast<int>(std::lround(proj->pixel.x()));
        const int sy = static_cast<int>(std::lround(proj->pixel.y()));
        const DepthMap& other = *scene.views[j].gt_depth;
        if (!other.contains(sx, sy) || !std::isfinite(other(sx, sy))) continue;
        if (std::abs(other(sx, sy) - proj->depth) <= tolerance * proj->depth) ++count(x, y);
      }
    }
  return count;
}

}  // namespace npmvs
