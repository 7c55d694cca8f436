#include <cstdint>
#include <map>

#include <benchmark/benchmark.h>

#include "npmvs/dense_costvol.hpp"
#include "npmvs/features.hpp"
#include "npmvs/pipeline.hpp"
#include "npmvs/sparse_costvol.hpp"
#include "npmvs/synth.hpp"

namespace {

using namespace npmvs;

const SynthScene& scene(int size) {
  static std::map<int, SynthScene> cache;
  auto it = cache.find(size);
  if (it == cache.end()) {
    SynthOptions o;
    o.size = size;
    it = cache.emplace(size, synth_scene(o)).first;
  }
  return it->second;
}

void BM_FeatureExtraction(benchmark::State& state) {
  const Image& image = scene(static_cast<int>(state.range(0))).bundle.views[0].image;
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(image));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(image.pixels()));
}
BENCHMARK(BM_FeatureExtraction)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DenseViewCost(benchmark::State& state) {
  const SceneBundle& b = scene(128).bundle;
  const int m = static_cast<int>(state.range(0));
  const FeatureMap ref = extract_features(b.views[0].image);
  const FeatureMap src = extract_features(b.views[1].image);
  const DepthSamples sweep = sample_inverse_depth(b.views[0].range, m);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        build_view_cost(ref, src, b.views[0].camera, b.views[1].camera, sweep.depths, 4));
  state.SetItemsProcessed(state.iterations() * 128 * 128 * m);
}
BENCHMARK(BM_DenseViewCost)->Arg(16)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_SparseAggregate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int m = 8;
  SparseCostVolume vol(side, side, m, 4);
  std::uint64_t seed = 1;
  for (int v = 0; v < side; ++v)
    for (int u = 0; u < side; ++u)
      for (int s = 0; s < m; ++s) {
        SparsePoint p;
        p.u = u;
        p.v = v;
        p.sample = s;
        p.key = {u, v, 2 * s + static_cast<int>((u + v) % 3)};
        double c[4];
        for (double& x : c) {
          seed = seed * 6364136223846793005ull + 1442695040888963407ull;
          x = static_cast<double>(seed >> 11) * 0x1.0p-53;
        }
        vol.add_point(p, c);
      }
  for (auto _ : state) benchmark::DoNotOptimize(sparse_aggregate(vol));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(vol.size()));
}
BENCHMARK(BM_SparseAggregate)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& state) {
  const SynthScene& s = scene(static_cast<int>(state.range(0)));
  PipelineConfig config;
  config.mode = state.range(1) ? DistributionMode::Unimodal : DistributionMode::Nonparametric;
  const auto features = build_scene_features(s.bundle, config.levels);
  for (auto _ : state) benchmark::DoNotOptimize(run_inference(s.bundle, features, 0, config));
}
BENCHMARK(BM_Inference)
    ->Args({128, 0})
    ->Args({128, 1})
    ->Args({256, 0})
    ->ArgNames({"size", "unimodal"})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
