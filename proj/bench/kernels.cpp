// Serial vs OpenMP kernels, with the reference loops where they exist.
//   ./kernels --benchmark_filter=Voxel

#include "fixtures.hpp"
#include "scenes.hpp"

#include "evtraj/correlation.hpp"
#include "evtraj/estimator.hpp"
#include "evtraj/event_representation.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace evtraj;

namespace {

const EventStream& stream()
{
    static const EventStream s = test::random_stream(1, 346, 260, 400000, 0, 400000);
    return s;
}

void Voxel(benchmark::State& state, Exec exec)
{
    for(auto _ : state) benchmark::DoNotOptimize(build_base_voxel_grid(stream(), 200000, 400000, 5, 5, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream().events.size()));
}

void VoxelReference(benchmark::State& state)
{
    for(auto _ : state) benchmark::DoNotOptimize(reference::build_base_voxel_grid(stream(), 200000, 400000, 5, 5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream().events.size()));
}

struct Features
{
    FeatureMap a, b;
};

const Features& features(int side)
{
    static std::map<int, Features> cache;
    auto it = cache.find(side);
    if(it == cache.end()) {
        const EventStream s = test::random_stream(2, side * 4, side * 4, side * side * 40, 0, 400000);
        const ViewSet v = extract_correlation_views(build_base_voxel_grid(s, 200000, 400000, 5, 5), 5, 5, 4, 2);
        it = cache.emplace(side, Features{extract_features(v.views[0].grid, 4), extract_features(v.views[1].grid, 4)}).first;
    }
    return it->second;
}

void Volume(benchmark::State& state, Exec exec)
{
    const Features& f = features(static_cast<int>(state.range(0)));
    for(auto _ : state) benchmark::DoNotOptimize(build_correlation_volume(f.a, f.b, exec));
}

void VolumeReference(benchmark::State& state)
{
    const Features& f = features(static_cast<int>(state.range(0)));
    for(auto _ : state) benchmark::DoNotOptimize(reference::build_correlation_volume(f.a, f.b));
}

void Pyramid(benchmark::State& state, Exec exec)
{
    const Features& f = features(static_cast<int>(state.range(0)));
    const CorrelationVolume vol = build_correlation_volume(f.a, f.b);
    for(auto _ : state) benchmark::DoNotOptimize(build_pyramid(vol, 4, 1.0, exec));
}

void PyramidReference(benchmark::State& state)
{
    const Features& f = features(static_cast<int>(state.range(0)));
    const CorrelationVolume vol = build_correlation_volume(f.a, f.b);
    for(auto _ : state) benchmark::DoNotOptimize(reference::build_pyramid(vol, 4, 1.0));
}

void Refine(benchmark::State& state, Exec exec)
{
    static const EventStream dots = test::sliding_dots(3, 128, 96, 2000, {40, -20}, 300000, 1000);
    EstimatorConfig cfg;
    cfg.degree = 2;
    cfg.downsample = 2;
    static const CorrelationSetup setup = build_correlation_setup(dots, 200000, 300000, std::nullopt, cfg);
    const BezierField zero(cfg.degree, setup.feature_height, setup.feature_width);
    for(auto _ : state) benchmark::DoNotOptimize(refine_step(zero, setup.pyramids, cfg.initial_step, cfg, exec));
}

} // namespace

BENCHMARK_CAPTURE(Voxel, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Voxel, parallel, Exec::parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(VoxelReference)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Volume, serial, Exec::serial)->Arg(24)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Volume, parallel, Exec::parallel)->Arg(24)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(VolumeReference)->Arg(24)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Pyramid, serial, Exec::serial)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Pyramid, parallel, Exec::parallel)->Arg(40)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(PyramidReference)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Refine, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(Refine, parallel, Exec::parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
