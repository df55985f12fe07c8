#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "flowtrack/matching.hpp"

using namespace flowtrack;

namespace {

// n points spread on a coarse grid, displaced under one slice of drift.
// Spacing keeps every match unique, which is the common case in practice.
DetectionSlice grid_slice(std::int64_t index, int n, double drift) {
    DetectionSlice slice{index, {}};
    for (int g = 0; g < n; ++g)
        slice.points.push_back({50.0 * (g % 25) + drift, 50.0 * (g / 25) + 0.4 * drift});
    return slice;
}

std::vector<DetectionSlice> grid_run(int n_slices, int n_points) {
    std::vector<DetectionSlice> slices;
    slices.reserve(static_cast<std::size_t>(n_slices));
    for (int s = 0; s < n_slices; ++s)
        slices.push_back(grid_slice(s, n_points, 0.9 * s));
    return slices;
}

}  // namespace

static void BM_BuildDistanceMatrix(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const DetectionSlice prev = grid_slice(0, n, 0.0);
    const DetectionSlice next = grid_slice(1, n, 0.9);
    for (auto _ : state) {
        auto m = build_distance_matrix(prev, next, 2.0);
        benchmark::DoNotOptimize(m);
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_BuildDistanceMatrix)->Arg(10)->Arg(50)->Arg(100);

static void BM_Step(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const DetectionSlice prev = grid_slice(4, n, 0.0);
    const DetectionSlice next = grid_slice(5, n, 0.9);
    const auto m = build_distance_matrix(prev, next, 2.0);
    TrackerState tracker;
    tracker.slice = 4;
    tracker.max_id_ever = n;
    for (int i = 0; i < n; ++i) tracker.assignment.push_back(ObjectId{i + 1});
    TrackerConfig cfg;
    cfg.max_distance = 2.0;
    for (auto _ : state) {
        auto result = step(tracker, m, cfg);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_Step)->Arg(10)->Arg(50)->Arg(100);

static void BM_Track(benchmark::State& state) {
    const int n_slices = static_cast<int>(state.range(0));
    const int n_points = static_cast<int>(state.range(1));
    const auto slices = grid_run(n_slices, n_points);
    TrackerConfig cfg;
    cfg.max_distance = 2.0;
    for (auto _ : state) {
        auto result = track(slices, cfg);
        benchmark::DoNotOptimize(result);
    }
    state.SetItemsProcessed(state.iterations() * n_slices * n_points);
}
BENCHMARK(BM_Track)->Args({200, 10})->Args({200, 50})->Args({1000, 50});

BENCHMARK_MAIN();
