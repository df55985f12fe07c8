#include <random>

#include <benchmark/benchmark.h>

#include "flowtrack/imaging.hpp"

using namespace flowtrack;

namespace {

BinaryImage random_image(int side, double density) {
    std::mt19937_64 rng(0xBE7C);
    std::bernoulli_distribution fg(density);
    BinaryImage img = BinaryImage::filled(side, side, 0);
    for (auto& px : img.pixels) px = fg(rng) ? 1 : 0;
    return img;
}

}  // namespace

static void BM_LabelComponents(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto conn = state.range(1) == 4 ? Connectivity::Four : Connectivity::Eight;
    const BinaryImage img = random_image(side, 0.45);
    for (auto _ : state) {
        auto labels = label_components(img, conn);
        benchmark::DoNotOptimize(labels);
    }
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_LabelComponents)->Args({64, 4})->Args({64, 8})->Args({256, 4})->Args({256, 8});

static void BM_ConnectedComponents(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const BinaryImage img = random_image(side, 0.45);
    for (auto _ : state) {
        auto blobs = connected_components(img, Connectivity::Eight, 4);
        benchmark::DoNotOptimize(blobs);
    }
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_ConnectedComponents)->Arg(64)->Arg(256);

static void BM_BackgroundDifferenceAndBinarize(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    GrayImage background = GrayImage::filled(side, side, 20);
    GrayImage frame = background;
    for (int y = 10; y < 26; ++y)
        for (int x = 10; x < 26; ++x) frame.at(x, y) = 200;
    for (auto _ : state) {
        auto mask = binarize(background_difference(frame, background), 40);
        benchmark::DoNotOptimize(mask);
    }
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_BackgroundDifferenceAndBinarize)->Arg(64)->Arg(256);
