#include <benchmark/benchmark.h>

#include "travel/geometry.hpp"
#include "travel/rng.hpp"
#include "travel/synth.hpp"

namespace {

const travel::SynthResult& fixture() {
    static travel::SynthResult result = [] {
        travel::SynthSpec spec;
        spec.grid_w = 50;
        spec.grid_h = 50;
        return travel::generate(spec);
    }();
    return result;
}

void BM_haversine(benchmark::State& state) {
    travel::Rng rng(3);
    const travel::LatLon p{40.0 + rng.uniform(), -75.0 + rng.uniform()};
    const travel::LatLon q{40.0 + rng.uniform(), -75.0 + rng.uniform()};
    for (auto _ : state) benchmark::DoNotOptimize(travel::haversine(p, q));
}
BENCHMARK(BM_haversine);

void BM_nearest_node_grid(benchmark::State& state) {
    const auto& g = fixture().graph;
    travel::NodeLocator locator(g);
    travel::Rng rng(11);
    for (auto _ : state) {
        travel::LatLon p{40.0 + rng.uniform() * 0.05, -75.0 + rng.uniform() * 0.05};
        benchmark::DoNotOptimize(locator.nearest(p));
    }
}
BENCHMARK(BM_nearest_node_grid);

void BM_nearest_node_exhaustive(benchmark::State& state) {
    const auto& g = fixture().graph;
    travel::NodeLocator locator(g);
    travel::Rng rng(11);
    for (auto _ : state) {
        travel::LatLon p{40.0 + rng.uniform() * 0.05, -75.0 + rng.uniform() * 0.05};
        benchmark::DoNotOptimize(locator.nearest_exhaustive(p));
    }
}
BENCHMARK(BM_nearest_node_exhaustive);

void BM_angle_set_all_edges(benchmark::State& state) {
    const auto& g = fixture().graph;
    for (auto _ : state) {
        double acc = 0.0;
        for (std::size_t e = 0; e < g.num_edges(); ++e)
            acc += travel::angular_summary(travel::angle_set(g, static_cast<int>(e))).straightness;
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_angle_set_all_edges)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
