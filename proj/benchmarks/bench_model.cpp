#include <benchmark/benchmark.h>

#include "travel/harness.hpp"
#include "travel/ingest.hpp"
#include "travel/model.hpp"
#include "travel/synth.hpp"

namespace {

const travel::Dataset& dataset() {
    static travel::Dataset ds = [] {
        travel::SynthSpec spec;  // default 20x20
        travel::SynthResult r = travel::generate(spec);
        return travel::build_dataset(r.graph, r.accidents, 1);
    }();
    return ds;
}

void BM_build_dataset(benchmark::State& state) {
    travel::SynthSpec spec;
    travel::SynthResult r = travel::generate(spec);
    for (auto _ : state)
        benchmark::DoNotOptimize(travel::build_dataset(r.graph, r.accidents, 1));
}
BENCHMARK(BM_build_dataset)->Unit(benchmark::kMillisecond);

void BM_travel_forward(benchmark::State& state) {
    const travel::Dataset& ds = dataset();
    travel::ModelConfig cfg;
    cfg.d_v = ds.node_features.cols();
    cfg.d_e = ds.edge_features.cols();
    travel::Rng rng(1);
    auto model = travel::make_classifier(cfg, rng);
    for (auto _ : state) benchmark::DoNotOptimize(model->forward(ds, false, rng));
}
BENCHMARK(BM_travel_forward)->Unit(benchmark::kMillisecond);

void BM_travel_train_epoch(benchmark::State& state) {
    const travel::Dataset& ds = dataset();
    travel::TrainConfig cfg;
    cfg.epochs = static_cast<std::size_t>(state.range(0));
    cfg.seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(travel::train(ds, cfg));
}
BENCHMARK(BM_travel_train_epoch)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
