#include <benchmark/benchmark.h>

#include "gridcast/case_io.hpp"
#include "gridcast/cascade.hpp"
#include "gridcast/losses.hpp"
#include "gridcast/predict.hpp"
#include "gridcast/train.hpp"

namespace {

using namespace gridcast;

#ifndef GRIDCAST_SOURCE_DIR
#define GRIDCAST_SOURCE_DIR "."
#endif

const Network& ieee30() {
    static const Network net = load_case_file(std::string(GRIDCAST_SOURCE_DIR) + "/data/ieee30.m");
    return net;
}

struct Trained {
    SamplePool pool;
    InfluenceModel model;
};

const Trained& trained() {
    static const Trained t = [] {
        Trained out;
        PoolConfig cfg;
        cfg.n_samples = 300;
        out.pool = generate_pool(ieee30(), {1.5}, Policy::none, 42, cfg);
        out.model = train_model(out.pool);
        return out;
    }();
    return t;
}

void BM_DcPowerFlow(benchmark::State& state) {
    const Network net = scale_loads(ieee30(), {1.2});
    std::vector<uint8_t> alive(net.n_branches(), 1);
    const IslandPartition part = partition_islands(net, alive);
    std::vector<double> dispatch, served;
    balance_proportional(net, part, net.demand(), dispatch, served);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dc_pf(net, alive, served, dispatch));
    }
}
BENCHMARK(BM_DcPowerFlow);

void BM_SmartShedOpf(benchmark::State& state) {
    const Network net = scale_loads(ieee30(), {1.5});
    std::vector<uint8_t> alive(net.n_branches(), 1);
    alive[9] = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dc_opf_smart_shed(net, alive, net.demand(), net.shed_priorities()));
    }
}
BENCHMARK(BM_SmartShedOpf);

void BM_CascadeOracle(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_cascade(ieee30(), {1.5}, {9, 40}, Policy::none, 1));
    }
}
BENCHMARK(BM_CascadeOracle);

void BM_InfluencePrediction(benchmark::State& state) {
    const auto& t = trained();
    const auto& sample = t.pool.samples[295];
    for (auto _ : state) {
        const PredictedCascade cascade =
            predict_cascade(t.model.link_model, sample.states[0], sample.loading_c);
        const PredictedLoadShed shed =
            predict_load_shed(t.model.shed_model, cascade.states, sample.loading_c);
        benchmark::DoNotOptimize(shed);
    }
}
BENCHMARK(BM_InfluencePrediction);

void BM_EstimateTransitions(benchmark::State& state) {
    const auto& t = trained();
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_A(t.pool));
    }
}
BENCHMARK(BM_EstimateTransitions);

void BM_FitInfluenceRow(benchmark::State& state) {
    const auto& t = trained();
    const auto q = link_fit_problem(t.pool, t.model.link_model.a11, t.model.link_model.a01, 9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(minimize_on_simplex(q, t.model.link_model.a11.rows()));
    }
}
BENCHMARK(BM_FitInfluenceRow);

void BM_ThresholdSelection(benchmark::State& state) {
    const auto& t = trained();
    const auto& sample = t.pool.samples[295];
    for (auto _ : state) {
        benchmark::DoNotOptimize(select_threshold(t.model.link_model.threshold_pool,
                                                  t.model.link_model.threshold_index, 1.5,
                                                  sample.states[0]));
    }
}
BENCHMARK(BM_ThresholdSelection);

}  // namespace

BENCHMARK_MAIN();
