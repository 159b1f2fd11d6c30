#include "asen/ensemble.hpp"
#include "asen/metrics.hpp"
#include "asen/mlp.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace asen;

namespace {

mlp::MlpModel default_model() {
    mlp::MlpConfig cfg;
    cfg.input_size = 11;
    cfg.hidden = {64};
    cfg.num_classes = 6;
    cfg.seed = 1;
    return mlp::init_mlp(cfg);
}

std::vector<int> labels(std::size_t n, int classes) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
    return y;
}

void BM_MlpForward(benchmark::State& state) {
    const auto model = default_model();
    const Matrix x = Matrix::Random(state.range(0), 11);
    for (auto _ : state) benchmark::DoNotOptimize(mlp::forward(model, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(32)->Arg(1024);

void BM_MlpLossAndGradients(benchmark::State& state) {
    const auto model = default_model();
    const Matrix x = Matrix::Random(state.range(0), 11);
    const auto y = labels(static_cast<std::size_t>(state.range(0)), 6);
    for (auto _ : state) benchmark::DoNotOptimize(mlp::loss_and_gradients(model, x, y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpLossAndGradients)->Arg(32)->Arg(1024);

void BM_AsenForward(benchmark::State& state) {
    const std::size_t m = static_cast<std::size_t>(state.range(0)), B = 10, C = 6;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    ensemble::StackedPredictions s;
    s.samples = m;
    s.learners = B;
    s.classes = C;
    s.values.resize(m * B * C);
    for (auto& v : s.values) v = u(rng);
    const auto head = ensemble::init_asen(B, C, 4);
    for (auto _ : state) benchmark::DoNotOptimize(ensemble::asen_forward(head, s));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AsenForward)->Arg(32)->Arg(1024);

void BM_RocAuc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix scores = (Matrix::Random(static_cast<Eigen::Index>(n), 6).array() + 1.0).matrix();
    const auto y = labels(n, 6);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::roc_auc(y, scores));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(10000);

} // namespace

BENCHMARK_MAIN();
