#include <benchmark/benchmark.h>

#include <numeric>

#include "graylearn/dataset.hpp"
#include "graylearn/losses.hpp"
#include "graylearn/network.hpp"
#include "graylearn/rng.hpp"
#include "graylearn/train.hpp"

using namespace graylearn;

namespace {

LabeledDataset bench_blobs(std::size_t n_per_class) {
    BlobSpec spec;
    spec.n_per_class = n_per_class;
    spec.num_classes = 5;
    spec.num_features = 10;
    spec.seed = 1;
    return gen_blobs(spec);
}

void BM_Forward(benchmark::State& state) {
    Rng rng(1);
    const auto params = init_params(layer_widths(10, std::vector<std::size_t>{128, 128}, 5), rng);
    std::vector<double> x(10, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(predict_logits(params, x));
}
BENCHMARK(BM_Forward);

void BM_SampleLoss(benchmark::State& state) {
    const auto method = state.range(0) == 0 ? LossMethod::gl() : LossMethod::standard();
    const auto probs = softmax(std::vector<double>{0.3, -1.2, 2.0, 0.1, 0.0, 1.1, -0.4, 0.9, 0.2, -2.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_loss(method, probs, 3));
        benchmark::DoNotOptimize(sample_loss_prob_grad(method, probs, 3, ConfidenceGradient::Full));
    }
}
BENCHMARK(BM_SampleLoss)->Arg(0)->Arg(1);

void BM_BatchRiskGradient(benchmark::State& state) {
    Rng rng(2);
    const auto data = bench_blobs(40);
    const auto params = init_params(layer_widths(10, std::vector<std::size_t>{128, 128}, 5), rng);
    std::vector<std::size_t> batch(static_cast<std::size_t>(state.range(0)));
    std::iota(batch.begin(), batch.end(), std::size_t{0});
    for (auto _ : state) benchmark::DoNotOptimize(empirical_risk(LossMethod::gl(), params, data, batch));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchRiskGradient)->Arg(16)->Arg(128);

void BM_TrainEpoch(benchmark::State& state) {
    const auto data = bench_blobs(60);
    TrainConfig c = TrainConfig::tabular_preset();
    c.method = LossMethod::gl();
    c.epochs = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train(c, data));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
