#include <benchmark/benchmark.h>

#include "gridadv/attack.hpp"
#include "gridadv/nn.hpp"
#include "gridadv/powerquality.hpp"
#include "gridadv/random.hpp"

using namespace gridadv;

namespace {

Tensor random_tensor(Shape shape, RandomSource& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
}

Tensor one_hot_rows(std::size_t n, std::size_t classes, RandomSource& rng) {
    Tensor y({n, classes});
    for (std::size_t r = 0; r < n; ++r) y.at(r, rng.below(classes)) = 1.0;
    return y;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    RandomSource rng(1);
    const Tensor a = random_tensor({n, n}, rng), b = random_tensor({n, n}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

// One training step's worth of work on the power-quality victim shape.
void BM_MlpForwardBackward(benchmark::State& state) {
    RandomSource rng(2);
    const Model m = init_params(MlpArchitecture{256, {64, 32}, 4, 0.1}, rng);
    const Tensor x = random_tensor({32, 256}, rng);
    const Tensor y = one_hot_rows(32, 4, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_gradients(m, x, y, LossKind::cross_entropy, Mode::train, &rng));
    }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_RnnForwardBackward(benchmark::State& state) {
    RandomSource rng(3);
    const Model m = init_params(RnnArchitecture{9, 32, {32, 16}, 12}, rng);
    const Tensor x = random_tensor({32, 12, 9}, rng);
    const Tensor y = random_tensor({32}, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_gradients(m, x, y, LossKind::mse, Mode::train, &rng));
    }
}
BENCHMARK(BM_RnnForwardBackward);

void BM_InputGradientMlp(benchmark::State& state) {
    RandomSource rng(4);
    const Model m = init_params(MlpArchitecture{256, {48, 24}, 4, 0.1}, rng);
    const Tensor x = random_tensor({256}, rng);
    const Tensor y = Tensor::vector({0, 0, 1, 0});
    for (auto _ : state) benchmark::DoNotOptimize(input_gradient(m, x, y, LossKind::cross_entropy));
}
BENCHMARK(BM_InputGradientMlp);

void BM_CraftSparse(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    RandomSource rng(5);
    const Tensor x = random_tensor({n}, rng), g = random_tensor({n}, rng);
    AttackSpec spec;
    spec.epsilon = 0.1;
    spec.gamma = 0.4;
    for (auto _ : state) benchmark::DoNotOptimize(craft_sparse(x, g, spec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_CraftSparse)->Arg(256)->Arg(4096);

void BM_GenSignal(benchmark::State& state) {
    const pq::SignalParams params;
    RandomSource rng(6);
    for (auto _ : state) benchmark::DoNotOptimize(pq::gen_signal(pq::SignalClass::distortion, params, rng));
}
BENCHMARK(BM_GenSignal);

}  // namespace

BENCHMARK_MAIN();
