#include <benchmark/benchmark.h>

#include <vector>

#include "posture/features.hpp"
#include "posture/random.hpp"

using namespace posture;

namespace {

std::vector<Accel> block(std::size_t n) {
    Rng rng(1);
    std::vector<Accel> b(n);
    for (auto& s : b) s = {0.2 + rng.normal(0, 0.05), 0.3 + rng.normal(0, 0.05), 0.93 + rng.normal(0, 0.05)};
    return b;
}

void BM_DeviceFeatures(benchmark::State& state) {
    const auto b = block(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(device_features(b));
    state.SetItemsProcessed(state.iterations());
}
// 20 samples is a 2 s window at 10 Hz.
BENCHMARK(BM_DeviceFeatures)->Arg(20)->Arg(50)->Arg(100);

void BM_DftSpectrum(benchmark::State& state) {
    const auto vm = vm_series(block(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(dft_spectrum(vm, 10.0));
}
BENCHMARK(BM_DftSpectrum)->Arg(20)->Arg(100)->Arg(400);

}  // namespace
