#include <benchmark/benchmark.h>

#include <numeric>
#include <string>
#include <vector>

#include "posture/balance.hpp"
#include "posture/forest.hpp"
#include "posture/random.hpp"

using namespace posture;

namespace {

// Two overlapping Gaussian classes, 30 features, about 1 sitting in 17.
Dataset table(std::size_t rows) {
    std::vector<std::string> names;
    for (int f = 0; f < 30; ++f) names.push_back("f" + std::to_string(f));
    Dataset d(names, {"S01"});
    Rng rng(3);
    std::vector<double> x(30);
    for (std::size_t i = 0; i < rows; ++i) {
        const bool sit = rng.below(17) == 0;
        for (auto& v : x) v = rng.normal(sit ? 0.7 : 0.0, 1.0);
        d.add_row(x, sit ? Posture::sitting : Posture::lying, 0);
    }
    return d;
}

void BM_BestSplit(benchmark::State& state) {
    const auto d = table(static_cast<std::size_t>(state.range(0)));
    std::vector<std::size_t> rows(d.rows()), feats{0, 5, 10, 15, 20};
    std::iota(rows.begin(), rows.end(), 0);
    for (auto _ : state) benchmark::DoNotOptimize(best_split(d, rows, feats, 5));
}
BENCHMARK(BM_BestSplit)->Arg(1000)->Arg(10000);

void BM_TrainForest(benchmark::State& state) {
    const auto d = table(static_cast<std::size_t>(state.range(0)));
    ForestParams p;
    p.n_trees = 20;
    p.seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train_forest(d, p));
}
BENCHMARK(BM_TrainForest)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
    const auto d = table(5000);
    ForestParams p;
    p.n_trees = 100;
    p.seed = 1;
    const auto model = train_forest(d, p);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.predict(d.row(i)));
        i = (i + 1) % d.rows();
    }
}
BENCHMARK(BM_Predict);

void BM_Smote(benchmark::State& state) {
    const auto d = table(static_cast<std::size_t>(state.range(0)));
    const auto minority = d.rows_of_class(Posture::sitting);
    for (auto _ : state) benchmark::DoNotOptimize(smote_generate(d, minority, 400, 5, 2));
}
BENCHMARK(BM_Smote)->Arg(10000)->Arg(40000)->Unit(benchmark::kMillisecond);

}  // namespace
