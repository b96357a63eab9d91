#include <benchmark/benchmark.h>

#include <sstream>
#include <string>

#include "posture/ingest.hpp"
#include "posture/synth.hpp"

using namespace posture;

namespace {

// Ten minutes of one device at 100 Hz.
const SubjectData& subject() {
    static const SubjectData s = [] {
        CohortConfig c;
        c.session_hours = 1.0 / 6.0;
        c.dropouts_per_hour = 0;
        return generate_subject(c, 0);
    }();
    return s;
}

void BM_ParseRaw(benchmark::State& state) {
    std::ostringstream out;
    write_raw(out, subject().wrist);
    const std::string text = out.str();
    for (auto _ : state) {
        std::istringstream in(text);
        benchmark::DoNotOptimize(parse_raw(in, "S01", Device::wrist));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseRaw)->Unit(benchmark::kMillisecond);

void BM_Resample(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(resample_to_10hz(subject().wrist[0]));
}
BENCHMARK(BM_Resample);

void BM_DetectNonwear(benchmark::State& state) {
    const auto low = resample_to_10hz(subject().ankle[0]);
    for (auto _ : state) benchmark::DoNotOptimize(detect_nonwear(low));
}
BENCHMARK(BM_DetectNonwear);

void BM_BuildWindows(benchmark::State& state) {
    const std::vector<TriaxialRecording> w{resample_to_10hz(subject().wrist[0])};
    const std::vector<TriaxialRecording> a{resample_to_10hz(subject().ankle[0])};
    for (auto _ : state) benchmark::DoNotOptimize(build_windows(w, a, subject().labels, {}));
}
BENCHMARK(BM_BuildWindows);

}  // namespace
