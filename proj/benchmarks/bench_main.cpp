#include <benchmark/benchmark.h>

// Own main: the packaged benchmark_main archive is LTO bytecode from another GCC.
BENCHMARK_MAIN();
