#include <benchmark/benchmark.h>

#include "rbl/canonical.hpp"
#include "rbl/moves.hpp"

BENCHMARK_MAIN();
