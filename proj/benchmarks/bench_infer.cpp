#include <benchmark/benchmark.h>

#include "pdg/engine.hpp"
#include "pdgcli/gen.hpp"

namespace {

// width-k k-tree with its embedded decomposition
void infer_ktree(benchmark::State& st, pdg::GammaSpec g) {
    pdgcli::KTreeSpec spec;
    spec.n = static_cast<int>(st.range(0));
    spec.k = static_cast<int>(st.range(1));
    spec.arcs = 3 * spec.n / 2;
    auto f = pdgcli::random_ktree(spec, 1);
    pdg::EngineOptions o;
    o.td = f.td;
    for (auto _ : st) {
        auto r = pdg::infer(f.model, g, o);
        benchmark::DoNotOptimize(r.inconsistency);
    }
    st.counters["arcs"] = static_cast<double>(f.model.arcs.size());
}

void BM_KTreeZeroPlus(benchmark::State& st) { infer_ktree(st, pdg::GammaSpec::zero_plus()); }
void BM_KTreeGamma(benchmark::State& st) { infer_ktree(st, pdg::GammaSpec::positive(0.5)); }

}  // namespace

// smoke size first: width 2, N = 20
BENCHMARK(BM_KTreeZeroPlus)->Args({20, 2})->Args({40, 2})->Args({20, 3})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KTreeGamma)->Args({20, 2})->Args({40, 2})->Args({80, 2})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
