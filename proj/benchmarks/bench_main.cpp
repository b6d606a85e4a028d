#include <benchmark/benchmark.h>

#include "keplerdm/bessel.hpp"
#include "keplerdm/binary_system.hpp"
#include "keplerdm/classical_map.hpp"
#include "keplerdm/quantum_map.hpp"
#include "keplerdm/regimes.hpp"

using namespace keplerdm;

namespace {

// One quantum map period on lattices of growing size.
void BM_QuantumPeriod(benchmark::State& state) {
    const double n_i = double(state.range(0));
    const double k = 5.0;
    const QuantumParams p{k, frequency_for_chaos_parameter(k, n_i, 5.0), n_i};
    PhotonWavefunction psi = init_state(p);
    const QuantumKeplerMap map(p, psi);
    for (auto _ : state) {
        map.evolve_period(psi);
        benchmark::DoNotOptimize(psi.amplitudes.data());
    }
    state.counters["sites"] = double(psi.size());
}
BENCHMARK(BM_QuantumPeriod)->Arg(100)->Arg(1000)->Arg(10000);

// Classical kicks per second for a chaotic-layer ensemble.
void BM_EnsembleKicks(benchmark::State& state) {
    const KickFunction kick = KickFunction::for_system(preset("sun-jupiter"));
    EnsembleConfig cfg;
    cfg.n_trajectories = 1024;
    cfg.max_kicks = 1000;
    cfg.diffusion_horizon = 100;
    for (auto _ : state) {
        const EnsembleResult r = run_ensemble(kick, -0.1, cfg);
        benchmark::DoNotOptimize(r.escaped);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_trajectories * cfg.max_kicks);
}
BENCHMARK(BM_EnsembleKicks)->Unit(benchmark::kMillisecond);

void BM_BesselJ(benchmark::State& state) {
    const int order = int(state.range(0));
    double x = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bessel_j(order, x));
        x = x < 50.0 ? x + 0.37 : 0.5;
    }
}
BENCHMARK(BM_BesselJ)->Arg(1)->Arg(3)->Arg(40);

void BM_LifetimeCurve(benchmark::State& state) {
    const BinarySystem s = preset("sun-jupiter");
    const std::vector<double> grid = log_spaced_grid(1e-22, 1e-13, 200);
    for (auto _ : state) benchmark::DoNotOptimize(figure2_table(s, grid));
}
BENCHMARK(BM_LifetimeCurve);

}  // namespace

BENCHMARK_MAIN();
