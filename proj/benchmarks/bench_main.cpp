#include <benchmark/benchmark.h>

#include "sievepi/boosting.hpp"
#include "sievepi/dgp.hpp"
#include "sievepi/folds.hpp"
#include "sievepi/hal.hpp"
#include "sievepi/series.hpp"

using namespace sievepi;

static void BM_HalFit(benchmark::State& state) {
    const Dgp dgp = Dgp::make(DgpKind::HalExp);
    const Sample s = sample_dgp(dgp, state.range(0), 1);
    const auto basis = std::make_shared<HalBasis>(build_hal_basis(s, 1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_hal(s, Loss{LossKind::SquaredError}, 3.0, basis));
    }
}
BENCHMARK(BM_HalFit)->Arg(100)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_HalSelectMCv(benchmark::State& state) {
    const Dgp dgp = Dgp::make(DgpKind::HalExp);
    const Sample s = sample_dgp(dgp, state.range(0), 1);
    const FoldPlan plan = make_folds(s.n(), 10, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            select_M_cv(s, Loss{LossKind::SquaredError}, default_m_grid(s), plan));
    }
}
BENCHMARK(BM_HalSelectMCv)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_SeriesFit(benchmark::State& state) {
    const Dgp dgp = Dgp::make(DgpKind::StepTrig);
    const Sample s = sample_dgp(dgp, state.range(0), 1);
    BoostingConfig cfg;
    cfg.seed = 1;
    const auto init = fit_boosting(s, cfg);
    const SeriesSpace space = build_series_space(init, SeriesKind::TrigComposed, 10, s);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_series(space, s, Loss{LossKind::SquaredError}));
    }
}
BENCHMARK(BM_SeriesFit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_BoostingFit(benchmark::State& state) {
    const Dgp dgp = Dgp::make(DgpKind::StepTrig);
    const Sample s = sample_dgp(dgp, state.range(0), 1);
    BoostingConfig cfg;
    cfg.seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_boosting(s, cfg));
    }
}
BENCHMARK(BM_BoostingFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
