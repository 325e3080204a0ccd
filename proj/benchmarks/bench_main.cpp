#include <benchmark/benchmark.h>

#include <vector>

#include "solarpp/censored_normal.hpp"
#include "solarpp/emos.hpp"
#include "solarpp/evaluation.hpp"
#include "solarpp/model_chain.hpp"
#include "solarpp/nn.hpp"
#include "solarpp/rng.hpp"

using namespace solarpp;

namespace {

void BM_CensoredCrps(benchmark::State& state) {
  Rng rng(1);
  std::vector<CensoredNormal> d;
  std::vector<double> y;
  for (int i = 0; i < 1024; ++i) {
    d.emplace_back(rng.uniform(-5, 25), rng.uniform(0.1, 8), 0.0, i % 2 ? 20.0 : CensoredNormal::kNoUpper);
    y.push_back(rng.uniform(0, 20));
  }
  for (auto _ : state) {
    double s = 0;
    for (std::size_t i = 0; i < d.size(); ++i) s += crps(d[i], y[i]);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_CensoredCrps);

void BM_CrpsGradient(benchmark::State& state) {
  const CensoredNormal d(10, 3, 0, 20);
  double y = 7.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(crps_gradient(d, y));
    y = y < 19 ? y + 0.01 : 0.5;
  }
}
BENCHMARK(BM_CrpsGradient);

void BM_EmpiricalCrps(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> members(static_cast<std::size_t>(state.range(0)));
  for (auto& m : members) m = rng.uniform(0, 800);
  for (auto _ : state) {
    const EmpiricalEnsemble e(members);
    benchmark::DoNotOptimize(crps_empirical(e, 400.0));
  }
}
BENCHMARK(BM_EmpiricalCrps)->Arg(50);

void BM_ChainEnsemble(benchmark::State& state) {
  // One day of hourly 50-member forecasts through all five chain steps.
  const std::size_t hours = 24, m = 50;
  std::vector<TimePoint> times;
  std::vector<double> members;
  for (std::size_t h = 0; h < hours; ++h) {
    times.push_back(parse_time("2020-06-21T00:00:00Z") + std::chrono::hours{h + 1});
    for (std::size_t k = 0; k < m; ++k) members.push_back(h >= 14 || h <= 2 ? 600.0 + 5.0 * k : 0.0);
  }
  const EnsembleSeries ghi(Variable::kGhi, times, m, members,
                           {{"t2m", std::vector<double>(hours, 25.0)}, {"wind10m", std::vector<double>(hours, 3.0)}});
  const PlantSpec plant;
  for (auto _ : state) benchmark::DoNotOptimize(chain::run_chain(ghi, plant));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(hours * m));
}
BENCHMARK(BM_ChainEnsemble);

void BM_NnForwardBackward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const std::size_t batch = static_cast<std::size_t>(state.range(1));
  const nn::Mlp net = nn::Mlp::initialize(hidden, true, 3);
  Rng rng(4);
  std::vector<nn::Features> x(batch);
  std::vector<int> hours(batch);
  std::vector<double> y(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    x[i] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    hours[i] = static_cast<int>(i % 24);
    y[i] = rng.uniform(0, 20);
  }
  nn::Mlp grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::loss_and_gradient(net, nn::Head::kSoftplus, {0.0, 20.0}, x, hours, y, &grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_NnForwardBackward)->Args({256, 1000})->Args({256, 256})->Args({64, 1000});

void BM_NnForward(benchmark::State& state) {
  const nn::Mlp net = nn::Mlp::initialize(256, true, 3);
  std::vector<nn::Features> x(1000, nn::Features{0.1, -0.3, 1.2, 0.5});
  std::vector<int> hours(1000, 12);
  for (auto _ : state) benchmark::DoNotOptimize(nn::evaluate_batch(net, nn::Head::kSoftplus, x, hours));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_NnForward);

void BM_EmosFit(benchmark::State& state) {
  Rng rng(5);
  std::vector<emos::Row> rows;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    const double mean = rng.uniform(0, 20), var = rng.uniform(0, 10);
    const double y = std::max(0.0, 2 + 0.8 * mean + std::sqrt(1 + 0.5 * var) * rng.normal());
    rows.push_back({{mean, var}, y, static_cast<int>(i % 24)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(emos::fit_emos(rows, CensoringBounds{}, {}));
}
BENCHMARK(BM_EmosFit)->Arg(8760)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
