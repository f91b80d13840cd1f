#include <benchmark/benchmark.h>

#include "hdm/ordered_probit.hpp"
#include "hdm/synthetic.hpp"

namespace {

hdm::Dataset SyntheticData(std::size_t n) {
  return hdm::GenerateSynthetic(hdm::DefaultSyntheticSpec(), n, 7);
}

void BM_ClassProbabilities(benchmark::State& state) {
  const hdm::Dataset data = SyntheticData(100);
  const hdm::OrderedProbitFit fit =
      hdm::FitOrderedProbit(data, data.schema().names());
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdm::ClassProbabilities(fit.params, data.row(i)));
    i = (i + 1) % data.n_rows();
  }
}
BENCHMARK(BM_ClassProbabilities);

void BM_LogLikelihoodAndScore(benchmark::State& state) {
  const hdm::Dataset data = SyntheticData(static_cast<std::size_t>(state.range(0)));
  const hdm::OrderedProbitFit fit =
      hdm::FitOrderedProbit(data, data.schema().names());
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdm::LogLikelihood(fit.params, data));
    benchmark::DoNotOptimize(hdm::Score(fit.params, data));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihoodAndScore)->Arg(1000)->Arg(10000);

void BM_FitOrderedProbit(benchmark::State& state) {
  const hdm::Dataset data = SyntheticData(static_cast<std::size_t>(state.range(0)));
  const auto names = data.schema().names();
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdm::FitOrderedProbit(data, names));
  }
}
BENCHMARK(BM_FitOrderedProbit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
