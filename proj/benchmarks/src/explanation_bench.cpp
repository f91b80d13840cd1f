#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "hdm/explanation.hpp"
#include "hdm/ordered_probit.hpp"
#include "hdm/synthetic.hpp"

namespace {

struct ProbitCase {
  hdm::Dataset data;
  hdm::OrderedProbitFit fit;
  hdm::Background background;
};

const ProbitCase& Case() {
  static const ProbitCase c = [] {
    const hdm::Dataset full = hdm::GenerateSynthetic(hdm::DefaultSyntheticSpec(), 1000, 5);
    auto names = full.schema().names();
    names.resize(8);
    hdm::Dataset data = full.SelectFeatures(names);
    hdm::OrderedProbitFit fit = hdm::FitOrderedProbit(data, data.schema().names());
    hdm::Background background = hdm::SampleBackground(data, 50, 5);
    return ProbitCase{std::move(data), std::move(fit), std::move(background)};
  }();
  return c;
}

hdm::PredictFn Predictor() {
  return [](std::span<const double> x) {
    return hdm::ClassProbabilities(Case().fit.params, x);
  };
}

void BM_ShapExact(benchmark::State& state) {
  const auto predict = Predictor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdm::ShapExact(predict, Case().data.row(0), Case().background));
  }
}
BENCHMARK(BM_ShapExact)->Unit(benchmark::kMillisecond);

void BM_ShapSampled(benchmark::State& state) {
  const auto predict = Predictor();
  const int permutations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hdm::ShapSampled(predict, Case().data.row(0),
                                              Case().background, permutations, 9));
  }
}
BENCHMARK(BM_ShapSampled)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
