#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "pdtr/backward.hpp"
#include "pdtr/inference.hpp"
#include "pdtr/prioritized.hpp"
#include "pdtr/regression.hpp"
#include "pdtr/simulation.hpp"

using namespace pdtr;

namespace {

const Dataset& s1_data(std::size_t n) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, SmartModel(SmartDesign::kS1).draw(n, nullptr, 1)).first;
  return it->second;
}

}  // namespace

static void BM_LeastSquares(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(n, 16);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(least_squares(x, y));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LeastSquares)->Arg(500)->Arg(5000);

static void BM_BackwardInduction(benchmark::State& state) {
  const Dataset& d = s1_data(500);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const auto r = StageRuleRegime::fixed({1, 0});
  for (auto _ : state) benchmark::DoNotOptimize(backward_induce(d, basis, EngineConfig{}, &r));
}
BENCHMARK(BM_BackwardInduction);

static void BM_PrioritizedFit(benchmark::State& state) {
  const Dataset& d = s1_data(500);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const CandidateClass cls{sample_simplex(static_cast<int>(state.range(0)), 3, 2), {0, 1}};
  const auto spec = DissimilaritySpec::absolute({0.1, 0.1, 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(fit_prioritized(d, basis, EngineConfig{}, cls, spec));
}
BENCHMARK(BM_PrioritizedFit)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_SelectionBatch(benchmark::State& state) {
  const Dataset& d = s1_data(500);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const auto regime = fit_prioritized(d, basis, EngineConfig{}, CandidateClass{sample_simplex(1000, 3, 2), {0, 1}},
                                      DissimilaritySpec::absolute({0.1, 0.1, 0.1}));
  const Dataset& test = s1_data(10000);
  std::vector<History> h1;
  for (std::size_t i = 0; i < test.size(); ++i) h1.push_back(test.history(i, 0));
  for (auto _ : state) benchmark::DoNotOptimize(regime->chosen_candidates(h1));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(h1.size()));
}
BENCHMARK(BM_SelectionBatch)->Unit(benchmark::kMillisecond);

static void BM_AipwValue(benchmark::State& state) {
  const Dataset& d = s1_data(500);
  const FeatureBasis basis = FeatureBasis::linear(d.layout());
  const auto r = StageRuleRegime::fixed({1, 0});
  const QModelStack stack = backward_induce(s1_data(1000), basis, EngineConfig{}, &r);
  for (auto _ : state) benchmark::DoNotOptimize(aipw_value(d, r, stack));
}
BENCHMARK(BM_AipwValue);

BENCHMARK_MAIN();
