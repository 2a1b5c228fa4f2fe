#include <benchmark/benchmark.h>

#include <vector>

#include "reckit/evaluate.hpp"
#include "reckit/random.hpp"

namespace {

void AucRoc(benchmark::State& state) {
  reckit::Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<bool> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.uniform() < 0.5;
  }
  for (auto _ : state) benchmark::DoNotOptimize(reckit::auc_roc(scores, labels));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(AucRoc)->Range(1024, 1 << 16)->Complexity();

void MeanAveragePrecision(benchmark::State& state) {
  reckit::Rng rng(7);
  std::vector<reckit::UserJudgments> users(500);
  for (auto& judgments : users) {
    judgments.relevance.resize(50);
    for (std::size_t p = 0; p < 50; ++p) {
      judgments.relevance[p] = rng.uniform() < 0.3;
      judgments.total_relevant += judgments.relevance[p] ? 1 : 0;
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(reckit::mean_average_precision(users));
}
BENCHMARK(MeanAveragePrecision);

}  // namespace
