#include <benchmark/benchmark.h>

#include <tuple>
#include <vector>

#include "reckit/random.hpp"
#include "reckit/similarity.hpp"

namespace {

reckit::SparseRatingMatrix make_matrix(int n_users, int n_items, std::size_t n_obs) {
  reckit::Rng rng(9);
  std::vector<std::tuple<int, int, double>> triples;
  triples.reserve(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i)
    triples.emplace_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_users))),
                         static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_items))),
                         static_cast<double>(1 + rng.uniform_int(5)));
  return reckit::SparseRatingMatrix::from_triples(n_users, n_items, triples);
}

void KnnFit(benchmark::State& state) {
  const auto matrix = make_matrix(static_cast<int>(state.range(0)), 600, 15000);
  for (auto _ : state) {
    auto model = reckit::knn_fit(matrix, reckit::Axis::kUser, 30);
    benchmark::DoNotOptimize(model.neighbors.data());
  }
}
BENCHMARK(KnnFit)->Arg(200)->Arg(400);

void KnnPredictSweep(benchmark::State& state) {
  const auto matrix = make_matrix(300, 500, 12000);
  const auto model = reckit::knn_fit(matrix, reckit::Axis::kItem, 30);
  for (auto _ : state) {
    double sum = 0.0;
    for (int u = 0; u < 300; ++u) sum += reckit::knn_predict(model, u, u % 500);
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(KnnPredictSweep);

}  // namespace
