#include <benchmark/benchmark.h>

#include "reckit/factor.hpp"
#include "reckit/random.hpp"

namespace {

reckit::TrainingData make_data(int n_users, int n_items, std::size_t n_obs) {
  reckit::Rng rng(12);
  reckit::TrainingData data;
  data.n_users = n_users;
  data.n_items = n_items;
  data.scale = reckit::RatingScale{1.0, 5.0};
  data.observations.reserve(n_obs);
  for (std::size_t i = 0; i < n_obs; ++i) {
    data.observations.push_back(
        {static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_users))),
         static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_items))),
         static_cast<double>(1 + rng.uniform_int(5))});
  }
  return data;
}

void MfSgdEpochs(benchmark::State& state) {
  const auto data = make_data(500, 800, 20000);
  reckit::TrainConfig config;
  config.epochs = static_cast<int>(state.range(0));
  config.seed = 3;
  for (auto _ : state) {
    auto model = reckit::mf_fit(data, 16, config);
    benchmark::DoNotOptimize(model.user_factors.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) *
                          static_cast<std::int64_t>(data.observations.size()));
}
BENCHMARK(MfSgdEpochs)->Arg(1)->Arg(4);

void MfAlsSweeps(benchmark::State& state) {
  const auto data = make_data(300, 400, 12000);
  reckit::TrainConfig config;
  config.optimizer = reckit::Optimizer::kAls;
  config.lambda = 0.1;
  config.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto model = reckit::mf_fit(data, 8, config);
    benchmark::DoNotOptimize(model.user_factors.data());
  }
}
BENCHMARK(MfAlsSweeps)->Arg(1)->Arg(2);

void FmSgdEpoch(benchmark::State& state) {
  const auto data = make_data(400, 500, 15000);
  reckit::TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) {
    auto model = reckit::fm_fit(data, 8, config);
    benchmark::DoNotOptimize(model.v.data());
  }
}
BENCHMARK(FmSgdEpoch);

}  // namespace
