#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "reckit/ensemble.hpp"
#include "reckit/errors.hpp"
#include "reckit/evaluate.hpp"
#include "support/synthetic.hpp"

using namespace reckit;

namespace {

TrainingData toy_training_data(Rng& rng, int n_users = 8, int n_items = 8, int n_obs = 40) {
  const auto dataset = RatingDataset::from_interactions(
      testsupport::random_dataset_fixed(rng, n_users, n_items, n_obs));
  return TrainingData::from_dataset(dataset);
}

TrainConfig fast_config(std::uint64_t seed = 1) {
  TrainConfig config;
  config.learning_rate = 0.02;
  config.lambda = 0.01;
  config.epochs = 25;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("weighted_combine basics") {
  CHECK(weighted_combine(std::vector<double>{4.2}, std::vector<double>{1.0}) == 4.2);
  CHECK(weighted_combine(std::vector<double>{2.0, 4.0}, std::vector<double>{0.5, 0.5}) == 3.0);
  const std::vector<double> predictions = {1.5, 2.5, 4.0};
  const std::vector<double> weights = {0.2, 0.3, 0.5};
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) expected += predictions[i] * weights[i];
  CHECK(weighted_combine(predictions, weights) == doctest::Approx(expected));
  CHECK_THROWS_AS(weighted_combine(predictions, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("normalize_weights and one-hot selection") {
  const auto normalized = normalize_weights(std::vector<double>{2.0, 6.0});
  CHECK(normalized[0] == doctest::Approx(0.25));
  CHECK(normalized[1] == doctest::Approx(0.75));
  CHECK_THROWS_AS(normalize_weights(std::vector<double>{0.0, 0.0}), InvalidConfig);
  CHECK_THROWS_AS(normalize_weights(std::vector<double>{-1.0, 2.0}), InvalidConfig);

  // a one-hot weight vector selects exactly that member
  const std::vector<double> predictions = {1.7, 3.9, 2.2};
  CHECK(weighted_combine(predictions, std::vector<double>{0.0, 1.0, 0.0}) == 3.9);
}

TEST_CASE("inverse_rmse_weights prefers the better member") {
  const auto weights = inverse_rmse_weights(std::vector<double>{0.5, 1.0});
  CHECK(weights[0] == doctest::Approx(2.0 / 3.0));
  CHECK(weights[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("hybrid_weighted endpoints and midpoint") {
  CHECK(hybrid_weighted(4.0, 1.0, 1.0) == 4.0);
  CHECK(hybrid_weighted(4.0, 1.0, 0.0) == 1.0);
  CHECK(hybrid_weighted(2.0, 4.0, 0.5) == 3.0);
  CHECK_THROWS_AS(hybrid_weighted(1.0, 1.0, 1.5), InvalidConfig);
  CHECK_THROWS_AS(hybrid_weighted(1.0, 1.0, -0.1), InvalidConfig);
}

TEST_CASE("bootstrap resample composition matches multiset expectations") {
  const std::size_t n = 500;
  Rng rng(7);
  const auto indices = bootstrap_indices(n, rng);
  CHECK(indices.size() == n);

  std::map<std::size_t, int> counts;
  for (std::size_t idx : indices) {
    CHECK(idx < n);
    ++counts[idx];
  }
  // distinct fraction ~ 1 - (1 - 1/n)^n ~ 0.632
  const double distinct = static_cast<double>(counts.size()) / static_cast<double>(n);
  const double expected = 1.0 - std::pow(1.0 - 1.0 / static_cast<double>(n), n);
  CHECK(std::abs(distinct - expected) < 0.08);
  bool any_repeat = false;
  for (const auto& [idx, count] : counts) any_repeat = any_repeat || count > 1;
  CHECK(any_repeat);
}

TEST_CASE("bagging with the identity resample equals the base model bitwise") {
  Rng rng(9);
  const auto data = toy_training_data(rng);
  const auto config = fast_config();

  std::vector<std::size_t> identity(data.observations.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  const std::vector<std::vector<std::size_t>> resamples = {identity};
  const auto ensemble = bagging_fit_resamples(data, 2, config, resamples);
  const auto base = mf_fit(data, 2, config);
  REQUIRE(ensemble.members.size() == 1);
  CHECK(ensemble.members[0] == base);
  for (int u = 0; u < data.n_users; ++u)
    for (int i = 0; i < data.n_items; ++i)
      CHECK(ensemble.predict(u, i) == mf_predict(base, u, i));
}

TEST_CASE("bagging members fed identical resamples predict like any single member") {
  Rng rng(11);
  const auto data = toy_training_data(rng);
  const auto config = fast_config();
  Rng resample_rng(55);
  const auto resample = bootstrap_indices(data.observations.size(), resample_rng);
  const std::vector<std::vector<std::size_t>> resamples = {resample, resample};
  const auto ensemble = bagging_fit_resamples(data, 2, config, resamples);
  for (int u = 0; u < data.n_users; ++u)
    for (int i = 0; i < data.n_items; ++i) {
      const double mean = ensemble.predict(u, i);
      const double single = mf_predict(ensemble.members[0], u, i);
      CHECK(mean == single);  // (p + p) / 2 is exact
    }
}

TEST_CASE("bagging propagates DivergenceError naming the member") {
  Rng rng(12);
  const auto data = toy_training_data(rng);
  TrainConfig config = fast_config();
  config.learning_rate = 80.0;  // forces divergence
  config.centering = Centering::kNone;
  try {
    bagging_fit(data, 2, config, 3, 4);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("member 0") != std::string::npos);
  }
}

TEST_CASE("bagging_fit is deterministic and members differ across resamples") {
  Rng rng(13);
  const auto data = toy_training_data(rng);
  const auto a = bagging_fit(data, 2, fast_config(), 3, 21);
  const auto b = bagging_fit(data, 2, fast_config(), 3, 21);
  REQUIRE(a.members.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) CHECK(a.members[m] == b.members[m]);
  CHECK(a.members[0].user_factors != a.members[1].user_factors);
}

TEST_CASE("boosting: one exact round drives training residuals to zero") {
  // Rank-1 target, so a single k=1 stage can fit the centered residual
  // matrix nearly exactly.
  TrainingData data;
  data.n_users = 2;
  data.n_items = 2;
  data.observations = {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 4.0}};
  TrainConfig config;
  config.learning_rate = 0.05;
  config.lambda = 0.0;
  config.epochs = 800;
  config.seed = 2;
  const auto ensemble = boosting_fit(data, 2, config, 1, 1.0);
  REQUIRE(ensemble.round_rmse.size() == 1);
  CHECK(ensemble.round_rmse[0] < 1e-2);
}

TEST_CASE("boosting training RMSE is non-increasing per round") {
  Rng rng(15);
  const auto data = toy_training_data(rng);
  TrainConfig config = fast_config(3);
  config.epochs = 40;
  const auto ensemble = boosting_fit(data, 2, config, 6, 0.5);
  REQUIRE(ensemble.round_rmse.size() == 6);
  for (std::size_t r = 1; r < ensemble.round_rmse.size(); ++r)
    CHECK(ensemble.round_rmse[r] <= ensemble.round_rmse[r - 1] + 1e-9);
}

TEST_CASE("boosting with shrinkage 1 drives the training residual toward zero") {
  TrainingData data;
  data.n_users = 4;
  data.n_items = 4;
  Rng rng(14);
  for (int u = 0; u < 4; ++u)
    for (int i = 0; i < 4; ++i)
      data.observations.push_back({u, i, 2.0 + 0.3 * u + 0.2 * i + 0.1 * rng.uniform()});
  TrainConfig config;
  config.learning_rate = 0.03;
  config.lambda = 0.0;
  config.epochs = 600;
  config.seed = 2;
  config.init_scale = 0.02;  // keep stage init noise below the residual floor
  const auto ensemble = boosting_fit(data, 2, config, 10, 1.0);
  for (std::size_t r = 1; r < ensemble.round_rmse.size(); ++r)
    CHECK(ensemble.round_rmse[r] <= ensemble.round_rmse[r - 1] + 1e-9);
  CHECK(ensemble.round_rmse.back() < 0.02);
}

TEST_CASE("boosting validates its config") {
  Rng rng(17);
  const auto data = toy_training_data(rng);
  CHECK_THROWS_AS(boosting_fit(data, 2, fast_config(), 0, 0.5), InvalidConfig);
  CHECK_THROWS_AS(boosting_fit(data, 2, fast_config(), 3, 0.0), InvalidConfig);
  CHECK_THROWS_AS(boosting_fit(data, 2, fast_config(), 3, 1.5), InvalidConfig);
}

namespace {

TrainerFn constant_trainer(double value) {
  return [value](const TrainingData&) -> PredictFn {
    return [value](int, int) { return value; };
  };
}

}  // namespace

TEST_CASE("stacking with two identical bases reproduces the base prediction") {
  // Identical bases leave the meta-model a single effective coefficient to
  // split; with bases that actually fit the targets the stacked prediction
  // must match the base to 1e-8.
  TrainingData data;
  data.n_users = 9;
  data.n_items = 9;
  for (int u = 0; u < 9; ++u)
    for (int i = 0; i < 9; ++i) data.observations.push_back({u, i, 1.0 + 0.2 * u + 0.15 * i});
  const TrainerFn exact = [](const TrainingData&) -> PredictFn {
    return [](int u, int i) { return 1.0 + 0.2 * u + 0.15 * i; };
  };
  const std::vector<TrainerFn> bases = {exact, exact};
  const auto ensemble = stacking_fit(data, bases, 31, 4, 1e-8);

  // the single effective coefficient is split across the twins
  CHECK(ensemble.meta.weights[0] + ensemble.meta.weights[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ensemble.meta.weights[0] == doctest::Approx(ensemble.meta.weights[1]).epsilon(1e-6));

  const auto base = bases[0](data);
  for (int u = 0; u < data.n_users; ++u)
    for (int i = 0; i < data.n_items; ++i)
      CHECK(ensemble.predict(u, i) == doctest::Approx(base(u, i)).epsilon(1e-8));
}

TEST_CASE("stacking concentrates weight on a perfect base over a constant one") {
  // Ground truth is a linear function of (u, i); the perfect base knows it.
  TrainingData data;
  data.n_users = 10;
  data.n_items = 10;
  for (int u = 0; u < 10; ++u)
    for (int i = 0; i < 10; ++i)
      data.observations.push_back({u, i, 1.0 + 0.2 * u + 0.15 * i});

  const TrainerFn perfect = [](const TrainingData&) -> PredictFn {
    return [](int u, int i) { return 1.0 + 0.2 * u + 0.15 * i; };
  };
  const std::vector<TrainerFn> bases = {perfect, constant_trainer(2.0)};
  const auto ensemble = stacking_fit(data, bases, 37, 5, 1e-8);

  double sq = 0.0;
  for (const auto& obs : data.observations) {
    const double e = ensemble.predict(obs.user, obs.item) - obs.value;
    sq += e * e;
  }
  const double rmse = std::sqrt(sq / static_cast<double>(data.observations.size()));
  CHECK(rmse <= 1e-6);
  CHECK(std::abs(ensemble.meta.weights[0]) > 0.9);   // perfect base dominates
  CHECK(std::abs(ensemble.meta.weights[1]) < 0.1);
}

TEST_CASE("stacking meta-features are out-of-fold (leakage check)") {
  Rng rng(23);
  const auto data = toy_training_data(rng, 6, 6, 33);
  const int n_folds = 3;

  // A trainer whose prediction reveals its training set: it returns the
  // number of observations it saw. In-fold leakage would make every
  // meta-feature equal the full-data count.
  const TrainerFn counting = [](const TrainingData& seen) -> PredictFn {
    const double count = static_cast<double>(seen.observations.size());
    return [count](int, int) { return count; };
  };
  const std::vector<TrainerFn> bases = {counting, constant_trainer(1.0)};
  const auto ensemble = stacking_fit(data, bases, 41, n_folds, 1e-8);

  const double full_count = static_cast<double>(data.observations.size());
  std::map<int, std::size_t> fold_sizes;
  for (int fold : ensemble.fold_of) ++fold_sizes[fold];
  for (std::size_t r = 0; r < data.observations.size(); ++r) {
    const double feature = ensemble.meta_features.at(static_cast<int>(r), 0);
    const double complement_size =
        full_count - static_cast<double>(fold_sizes[ensemble.fold_of[static_cast<std::size_t>(r)]]);
    CHECK(feature == complement_size);  // trained without row r's fold
    CHECK(feature != full_count);
  }
}

TEST_CASE("stacking requires at least two bases") {
  Rng rng(29);
  const auto data = toy_training_data(rng);
  const std::vector<TrainerFn> one = {constant_trainer(1.0)};
  CHECK_THROWS_AS(stacking_fit(data, one, 1, 3, 1e-8), InvalidConfig);
}

TEST_CASE("affine consistency: equal member predictions propagate through every scheme") {
  Rng rng(31);
  const auto data = toy_training_data(rng, 6, 6, 33);
  const auto config = fast_config(5);
  const auto base = mf_fit(data, 2, config);

  for (int u = 0; u < data.n_users; ++u) {
    for (int i = 0; i < data.n_items; ++i) {
      const double p = mf_predict(base, u, i);
      // weighted with dyadic weights is exact
      CHECK(weighted_combine(std::vector<double>{p, p}, std::vector<double>{0.5, 0.5}) == p);
      CHECK(hybrid_weighted(p, p, 0.5) == p);
    }
  }

  // bagging mean of identical members is exact
  std::vector<std::size_t> identity(data.observations.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  const std::vector<std::vector<std::size_t>> resamples = {identity, identity};
  const auto bagged = bagging_fit_resamples(data, 2, config, resamples);
  for (int u = 0; u < data.n_users; ++u)
    for (int i = 0; i < data.n_items; ++i)
      CHECK(bagged.predict(u, i) == mf_predict(base, u, i));
}

TEST_CASE("top-k ranking from a weighted ensemble is invariant under weight rescaling") {
  Rng rng(37);
  const auto data = toy_training_data(rng, 8, 10, 50);
  const auto model_a = mf_fit(data, 2, fast_config(6));
  const auto model_b = mf_fit(data, 3, fast_config(7));

  const std::vector<double> weights = {0.3, 0.7};
  const std::vector<double> rescaled = {3.0, 7.0};  // same direction, unnormalized
  for (int u = 0; u < data.n_users; ++u) {
    std::vector<ScoredItem> scores_w;
    std::vector<ScoredItem> scores_r;
    for (int i = 0; i < data.n_items; ++i) {
      const std::vector<double> predictions = {mf_predict(model_a, u, i),
                                               mf_predict(model_b, u, i)};
      scores_w.push_back({i, weighted_combine(predictions, weights)});
      scores_r.push_back({i, weighted_combine(predictions, rescaled)});
    }
    const auto list_w = top_k(scores_w, 5);
    const auto list_r = top_k(scores_r, 5);
    REQUIRE(list_w.items.size() == list_r.items.size());
    for (std::size_t p = 0; p < list_w.items.size(); ++p)
      CHECK(list_w.items[p].item == list_r.items[p].item);
  }
}
