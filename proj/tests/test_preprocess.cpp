#include <doctest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "reckit/errors.hpp"
#include "reckit/preprocess.hpp"
#include "reckit/random.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace reckit;

TEST_CASE("min-max fit and apply") {
  const std::vector<double> sample = {2.0, 4.0, 6.0};
  const auto params = fit_normalizer(sample, NormMethod::kMinMax);
  const auto& mm = std::get<MinMaxParams>(params);
  CHECK(mm.min == 2.0);
  CHECK(mm.max == 6.0);
  CHECK(apply_normalizer(params, 4.0) == 0.5);
  CHECK(apply_normalizer(params, 2.0) == 0.0);
  CHECK(apply_normalizer(params, 6.0) == 1.0);
}

TEST_CASE("z-score on a constant sample is degenerate") {
  const std::vector<double> sample = {2.0, 2.0, 2.0};
  CHECK_THROWS_AS(fit_normalizer(sample, NormMethod::kZScore), DegenerateScale);
}

TEST_CASE("z-score maps its own mean to zero") {
  const std::vector<double> sample = {1.0, 2.0, 3.0};
  const auto params = fit_normalizer(sample, NormMethod::kZScore);
  CHECK(apply_normalizer(params, 2.0) == 0.0);
}

TEST_CASE("robust scaling quartiles use linear interpolation") {
  const std::vector<double> sample = {1.0, 2.0, 3.0, 4.0, 100.0};
  const auto params = fit_normalizer(sample, NormMethod::kRobust);
  const auto& robust = std::get<RobustParams>(params);
  CHECK(robust.median == doctest::Approx(3.0));
  const double iqr_oracle =
      oracle::percentile(sample, 0.75) - oracle::percentile(sample, 0.25);
  CHECK(robust.iqr == doctest::Approx(iqr_oracle).epsilon(1e-12));

  // A second sample with fractional quartile positions.
  Rng rng(5);
  for (int round = 0; round < 20; ++round) {
    std::vector<double> values;
    const int n = 3 + static_cast<int>(rng.uniform_int(20));
    for (int i = 0; i < n; ++i) values.push_back(rng.uniform(-10.0, 10.0));
    try {
      const auto fitted = fit_normalizer(values, NormMethod::kRobust);
      const auto& p = std::get<RobustParams>(fitted);
      CHECK(p.median == doctest::Approx(oracle::percentile(values, 0.5)).epsilon(1e-12));
      CHECK(p.iqr == doctest::Approx(oracle::percentile(values, 0.75) -
                                     oracle::percentile(values, 0.25))
                         .epsilon(1e-12));
    } catch (const DegenerateScale&) {
    }
  }
}

TEST_CASE("log transform") {
  const std::vector<double> sample = {1.0, 10.0, 100.0};
  const auto params = fit_normalizer(sample, NormMethod::kLog, 10.0);
  CHECK(apply_normalizer(params, 100.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(apply_normalizer(params, -1.0), DomainError);
  const std::vector<double> bad = {1.0, 0.0};
  CHECK_THROWS_AS(fit_normalizer(bad, NormMethod::kLog), DomainError);
}

TEST_CASE("min-max stays in [0,1] on in-range input; z-score renormalizes its sample") {
  Rng rng(17);
  for (int round = 0; round < 30; ++round) {
    std::vector<double> values;
    const int n = 2 + static_cast<int>(rng.uniform_int(40));
    for (int i = 0; i < n; ++i) values.push_back(rng.uniform(-50.0, 50.0));
    NormalizationParams minmax;
    NormalizationParams zscore;
    try {
      minmax = fit_normalizer(values, NormMethod::kMinMax);
      zscore = fit_normalizer(values, NormMethod::kZScore);
    } catch (const DegenerateScale&) {
      continue;
    }
    double mean = 0.0;
    for (double v : values) {
      const double scaled = apply_normalizer(minmax, v);
      CHECK(scaled >= 0.0);
      CHECK(scaled <= 1.0);
      mean += apply_normalizer(zscore, v);
    }
    mean /= static_cast<double>(values.size());
    CHECK(std::abs(mean) <= 1e-12);
    double var = 0.0;
    for (double v : values) {
      const double z = apply_normalizer(zscore, v) - mean;
      var += z * z;
    }
    CHECK(std::abs(std::sqrt(var / static_cast<double>(values.size())) - 1.0) <= 1e-12);
  }
}

TEST_CASE("apply then invert recovers x for the affine methods") {
  Rng rng(23);
  const std::vector<double> sample = {3.0, 1.0, 4.0, 1.5, 9.0, 2.6};
  for (const auto method : {NormMethod::kMinMax, NormMethod::kZScore, NormMethod::kRobust}) {
    const auto params = fit_normalizer(sample, method);
    for (int round = 0; round < 100; ++round) {
      const double x = rng.uniform(1.0, 9.0);
      CHECK(invert_normalizer(params, apply_normalizer(params, x)) ==
            doctest::Approx(x).epsilon(1e-12));
    }
  }
}

TEST_CASE("per_axis_center user rows") {
  const auto dataset = RatingDataset::from_interactions({
      {1, 1, 3.0, 0},
      {1, 2, 5.0, 0},
      {2, 1, 4.0, 0},
  });
  const auto matrix = SparseRatingMatrix::build(dataset);
  const auto centered = per_axis_center(matrix, Axis::kUser);
  CHECK(centered.means[0] == 4.0);
  CHECK(centered.means[1] == 4.0);
  CHECK(centered.matrix.at(0, 0) == -1.0);
  CHECK(centered.matrix.at(0, 1) == 1.0);
  CHECK(centered.matrix.at(1, 0) == 0.0);  // single-entry row centers to zero
}

TEST_CASE("per_axis_center row sums vanish and de-center restores the matrix") {
  Rng rng(29);
  for (int round = 0; round < 20; ++round) {
    const auto interactions = testsupport::random_dataset(rng, 5, 5, 1, 20);
    const auto matrix =
        SparseRatingMatrix::build(RatingDataset::from_interactions(interactions));
    for (const auto axis : {Axis::kUser, Axis::kItem}) {
      const auto centered = per_axis_center(matrix, axis);
      const int n = axis == Axis::kUser ? matrix.n_users() : matrix.n_items();
      for (int a = 0; a < n; ++a) {
        double sum = 0.0;
        const auto entries =
            axis == Axis::kUser ? centered.matrix.row(a) : centered.matrix.col(a);
        for (const auto& entry : entries) sum += entry.value;
        CHECK(std::abs(sum) <= 1e-12);
      }
      const auto restored = de_center(centered);
      REQUIRE(restored.nnz() == matrix.nnz());
      for (int u = 0; u < matrix.n_users(); ++u)
        for (const auto& entry : matrix.row(u))
          CHECK(*restored.at(u, entry.index) == doctest::Approx(entry.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("one_hot_encode") {
  const std::vector<std::string> vocab = {"a", "b", "c"};
  CHECK(one_hot_encode("b", vocab) == std::vector<double>{0.0, 1.0, 0.0});
  const std::vector<std::string> single = {"only"};
  CHECK(one_hot_encode("only", single) == std::vector<double>{1.0});
  CHECK_THROWS_AS(one_hot_encode("z", vocab), UnknownCategory);
}

TEST_CASE("derive_user_features") {
  const auto dataset = RatingDataset::from_interactions({
      {7, 1, 4.0, 100},
      {7, 2, 5.0, 50},
      {9, 1, 2.0, 77},
  });
  const auto features = derive_user_features(dataset);
  REQUIRE(features.size() == 2);
  CHECK(features[0].mean_rating == 4.5);
  CHECK(features[0].rating_count == 2);
  CHECK(features[0].last_activity == 100);
  CHECK(features[1].mean_rating == 2.0);
  CHECK(features[1].last_activity == 77);
}

TEST_CASE("derive_user_features count matches a line-filter oracle on the synthetic file") {
  const auto interactions = testsupport::synthetic_ml100k(42);
  const auto dataset = RatingDataset::from_interactions(interactions);
  const auto features = derive_user_features(dataset);

  std::size_t grep_count = 0;  // count user 196's interactions directly
  for (const auto& interaction : interactions)
    if (interaction.user_id == 196) ++grep_count;
  const auto dense = dataset.users().dense(196);
  REQUIRE(dense.has_value());
  CHECK(features[static_cast<std::size_t>(*dense)].rating_count == grep_count);
}
