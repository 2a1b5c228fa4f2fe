#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "reckit/errors.hpp"
#include "reckit/ingest.hpp"
#include "reckit/random.hpp"
#include "reckit/split.hpp"
#include "support/synthetic.hpp"

using namespace reckit;

namespace {

using Key = std::pair<std::int64_t, std::int64_t>;

std::set<Key> keys_of(const RatingDataset& dataset) {
  std::set<Key> keys;
  for (const auto& interaction : dataset.interactions())
    keys.insert({interaction.user_id, interaction.item_id});
  return keys;
}

void check_partition(const RatingDataset& input, const SplitResult& split) {
  auto train = keys_of(split.train);
  auto test = keys_of(split.test);
  std::set<Key> all = train;
  all.insert(test.begin(), test.end());
  if (split.validation.has_value()) {
    const auto val = keys_of(*split.validation);
    for (const auto& key : val) {
      CHECK(!train.contains(key));
      CHECK(!test.contains(key));
    }
    all.insert(val.begin(), val.end());
    CHECK(split.train.size() + split.test.size() + split.validation->size() == input.size());
  } else {
    CHECK(split.train.size() + split.test.size() == input.size());
  }
  for (const auto& key : test) CHECK(!train.contains(key));
  CHECK(all == keys_of(input));
}

RatingDataset sequential_dataset(int n) {
  std::vector<Interaction> interactions;
  for (int i = 0; i < n; ++i)
    interactions.push_back({i / 10, i % 10 + 100, 3.0, static_cast<std::int64_t>(i)});
  return RatingDataset::from_interactions(interactions);
}

}  // namespace

TEST_CASE("train_test_split sizes follow round(fraction * N)") {
  const auto dataset = sequential_dataset(100);
  const auto split = train_test_split(dataset, 0.2, 1);
  CHECK(split.test.size() == 20);
  CHECK(split.train.size() == 80);

  const auto tiny = sequential_dataset(2);
  const auto half = train_test_split(tiny, 0.5, 1);
  CHECK(half.test.size() == 1);
  CHECK(half.train.size() == 1);
}

TEST_CASE("train_test_split validates the fraction") {
  const auto dataset = sequential_dataset(10);
  CHECK_THROWS_AS(train_test_split(dataset, 0.0, 1), InvalidFraction);
  CHECK_THROWS_AS(train_test_split(dataset, 1.0, 1), InvalidFraction);
  CHECK_THROWS_AS(train_test_split(dataset, -0.1, 1), InvalidFraction);
}

TEST_CASE("train_test_split is seed-deterministic and seed-sensitive") {
  const auto dataset = sequential_dataset(60);
  const auto a = train_test_split(dataset, 0.25, 7);
  const auto b = train_test_split(dataset, 0.25, 7);
  CHECK(keys_of(a.test) == keys_of(b.test));
  const auto c = train_test_split(dataset, 0.25, 8);
  CHECK(keys_of(a.test) != keys_of(c.test));  // overwhelming probability
}

TEST_CASE("time_split boundary: test takes ts >= cutoff") {
  const auto dataset = RatingDataset::from_interactions({
      {1, 1, 3.0, 1},
      {1, 2, 3.0, 2},
      {1, 3, 3.0, 3},
  });
  const auto split = time_split(dataset, 3);
  CHECK(split.train.size() == 2);
  CHECK(split.test.size() == 1);
  CHECK(split.test.interactions()[0].timestamp == 3);
  CHECK(split.warning.empty());
}

TEST_CASE("time_split warns on a cutoff outside the range") {
  const auto dataset = sequential_dataset(5);
  const auto split = time_split(dataset, -100);
  CHECK(split.train.empty());
  CHECK(split.test.size() == 5);
  CHECK(!split.warning.empty());
}

TEST_CASE("time_split on the synthetic file: median cutoff balances halves within 1%") {
  const auto interactions = testsupport::synthetic_ml100k(42);
  std::vector<std::int64_t> stamps;
  stamps.reserve(interactions.size());
  for (const auto& interaction : interactions) stamps.push_back(interaction.timestamp);
  std::sort(stamps.begin(), stamps.end());
  const std::int64_t cutoff = stamps[stamps.size() / 2];

  // independent counting oracle
  std::size_t below = 0;
  for (const auto& interaction : interactions)
    if (interaction.timestamp < cutoff) ++below;

  const auto dataset = RatingDataset::from_interactions(interactions);
  const auto split = time_split(dataset, cutoff);
  CHECK(split.train.size() == below);
  CHECK(std::abs(static_cast<double>(split.train.size()) -
                 static_cast<double>(split.test.size())) /
            static_cast<double>(dataset.size()) <=
        0.01);
}

TEST_CASE("kfold partitions with fold sizes differing by at most one") {
  const auto dataset = sequential_dataset(10);
  const auto folds = kfold(dataset, 5, 3);
  REQUIRE(folds.size() == 5);
  std::set<Key> seen;
  for (const auto& fold : folds) {
    CHECK(fold.test.size() == 2);
    CHECK(fold.train.size() == 8);
    check_partition(dataset, fold);
    for (const auto& key : keys_of(fold.test)) CHECK(seen.insert(key).second);
  }
  CHECK(seen == keys_of(dataset));
}

TEST_CASE("kfold leave-one-out and bounds") {
  const auto dataset = sequential_dataset(6);
  const auto folds = kfold(dataset, 6, 1);
  for (const auto& fold : folds) CHECK(fold.test.size() == 1);
  CHECK_THROWS_AS(kfold(dataset, 7, 1), InvalidK);
  CHECK_THROWS_AS(kfold(dataset, 1, 1), InvalidK);
}

TEST_CASE("stratified_split per-user proportions and coverage") {
  std::vector<Interaction> interactions;
  for (int i = 0; i < 5; ++i) interactions.push_back({1, 100 + i, 3.0, i});
  interactions.push_back({2, 100, 4.0, 10});
  const auto dataset = RatingDataset::from_interactions(interactions);
  const auto split = stratified_split(dataset, 0.2, 5);

  std::size_t user1_test = 0;
  for (const auto& interaction : split.test.interactions())
    if (interaction.user_id == 1) ++user1_test;
  CHECK(user1_test == 1);
  // the single-interaction user stays in train
  for (const auto& interaction : split.test.interactions()) CHECK(interaction.user_id != 2);
  check_partition(dataset, split);
}

TEST_CASE("carve_validation draws from train only") {
  const auto dataset = sequential_dataset(100);
  auto split = train_test_split(dataset, 0.2, 11);
  const auto test_before = keys_of(split.test);

  const auto carved = carve_validation(split, 0.125, 13);
  REQUIRE(carved.validation.has_value());
  CHECK(carved.validation->size() == 10);
  CHECK(carved.train.size() == 70);
  CHECK(keys_of(carved.test) == test_before);
  check_partition(dataset, carved);

  CHECK_THROWS_AS(carve_validation(carved, 0.1, 13), AlreadyCarved);
  CHECK_THROWS_AS(carve_validation(train_test_split(dataset, 0.2, 11), 0.001, 13),
                  InvalidFraction);
}

TEST_CASE("all strategies: partition invariants on random datasets") {
  Rng rng(41);
  for (int round = 0; round < 60; ++round) {
    const auto interactions = testsupport::random_dataset(rng, 10, 12, 4, 80);
    const auto dataset = RatingDataset::from_interactions(interactions);

    const auto random_split = train_test_split(dataset, 0.3, round);
    check_partition(dataset, random_split);
    CHECK(random_split.test.size() ==
          static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(dataset.size()))));

    const auto strat = stratified_split(dataset, 0.3, round);
    check_partition(dataset, strat);
    // no user with >= 2 interactions is absent from train
    std::map<std::int64_t, std::size_t> user_counts;
    for (const auto& interaction : dataset.interactions()) ++user_counts[interaction.user_id];
    std::set<std::int64_t> train_users;
    for (const auto& interaction : strat.train.interactions())
      train_users.insert(interaction.user_id);
    for (const auto& [user, count] : user_counts)
      if (count >= 2) CHECK(train_users.contains(user));
    // multi-interaction items likewise
    std::map<std::int64_t, std::size_t> item_counts;
    for (const auto& interaction : dataset.interactions()) ++item_counts[interaction.item_id];
    std::set<std::int64_t> train_items;
    for (const auto& interaction : strat.train.interactions())
      train_items.insert(interaction.item_id);
    for (const auto& [item, count] : item_counts)
      if (count >= 2) CHECK(train_items.contains(item));

    if (dataset.size() >= 4) {
      for (const auto& fold : kfold(dataset, 4, round)) check_partition(dataset, fold);
    }

    const std::int64_t cutoff = dataset.interactions()[dataset.size() / 2].timestamp;
    check_partition(dataset, time_split(dataset, cutoff));

    // determinism across repeated runs
    const auto again = stratified_split(dataset, 0.3, round);
    CHECK(keys_of(again.test) == keys_of(strat.test));
  }
}

TEST_CASE("carve_validation keeps the test set byte-identical") {
  const auto dataset = sequential_dataset(64);
  auto split = train_test_split(dataset, 0.25, 2);
  std::ostringstream before;
  write_ratings(split.test, before);
  const auto carved = carve_validation(split, 0.25, 9);
  std::ostringstream after;
  write_ratings(carved.test, after);
  CHECK(before.str() == after.str());
}
