#include "reckit/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "reckit/errors.hpp"
#include "reckit/random.hpp"

namespace reckit {

namespace {

RatingDataset subset(const RatingDataset& dataset, const std::vector<std::size_t>& indices) {
  std::vector<std::size_t> ordered = indices;
  std::sort(ordered.begin(), ordered.end());  // keep original interaction order
  std::vector<Interaction> interactions;
  interactions.reserve(ordered.size());
  for (std::size_t idx : ordered) interactions.push_back(dataset.interactions()[idx]);
  return RatingDataset::from_interactions(std::move(interactions), dataset.scale());
}

std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

}  // namespace

std::string split_strategy_name(SplitStrategy strategy) {
  switch (strategy) {
    case SplitStrategy::kTrainTest: return "train_test";
    case SplitStrategy::kTime: return "time";
    case SplitStrategy::kKFold: return "kfold";
    case SplitStrategy::kStratified: return "stratified";
  }
  return "unknown";
}

SplitResult train_test_split(const RatingDataset& dataset, double test_fraction,
                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidFraction("test fraction must lie in (0, 1)");
  if (dataset.size() < 2) throw EmptyDataset("train_test_split needs at least 2 interactions");

  std::vector<std::size_t> indices(dataset.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(derive_seed(seed, "train_test_split"));
  rng.shuffle(indices);

  const std::size_t n_test = rounded_count(test_fraction, dataset.size());
  std::vector<std::size_t> test_idx(indices.begin(), indices.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> train_idx(indices.begin() + static_cast<long>(n_test), indices.end());

  SplitResult result;
  result.train = subset(dataset, train_idx);
  result.test = subset(dataset, test_idx);
  result.seed = seed;
  result.strategy = SplitStrategy::kTrainTest;
  return result;
}

SplitResult time_split(const RatingDataset& dataset, std::int64_t cutoff_ts) {
  if (dataset.empty()) throw EmptyDataset("time_split of an empty dataset");
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.interactions()[i].timestamp < cutoff_ts)
      train_idx.push_back(i);
    else
      test_idx.push_back(i);
  }
  SplitResult result;
  result.train = subset(dataset, train_idx);
  result.test = subset(dataset, test_idx);
  result.strategy = SplitStrategy::kTime;
  if (train_idx.empty()) result.warning = "cutoff precedes every timestamp; train is empty";
  if (test_idx.empty()) result.warning = "cutoff exceeds every timestamp; test is empty";
  return result;
}

std::vector<SplitResult> kfold(const RatingDataset& dataset, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > dataset.size())
    throw InvalidK("kfold requires 2 <= k <= N");

  std::vector<std::size_t> indices(dataset.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(derive_seed(seed, "kfold"));
  rng.shuffle(indices);

  // First (N mod k) folds take one extra element.
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const std::size_t base = dataset.size() / static_cast<std::size_t>(k);
  const std::size_t extras = dataset.size() % static_cast<std::size_t>(k);
  std::size_t cursor = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t take = base + (f < extras ? 1 : 0);
    folds[f].assign(indices.begin() + static_cast<long>(cursor),
                    indices.begin() + static_cast<long>(cursor + take));
    cursor += take;
  }

  std::vector<SplitResult> results;
  results.reserve(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_idx;
    train_idx.reserve(dataset.size() - folds[f].size());
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    SplitResult result;
    result.train = subset(dataset, train_idx);
    result.test = subset(dataset, folds[f]);
    result.seed = seed;
    result.strategy = SplitStrategy::kKFold;
    results.push_back(std::move(result));
  }
  return results;
}

SplitResult stratified_split(const RatingDataset& dataset, double test_fraction,
                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw InvalidFraction("test fraction must lie in (0, 1)");
  if (dataset.size() < 2) throw EmptyDataset("stratified_split needs at least 2 interactions");

  std::map<std::int64_t, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_user[dataset.interactions()[i].user_id].push_back(i);

  Rng rng(derive_seed(seed, "stratified_split"));
  std::vector<bool> in_test(dataset.size(), false);
  for (auto& [user, indices] : by_user) {
    rng.shuffle(indices);
    std::size_t n_test = rounded_count(test_fraction, indices.size());
    // Coverage rule: a user with >= 2 interactions keeps at least one in
    // train; a single-interaction user goes entirely to train.
    if (indices.size() == 1)
      n_test = 0;
    else
      n_test = std::min(n_test, indices.size() - 1);
    for (std::size_t t = 0; t < n_test; ++t) in_test[indices[t]] = true;
  }

  // Greedy item-coverage repair: move one interaction of any test-only
  // multi-interaction item back into train.
  std::map<std::int64_t, std::vector<std::size_t>> by_item;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_item[dataset.interactions()[i].item_id].push_back(i);
  for (const auto& [item, indices] : by_item) {
    if (indices.size() < 2) continue;
    bool in_train = false;
    for (std::size_t idx : indices) in_train = in_train || !in_test[idx];
    if (!in_train) in_test[indices.front()] = false;
  }

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (in_test[i] ? test_idx : train_idx).push_back(i);

  SplitResult result;
  result.train = subset(dataset, train_idx);
  result.test = subset(dataset, test_idx);
  result.seed = seed;
  result.strategy = SplitStrategy::kStratified;
  return result;
}

SplitResult carve_validation(SplitResult split, double val_fraction, std::uint64_t seed) {
  if (split.validation.has_value())
    throw AlreadyCarved("split already carries a validation set");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw InvalidFraction("validation fraction must lie in (0, 1)");

  const std::size_t n_train = split.train.size();
  const std::size_t n_val = rounded_count(val_fraction, n_train);
  if (n_val == 0) throw InvalidFraction("validation carve would be empty");
  if (n_val >= n_train) throw InvalidFraction("validation carve would consume all of train");

  std::vector<std::size_t> indices(n_train);
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  Rng rng(derive_seed(seed, "carve_validation"));
  rng.shuffle(indices);

  std::vector<std::size_t> val_idx(indices.begin(), indices.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train_idx(indices.begin() + static_cast<long>(n_val), indices.end());

  const RatingDataset original_train = split.train;
  split.validation = subset(original_train, val_idx);
  split.train = subset(original_train, train_idx);
  return split;
}

}  // namespace reckit
