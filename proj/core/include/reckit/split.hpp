#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reckit/types.hpp"

namespace reckit {

enum class SplitStrategy { kTrainTest, kTime, kKFold, kStratified };

std::string split_strategy_name(SplitStrategy strategy);

/// A train/test partition of a dataset, optionally with a validation carve.
/// The parts are pairwise disjoint on (user, item) keys and their union is
/// the input.
struct SplitResult {
  RatingDataset train;
  RatingDataset test;
  std::optional<RatingDataset> validation;
  std::uint64_t seed = 0;
  SplitStrategy strategy = SplitStrategy::kTrainTest;
  std::string warning;  // set for degenerate time cutoffs, empty otherwise
};

/// Uniform random split with |test| = round(test_fraction * N).
/// Deterministic for a fixed seed. Throws InvalidFraction outside (0,1)
/// and EmptyDataset for datasets smaller than 2.
SplitResult train_test_split(const RatingDataset& dataset, double test_fraction,
                             std::uint64_t seed);

/// Chronological split: train takes ts < cutoff, test takes ts >= cutoff.
/// A cutoff outside the timestamp range leaves one side empty and sets a
/// warning instead of failing.
SplitResult time_split(const RatingDataset& dataset, std::int64_t cutoff_ts);

/// k folds of sizes differing by at most one; each fold is the test set of
/// exactly one result. Throws InvalidK unless 2 <= k <= N.
std::vector<SplitResult> kfold(const RatingDataset& dataset, int k, std::uint64_t seed);

/// Per-user split at test_fraction with two repairs: every user with >= 2
/// interactions keeps at least one in train, and any multi-interaction item
/// that ended up test-only has one interaction moved back to train.
SplitResult stratified_split(const RatingDataset& dataset, double test_fraction,
                             std::uint64_t seed);

/// Draws a validation set from the train side only; the test set is
/// untouched. Throws AlreadyCarved when a validation set exists and
/// InvalidFraction when the carve would be empty or consume all of train.
SplitResult carve_validation(SplitResult split, double val_fraction, std::uint64_t seed);

}  // namespace reckit
