#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "reckit/factor.hpp"
#include "reckit/graph.hpp"
#include "reckit/predictor.hpp"
#include "reckit/random.hpp"

namespace reckit {

/// sum_k w_k * r_k with pre-normalized weights.
/// Throws DimensionError on length mismatch.
double weighted_combine(std::span<const double> predictions, std::span<const double> weights);

/// Scales weights to sum to 1. Throws InvalidConfig for non-finite weights
/// or a non-positive sum.
std::vector<double> normalize_weights(std::span<const double> weights);

/// Default weighting for the weighted scheme: w_k proportional to
/// 1 / validation RMSE of member k.
std::vector<double> inverse_rmse_weights(std::span<const double> validation_rmses);

/// beta * cf + (1 - beta) * cbf. Throws InvalidConfig for beta outside
/// [0, 1].
double hybrid_weighted(double cf_score, double cbf_score, double beta);

/// Bootstrap sample of n indices drawn with replacement from [0, n).
std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng);

/// Mean of MF members trained on bootstrap resamples. Every member trains
/// with the base config's seed; diversity comes from the resampled data.
struct BaggingEnsemble {
  std::vector<MfModel> members;

  double predict(int user, int item) const;
};

BaggingEnsemble bagging_fit(const TrainingData& data, int k, const TrainConfig& base_config,
                            int n, std::uint64_t seed);

/// Injection point for reproducing exact resample compositions in tests.
BaggingEnsemble bagging_fit_resamples(const TrainingData& data, int k,
                                      const TrainConfig& base_config,
                                      std::span<const std::vector<std::size_t>> resamples);

/// Stagewise residual fitting with a global-mean stage 0; stage k trains on
/// the residuals of the current ensemble and enters with weight alpha_k =
/// shrinkage.
struct BoostingEnsemble {
  double initial = 0.0;  // global-mean stage
  double shrinkage = 1.0;
  std::vector<MfModel> stages;
  std::optional<RatingScale> scale;
  std::vector<double> round_rmse;  // training RMSE after each round

  double predict(int user, int item) const;
};

BoostingEnsemble boosting_fit(const TrainingData& data, int k, const TrainConfig& base_config,
                              int rounds, double shrinkage);

using TrainerFn = std::function<PredictFn(const TrainingData&)>;

/// Base models trained per fold-complement supply out-of-fold meta-features;
/// a ridge meta-model g combines them; final predictions use bases refit on
/// the full training set.
struct StackingEnsemble {
  std::vector<PredictFn> base;  // refit on the full training data
  LinearModel meta;
  std::optional<RatingScale> scale;

  // Retained for leakage inspection: row r of meta_features was produced by
  // the base models trained without fold fold_of[r].
  DenseMatrix meta_features;
  std::vector<double> meta_targets;
  std::vector<int> fold_of;

  double predict(int user, int item) const;
};

/// Throws InvalidConfig for fewer than 2 base models. SingularSystem
/// propagates when meta_lambda = 0 and the meta-features are collinear.
StackingEnsemble stacking_fit(const TrainingData& data, std::span<const TrainerFn> bases,
                              std::uint64_t seed, int n_folds = 5, double meta_lambda = 1e-8);

}  // namespace reckit
