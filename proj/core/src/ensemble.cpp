#include "reckit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "reckit/errors.hpp"
#include "reckit/linalg.hpp"

namespace reckit {

double weighted_combine(std::span<const double> predictions, std::span<const double> weights) {
  if (predictions.size() != weights.size())
    throw DimensionError("weighted_combine: prediction/weight count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += weights[i] * predictions[i];
  return sum;
}

std::vector<double> normalize_weights(std::span<const double> weights) {
  if (weights.empty()) throw InvalidConfig("no weights given");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidConfig("weights must be finite and >= 0");
    sum += w;
  }
  if (sum <= 0.0) throw InvalidConfig("weights must not all be zero");
  std::vector<double> normalized(weights.begin(), weights.end());
  for (double& w : normalized) w /= sum;
  return normalized;
}

std::vector<double> inverse_rmse_weights(std::span<const double> validation_rmses) {
  std::vector<double> raw(validation_rmses.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(validation_rmses[i] >= 0.0)) throw InvalidConfig("RMSE must be non-negative");
    raw[i] = 1.0 / std::max(validation_rmses[i], 1e-9);
  }
  return normalize_weights(raw);
}

double hybrid_weighted(double cf_score, double cbf_score, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidConfig("beta must lie in [0, 1]");
  return beta * cf_score + (1.0 - beta) * cbf_score;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = static_cast<std::size_t>(rng.uniform_int(n));
  return indices;
}

double BaggingEnsemble::predict(int user, int item) const {
  double sum = 0.0;
  for (const auto& member : members) sum += mf_predict(member, user, item);
  return sum / static_cast<double>(members.size());
}

BaggingEnsemble bagging_fit_resamples(const TrainingData& data, int k,
                                      const TrainConfig& base_config,
                                      std::span<const std::vector<std::size_t>> resamples) {
  if (resamples.empty()) throw InvalidConfig("bagging needs at least one member");
  BaggingEnsemble ensemble;
  ensemble.members.reserve(resamples.size());
  for (std::size_t m = 0; m < resamples.size(); ++m) {
    TrainingData member_data;
    member_data.n_users = data.n_users;
    member_data.n_items = data.n_items;
    member_data.scale = data.scale;
    member_data.observations.reserve(resamples[m].size());
    for (std::size_t idx : resamples[m]) member_data.observations.push_back(data.observations[idx]);
    try {
      ensemble.members.push_back(mf_fit(member_data, k, base_config));
    } catch (const DivergenceError& e) {
      throw DivergenceError("bagging member " + std::to_string(m) + ": " + e.what());
    }
  }
  return ensemble;
}

BaggingEnsemble bagging_fit(const TrainingData& data, int k, const TrainConfig& base_config,
                            int n, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("bagging needs n >= 1 members");
  if (data.observations.empty()) throw EmptyDataset("bagging_fit on empty training data");
  std::vector<std::vector<std::size_t>> resamples;
  resamples.reserve(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    Rng rng(derive_seed(derive_seed(seed, "bagging_resample"), static_cast<std::uint64_t>(m)));
    resamples.push_back(bootstrap_indices(data.observations.size(), rng));
  }
  return bagging_fit_resamples(data, k, base_config, resamples);
}

double BoostingEnsemble::predict(int user, int item) const {
  double value = initial;
  for (const auto& stage : stages) value += shrinkage * mf_predict(stage, user, item);
  if (scale.has_value()) value = scale->clamp(value);
  return value;
}

BoostingEnsemble boosting_fit(const TrainingData& data, int k, const TrainConfig& base_config,
                              int rounds, double shrinkage) {
  if (rounds < 1) throw InvalidConfig("boosting needs rounds >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0))
    throw InvalidConfig("shrinkage must lie in (0, 1]");
  if (data.observations.empty()) throw EmptyDataset("boosting_fit on empty training data");

  BoostingEnsemble ensemble;
  ensemble.shrinkage = shrinkage;
  ensemble.scale = data.scale;

  double sum = 0.0;
  for (const auto& obs : data.observations) sum += obs.value;
  ensemble.initial = sum / static_cast<double>(data.observations.size());

  // Residuals live outside the rating scale, so stages train unclamped
  // and uncentered; the ensemble clamps once at prediction time.
  TrainingData residual = data;
  residual.scale = std::nullopt;
  for (auto& obs : residual.observations) obs.value -= ensemble.initial;

  TrainConfig stage_config = base_config;
  stage_config.centering = Centering::kNone;

  for (int round = 0; round < rounds; ++round) {
    stage_config.seed = derive_seed(base_config.seed, static_cast<std::uint64_t>(round));
    MfModel stage = mf_fit(residual, k, stage_config);
    double sq = 0.0;
    for (auto& obs : residual.observations) {
      obs.value -= shrinkage * mf_predict(stage, obs.user, obs.item);
      sq += obs.value * obs.value;
    }
    ensemble.stages.push_back(std::move(stage));
    ensemble.round_rmse.push_back(
        std::sqrt(sq / static_cast<double>(residual.observations.size())));
  }
  return ensemble;
}

double StackingEnsemble::predict(int user, int item) const {
  std::vector<double> features(base.size());
  for (std::size_t b = 0; b < base.size(); ++b) features[b] = base[b](user, item);
  double value = linear_predict(meta, features);
  if (scale.has_value()) value = scale->clamp(value);
  return value;
}

StackingEnsemble stacking_fit(const TrainingData& data, std::span<const TrainerFn> bases,
                              std::uint64_t seed, int n_folds, double meta_lambda) {
  if (bases.size() < 2) throw InvalidConfig("stacking needs at least 2 base models");
  if (n_folds < 2) throw InvalidConfig("stacking needs at least 2 folds");
  if (data.observations.size() < static_cast<std::size_t>(n_folds))
    throw EmptyDataset("stacking_fit: fewer observations than folds");

  const std::size_t n = data.observations.size();
  StackingEnsemble ensemble;
  ensemble.scale = data.scale;
  ensemble.fold_of.resize(n);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "stacking_folds"));
  rng.shuffle(order);
  for (std::size_t pos = 0; pos < n; ++pos)
    ensemble.fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(n_folds));

  ensemble.meta_features = DenseMatrix(static_cast<int>(n), static_cast<int>(bases.size()));
  ensemble.meta_targets.resize(n);
  for (std::size_t r = 0; r < n; ++r) ensemble.meta_targets[r] = data.observations[r].value;

  for (int fold = 0; fold < n_folds; ++fold) {
    TrainingData complement;
    complement.n_users = data.n_users;
    complement.n_items = data.n_items;
    complement.scale = data.scale;
    for (std::size_t r = 0; r < n; ++r)
      if (ensemble.fold_of[r] != fold) complement.observations.push_back(data.observations[r]);

    double fallback = 0.0;
    for (const auto& obs : complement.observations) fallback += obs.value;
    fallback /= static_cast<double>(complement.observations.size());

    for (std::size_t b = 0; b < bases.size(); ++b) {
      const PredictFn model = bases[b](complement);
      for (std::size_t r = 0; r < n; ++r) {
        if (ensemble.fold_of[r] != fold) continue;
        double prediction;
        try {
          prediction = model(data.observations[r].user, data.observations[r].item);
        } catch (const ColdStart&) {
          prediction = fallback;  // fold complement never saw this user/item
        }
        ensemble.meta_features.at(static_cast<int>(r), static_cast<int>(b)) = prediction;
      }
    }
  }

  ensemble.meta = linear_fit(ensemble.meta_features, ensemble.meta_targets, meta_lambda);

  ensemble.base.reserve(bases.size());
  for (const auto& trainer : bases) ensemble.base.push_back(trainer(data));
  return ensemble;
}

}  // namespace reckit
