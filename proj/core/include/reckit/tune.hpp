#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reckit/predictor.hpp"

namespace reckit {

/// One hyperparameter configuration as named values.
using ParamSet = std::map<std::string, double>;

/// Named axes, each a finite value list. Axes iterate in name order, the
/// last axis fastest.
using HyperGrid = std::map<std::string, std::vector<double>>;

struct TuneCell {
  ParamSet params;
  std::optional<double> metric;  // empty when training failed
  std::string error;
};

enum class MetricDirection { kMinimize, kMaximize };

struct TuneResult {
  std::vector<TuneCell> table;  // canonical order, complete
  std::size_t best_index = 0;
  std::string metric_name;
  MetricDirection direction = MetricDirection::kMinimize;

  const TuneCell& best() const { return table[best_index]; }
};

/// Trains a model for one configuration; evaluation happens through the
/// metric function (typically a closure over train and validation splits).
using TunableTrainer = std::function<PredictFn(const ParamSet&)>;
using MetricFn = std::function<double(const PredictFn&)>;

/// Evaluates every configuration in the Cartesian product. Training errors
/// are recorded per cell, not fatal. Best = argmin/argmax with the earliest
/// cell winning ties. Throws InvalidConfig for an empty grid or axis and
/// EmptyInput when every cell failed.
TuneResult grid_search(const TunableTrainer& trainer, const HyperGrid& grid,
                       const MetricFn& metric, std::string metric_name,
                       MetricDirection direction);

/// Random-search axis: uniform over [lo, hi], log-uniform when log_scale
/// (for scale-type parameters such as learning rate and regularization),
/// rounded to integers when integer.
struct RandomAxis {
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
  bool integer = false;
};

using RandomSpace = std::map<std::string, RandomAxis>;

/// Samples n_trials configurations deterministically under the seed (axes
/// drawn in name order per trial).
TuneResult random_search(const TunableTrainer& trainer, const RandomSpace& space, int n_trials,
                         std::uint64_t seed, const MetricFn& metric, std::string metric_name,
                         MetricDirection direction);

/// CSV export: one row per configuration plus the metric column.
void write_tuning_csv(const TuneResult& result, std::ostream& out);

}  // namespace reckit
