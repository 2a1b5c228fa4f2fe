#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "reckit/types.hpp"

namespace reckit {

enum class NormMethod { kMinMax, kZScore, kRobust, kLog };

struct MinMaxParams {
  double min = 0.0;
  double max = 1.0;
};
struct ZScoreParams {
  double mean = 0.0;
  double stddev = 1.0;
};
struct RobustParams {
  double median = 0.0;
  double iqr = 1.0;
};
struct LogParams {
  double base = 2.718281828459045;
};

using NormalizationParams = std::variant<MinMaxParams, ZScoreParams, RobustParams, LogParams>;

/// Fits scaling parameters from a sample. Constant samples raise
/// DegenerateScale for the three affine methods; non-positive values raise
/// DomainError for the log method. The log base defaults to e and is
/// configurable (the usual choices are 10, e, and 2).
NormalizationParams fit_normalizer(std::span<const double> values, NormMethod method,
                                   double log_base = 2.718281828459045);

/// (x-min)/(max-min) | (x-mean)/stddev | (x-median)/iqr | log_b(x)
double apply_normalizer(const NormalizationParams& params, double x);

/// Inverse transform of apply_normalizer.
double invert_normalizer(const NormalizationParams& params, double y);

/// Quantile with linear interpolation between order statistics
/// (values must be sorted ascending, p in [0, 1]).
double sorted_quantile(std::span<const double> sorted_values, double p);

enum class Axis { kUser, kItem };

/// A matrix with per-row or per-column means subtracted, plus the means
/// needed to de-center predictions later.
struct CenteredMatrix {
  SparseRatingMatrix matrix;
  std::vector<double> means;
  Axis axis = Axis::kUser;
};

/// Subtracts each user's (or item's) own mean from its stored entries.
/// Axes without entries simply contribute nothing.
CenteredMatrix per_axis_center(const SparseRatingMatrix& matrix, Axis axis);

/// Adds the axis means back onto every stored entry.
SparseRatingMatrix de_center(const CenteredMatrix& centered);

/// Binary vector of length |vocabulary| with a single 1 at the value's
/// position. Unknown values raise UnknownCategory.
std::vector<double> one_hot_encode(const std::string& value,
                                   std::span<const std::string> vocabulary);

struct UserFeatures {
  int user = 0;  // dense id
  double mean_rating = 0.0;
  std::size_t rating_count = 0;
  std::int64_t last_activity = 0;
};

/// Per-user engineered features: mean rating, rating count, most recent
/// activity timestamp. One row per dense user id.
std::vector<UserFeatures> derive_user_features(const RatingDataset& dataset);

}  // namespace reckit
