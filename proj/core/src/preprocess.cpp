#include "reckit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "reckit/errors.hpp"

namespace reckit {

double sorted_quantile(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) throw EmptyInput("quantile of an empty sample");
  if (sorted_values.size() == 1) return sorted_values[0];
  const double position = p * static_cast<double>(sorted_values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(position);
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = position - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

NormalizationParams fit_normalizer(std::span<const double> values, NormMethod method,
                                   double log_base) {
  if (values.empty()) throw EmptyInput("fit_normalizer on an empty sample");
  switch (method) {
    case NormMethod::kMinMax: {
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      if (*hi <= *lo) throw DegenerateScale("min-max on a constant sample");
      return MinMaxParams{*lo, *hi};
    }
    case NormMethod::kZScore: {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double stddev = std::sqrt(sq / static_cast<double>(values.size()));
      if (stddev <= 0.0) throw DegenerateScale("z-score on a constant sample");
      return ZScoreParams{mean, stddev};
    }
    case NormMethod::kRobust: {
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted_quantile(sorted, 0.5);
      const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
      if (iqr <= 0.0) throw DegenerateScale("robust scaling with zero IQR");
      return RobustParams{median, iqr};
    }
    case NormMethod::kLog: {
      if (log_base <= 0.0 || log_base == 1.0)
        throw InvalidConfig("log base must be positive and != 1");
      for (double v : values)
        if (v <= 0.0) throw DomainError("log transform requires positive values");
      return LogParams{log_base};
    }
  }
  throw InvalidConfig("unknown normalization method");
}

double apply_normalizer(const NormalizationParams& params, double x) {
  return std::visit(
      [x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MinMaxParams>) {
          return (x - p.min) / (p.max - p.min);
        } else if constexpr (std::is_same_v<T, ZScoreParams>) {
          return (x - p.mean) / p.stddev;
        } else if constexpr (std::is_same_v<T, RobustParams>) {
          return (x - p.median) / p.iqr;
        } else {
          if (x <= 0.0) throw DomainError("log transform of a non-positive value");
          return std::log(x) / std::log(p.base);
        }
      },
      params);
}

double invert_normalizer(const NormalizationParams& params, double y) {
  return std::visit(
      [y](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MinMaxParams>) {
          return p.min + y * (p.max - p.min);
        } else if constexpr (std::is_same_v<T, ZScoreParams>) {
          return p.mean + y * p.stddev;
        } else if constexpr (std::is_same_v<T, RobustParams>) {
          return p.median + y * p.iqr;
        } else {
          return std::pow(p.base, y);
        }
      },
      params);
}

CenteredMatrix per_axis_center(const SparseRatingMatrix& matrix, Axis axis) {
  CenteredMatrix centered;
  centered.axis = axis;
  const int n = axis == Axis::kUser ? matrix.n_users() : matrix.n_items();
  centered.means.resize(static_cast<std::size_t>(n), 0.0);
  for (int a = 0; a < n; ++a)
    centered.means[static_cast<std::size_t>(a)] =
        axis == Axis::kUser ? matrix.row_mean(a) : matrix.col_mean(a);

  std::vector<std::tuple<int, int, double>> triples;
  triples.reserve(matrix.nnz());
  for (int u = 0; u < matrix.n_users(); ++u) {
    for (const auto& entry : matrix.row(u)) {
      const double mean = axis == Axis::kUser
                              ? centered.means[static_cast<std::size_t>(u)]
                              : centered.means[static_cast<std::size_t>(entry.index)];
      triples.emplace_back(u, entry.index, entry.value - mean);
    }
  }
  centered.matrix = SparseRatingMatrix::from_triples(matrix.n_users(), matrix.n_items(),
                                                     triples);
  return centered;
}

SparseRatingMatrix de_center(const CenteredMatrix& centered) {
  std::vector<std::tuple<int, int, double>> triples;
  triples.reserve(centered.matrix.nnz());
  for (int u = 0; u < centered.matrix.n_users(); ++u) {
    for (const auto& entry : centered.matrix.row(u)) {
      const double mean = centered.axis == Axis::kUser
                              ? centered.means[static_cast<std::size_t>(u)]
                              : centered.means[static_cast<std::size_t>(entry.index)];
      triples.emplace_back(u, entry.index, entry.value + mean);
    }
  }
  return SparseRatingMatrix::from_triples(centered.matrix.n_users(), centered.matrix.n_items(),
                                          triples);
}

std::vector<double> one_hot_encode(const std::string& value,
                                   std::span<const std::string> vocabulary) {
  std::vector<double> encoded(vocabulary.size(), 0.0);
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (vocabulary[i] == value) {
      encoded[i] = 1.0;
      return encoded;
    }
  }
  throw UnknownCategory("value '" + value + "' not in vocabulary");
}

std::vector<UserFeatures> derive_user_features(const RatingDataset& dataset) {
  if (dataset.empty()) throw EmptyDataset("derive_user_features of an empty dataset");
  std::vector<UserFeatures> features(static_cast<std::size_t>(dataset.n_users()));
  std::vector<double> sums(features.size(), 0.0);
  for (int u = 0; u < dataset.n_users(); ++u) features[static_cast<std::size_t>(u)].user = u;
  for (const auto& interaction : dataset.interactions()) {
    const auto u = static_cast<std::size_t>(*dataset.users().dense(interaction.user_id));
    sums[u] += interaction.rating;
    features[u].rating_count += 1;
    features[u].last_activity = std::max(features[u].last_activity, interaction.timestamp);
  }
  for (std::size_t u = 0; u < features.size(); ++u)
    features[u].mean_rating = sums[u] / static_cast<double>(features[u].rating_count);
  return features;
}

}  // namespace reckit
