#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "reckit/predictor.hpp"
#include "reckit/types.hpp"

namespace reckit {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// A zero denominator reports the metric as 0 with its degenerate flag set,
/// never NaN, so aggregate reports stay total. Accuracy is the standard
/// (tp + tn) / total under the same relevance cutoff as the other rates.
struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
  bool accuracy_degenerate = false;
};

ClassificationMetrics classification_metrics(const ConfusionCounts& counts);

/// One user's ranked recommendation list as per-position relevance flags,
/// plus the user's total relevant count (which may exceed the flags in the
/// list when the list is truncated).
struct UserJudgments {
  std::vector<bool> relevance;
  std::size_t total_relevant = 0;
};

/// (relevant in top k) / k; positions past the end of a short list count as
/// misses. Throws InvalidK for k < 1.
double precision_at_k(const UserJudgments& judgments, int k);

/// (1 / total_relevant) * sum_k P@k * Rel@k. Throws EmptyInput when the
/// user has no relevant items (such users are excluded from MAP).
double average_precision(const UserJudgments& judgments);

struct MapResult {
  double value = 0.0;
  std::size_t eligible_users = 0;
  bool degenerate = false;  // no user had a relevant item
};

MapResult mean_average_precision(std::span<const UserJudgments> users);

/// Rank-statistic AUC with midrank tie handling; equals the area under the
/// threshold-sweep ROC. Throws UndefinedAUC for single-class input.
double auc_roc(std::span<const double> scores, const std::vector<bool>& labels);

/// Throws EmptyInput for no pairs, DimensionError on length mismatch.
double rmse(std::span<const double> predicted, std::span<const double> actual);

/// |distinct recommended items| / catalog_size.
double coverage(std::span<const RecommendationList> lists, std::size_t catalog_size);

struct EvalConfig {
  int k = 10;
  double relevance_threshold = 4.0;
  /// When set, ranking candidates are every train item the user has not
  /// rated; otherwise the user's test items only. Classification counts
  /// always derive from the top-k cutoff over the user's test items, the
  /// only candidates with known labels.
  bool full_catalog = false;
  std::vector<int> extra_ks;  // additional P@k cut-offs to report
};

struct EvaluationReport {
  // config echo
  int k = 10;
  double relevance_threshold = 4.0;
  bool full_catalog = false;

  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::map<int, double> p_at_k;
  double map = 0.0;
  double auc = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;

  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
  bool accuracy_degenerate = false;
  bool map_degenerate = false;
  bool auc_degenerate = false;

  std::size_t evaluated_users = 0;
  std::size_t evaluated_pairs = 0;
  std::size_t cold_start_pairs = 0;  // reported separately, excluded from metrics
};

/// Scores the user's candidate items, takes the top-k, and derives the
/// classification counts from that cutoff; relevance is actual >= threshold.
/// Test users or items absent from training count as cold-start pairs.
/// Throws EmptyInput for an empty test set.
EvaluationReport evaluate(const PredictFn& model, const RatingDataset& train,
                          const RatingDataset& test, const EvalConfig& config);

/// Line-oriented key=value rendering; field names are stable.
std::string report_text(const EvaluationReport& report);

/// JSON rendering with the same field names, versioned.
std::string report_json(const EvaluationReport& report);

}  // namespace reckit
