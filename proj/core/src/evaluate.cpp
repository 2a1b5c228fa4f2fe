#include "reckit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "reckit/errors.hpp"

namespace reckit {

ClassificationMetrics classification_metrics(const ConfusionCounts& counts) {
  ClassificationMetrics metrics;
  const double tp = static_cast<double>(counts.tp);
  const double fp = static_cast<double>(counts.fp);
  const double fn = static_cast<double>(counts.fn);
  const double tn = static_cast<double>(counts.tn);

  if (tp + fp > 0.0)
    metrics.precision = tp / (tp + fp);
  else
    metrics.precision_degenerate = true;

  if (tp + fn > 0.0)
    metrics.recall = tp / (tp + fn);
  else
    metrics.recall_degenerate = true;

  if (metrics.precision + metrics.recall > 0.0 && !metrics.precision_degenerate &&
      !metrics.recall_degenerate)
    metrics.f1 = 2.0 * metrics.precision * metrics.recall / (metrics.precision + metrics.recall);
  else
    metrics.f1_degenerate = true;

  if (tp + fp + fn + tn > 0.0)
    metrics.accuracy = (tp + tn) / (tp + fp + fn + tn);
  else
    metrics.accuracy_degenerate = true;
  return metrics;
}

double precision_at_k(const UserJudgments& judgments, int k) {
  if (k < 1) throw InvalidK("precision_at_k requires k >= 1");
  std::size_t hits = 0;
  const std::size_t considered = std::min(judgments.relevance.size(), static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < considered; ++pos)
    if (judgments.relevance[pos]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double average_precision(const UserJudgments& judgments) {
  if (judgments.total_relevant == 0)
    throw EmptyInput("average_precision: user has no relevant items");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < judgments.relevance.size(); ++pos) {
    if (!judgments.relevance[pos]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(pos + 1);  // P@(pos+1) * Rel
  }
  return sum / static_cast<double>(judgments.total_relevant);
}

MapResult mean_average_precision(std::span<const UserJudgments> users) {
  MapResult result;
  double sum = 0.0;
  for (const auto& judgments : users) {
    if (judgments.total_relevant == 0) continue;  // only users with relevant items count
    sum += average_precision(judgments);
    ++result.eligible_users;
  }
  if (result.eligible_users == 0) {
    result.degenerate = true;
    return result;
  }
  result.value = sum / static_cast<double>(result.eligible_users);
  return result;
}

double auc_roc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc_roc: length mismatch");
  std::size_t n_pos = 0;
  for (bool label : labels) n_pos += label ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw UndefinedAUC("auc_roc needs at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tied scores, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t t = i; t <= j; ++t)
      if (labels[order[t]]) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw DimensionError("rmse: length mismatch");
  if (predicted.empty()) throw EmptyInput("rmse of no pairs");
  double sq = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - actual[i];
    sq += e * e;
  }
  return std::sqrt(sq / static_cast<double>(predicted.size()));
}

double coverage(std::span<const RecommendationList> lists, std::size_t catalog_size) {
  if (catalog_size == 0) throw InvalidConfig("coverage needs a positive catalog size");
  std::unordered_set<int> distinct;
  for (const auto& list : lists)
    for (const auto& scored : list.items) distinct.insert(scored.item);
  return static_cast<double>(distinct.size()) / static_cast<double>(catalog_size);
}

EvaluationReport evaluate(const PredictFn& model, const RatingDataset& train,
                          const RatingDataset& test, const EvalConfig& config) {
  if (test.empty()) throw EmptyInput("evaluate on an empty test set");
  if (config.k < 1) throw InvalidK("evaluate requires k >= 1");

  EvaluationReport report;
  report.k = config.k;
  report.relevance_threshold = config.relevance_threshold;
  report.full_catalog = config.full_catalog;

  struct TestPair {
    int item;
    double actual;
    double predicted;
  };
  std::unordered_map<int, std::vector<TestPair>> by_user;

  std::vector<double> all_predicted;
  std::vector<double> all_actual;
  std::vector<bool> all_relevant;

  for (const auto& interaction : test.interactions()) {
    const auto user = train.users().dense(interaction.user_id);
    const auto item = train.items().dense(interaction.item_id);
    if (!user.has_value() || !item.has_value()) {
      ++report.cold_start_pairs;
      continue;
    }
    double predicted;
    try {
      predicted = model(*user, *item);
    } catch (const ColdStart&) {
      ++report.cold_start_pairs;
      continue;
    }
    by_user[*user].push_back({*item, interaction.rating, predicted});
    all_predicted.push_back(predicted);
    all_actual.push_back(interaction.rating);
    all_relevant.push_back(interaction.rating >= config.relevance_threshold);
    ++report.evaluated_pairs;
  }
  if (report.evaluated_pairs == 0) throw EmptyInput("every test pair is cold-start");

  // Rated-in-train sets for full-catalog candidate exclusion.
  std::unordered_map<int, std::unordered_set<int>> train_rated;
  if (config.full_catalog) {
    for (const auto& interaction : train.interactions())
      train_rated[*train.users().dense(interaction.user_id)].insert(
          *train.items().dense(interaction.item_id));
  }

  ConfusionCounts counts;
  std::vector<UserJudgments> judgments_at_k;
  std::map<int, std::vector<UserJudgments>> judgments_extra;
  std::vector<RecommendationList> lists;

  std::vector<int> users;
  users.reserve(by_user.size());
  for (const auto& [user, pairs] : by_user) users.push_back(user);
  std::sort(users.begin(), users.end());

  std::vector<ScoredItem> scores;
  for (int user : users) {
    const auto& pairs = by_user[user];
    std::unordered_map<int, double> actual_by_item;
    std::unordered_set<int> relevant_items;
    for (const auto& pair : pairs) {
      actual_by_item[pair.item] = pair.actual;
      if (pair.actual >= config.relevance_threshold) relevant_items.insert(pair.item);
    }

    scores.clear();
    if (config.full_catalog) {
      const auto& rated = train_rated[user];
      for (int item = 0; item < train.n_items(); ++item) {
        if (rated.contains(item)) continue;
        try {
          scores.push_back({item, model(user, item)});
        } catch (const ColdStart&) {
        }
      }
    } else {
      for (const auto& pair : pairs) scores.push_back({pair.item, pair.predicted});
    }
    if (scores.empty()) continue;

    const RecommendationList list = top_k(scores, config.k, {}, user);

    // Classification cutoff: recommended = top-k of the user's test items.
    {
      std::vector<ScoredItem> test_scores;
      test_scores.reserve(pairs.size());
      for (const auto& pair : pairs) test_scores.push_back({pair.item, pair.predicted});
      const RecommendationList test_list = top_k(test_scores, config.k, {}, user);
      std::unordered_set<int> recommended;
      for (const auto& scored : test_list.items) recommended.insert(scored.item);
      for (const auto& pair : pairs) {
        const bool is_relevant = pair.actual >= config.relevance_threshold;
        const bool is_recommended = recommended.contains(pair.item);
        if (is_recommended && is_relevant)
          ++counts.tp;
        else if (is_recommended && !is_relevant)
          ++counts.fp;
        else if (!is_recommended && is_relevant)
          ++counts.fn;
        else
          ++counts.tn;
      }
    }

    auto judge = [&](const RecommendationList& ranked) {
      UserJudgments judgments;
      judgments.total_relevant = relevant_items.size();
      judgments.relevance.reserve(ranked.items.size());
      for (const auto& scored : ranked.items)
        judgments.relevance.push_back(relevant_items.contains(scored.item));
      return judgments;
    };
    judgments_at_k.push_back(judge(list));
    for (int extra : config.extra_ks) {
      if (extra < 1) throw InvalidK("extra P@k cut-offs must be >= 1");
      judgments_extra[extra].push_back(judge(top_k(scores, extra, {}, user)));
    }
    lists.push_back(list);
    ++report.evaluated_users;
  }

  const ClassificationMetrics cls = classification_metrics(counts);
  report.precision = cls.precision;
  report.recall = cls.recall;
  report.f1 = cls.f1;
  report.accuracy = cls.accuracy;
  report.precision_degenerate = cls.precision_degenerate;
  report.recall_degenerate = cls.recall_degenerate;
  report.f1_degenerate = cls.f1_degenerate;
  report.accuracy_degenerate = cls.accuracy_degenerate;

  double p_sum = 0.0;
  for (const auto& judgments : judgments_at_k) p_sum += precision_at_k(judgments, config.k);
  report.p_at_k[config.k] = judgments_at_k.empty()
                                ? 0.0
                                : p_sum / static_cast<double>(judgments_at_k.size());
  for (const auto& [extra, judgments] : judgments_extra) {
    double sum = 0.0;
    for (const auto& j : judgments) sum += precision_at_k(j, extra);
    report.p_at_k[extra] = judgments.empty() ? 0.0 : sum / static_cast<double>(judgments.size());
  }

  const MapResult map_result = mean_average_precision(judgments_at_k);
  report.map = map_result.value;
  report.map_degenerate = map_result.degenerate;

  try {
    report.auc = auc_roc(all_predicted, all_relevant);
  } catch (const UndefinedAUC&) {
    report.auc = 0.0;
    report.auc_degenerate = true;
  }
  report.rmse = rmse(all_predicted, all_actual);
  report.coverage = coverage(lists, static_cast<std::size_t>(train.n_items()));
  return report;
}

namespace {

nlohmann::json report_to_json_value(const EvaluationReport& report) {
  nlohmann::json j;
  j["format"] = "reckit-report";
  j["version"] = 1;
  j["config"]["k"] = report.k;
  j["config"]["relevance_threshold"] = report.relevance_threshold;
  j["config"]["full_catalog"] = report.full_catalog;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["accuracy"] = report.accuracy;
  nlohmann::json p_at_k = nlohmann::json::object();
  for (const auto& [k, value] : report.p_at_k) p_at_k[std::to_string(k)] = value;
  j["p_at_k"] = p_at_k;
  j["map"] = report.map;
  j["auc"] = report.auc;
  j["rmse"] = report.rmse;
  j["coverage"] = report.coverage;
  nlohmann::json degenerate = nlohmann::json::array();
  if (report.precision_degenerate) degenerate.push_back("precision");
  if (report.recall_degenerate) degenerate.push_back("recall");
  if (report.f1_degenerate) degenerate.push_back("f1");
  if (report.accuracy_degenerate) degenerate.push_back("accuracy");
  if (report.map_degenerate) degenerate.push_back("map");
  if (report.auc_degenerate) degenerate.push_back("auc");
  j["degenerate"] = degenerate;
  j["evaluated_users"] = report.evaluated_users;
  j["evaluated_pairs"] = report.evaluated_pairs;
  j["cold_start_pairs"] = report.cold_start_pairs;
  return j;
}

void append_kv(std::string& out, const std::string& key, double value) {
  out += key;
  out += '=';
  out += nlohmann::json(value).dump();
  out += '\n';
}

}  // namespace

std::string report_text(const EvaluationReport& report) {
  std::string out;
  append_kv(out, "precision", report.precision);
  append_kv(out, "recall", report.recall);
  append_kv(out, "f1", report.f1);
  append_kv(out, "accuracy", report.accuracy);
  for (const auto& [k, value] : report.p_at_k) append_kv(out, "p_at_" + std::to_string(k), value);
  append_kv(out, "map", report.map);
  append_kv(out, "auc", report.auc);
  append_kv(out, "rmse", report.rmse);
  append_kv(out, "coverage", report.coverage);
  out += "evaluated_users=" + std::to_string(report.evaluated_users) + "\n";
  out += "evaluated_pairs=" + std::to_string(report.evaluated_pairs) + "\n";
  out += "cold_start_pairs=" + std::to_string(report.cold_start_pairs) + "\n";
  return out;
}

std::string report_json(const EvaluationReport& report) {
  return report_to_json_value(report).dump(2) + "\n";
}

}  // namespace reckit
