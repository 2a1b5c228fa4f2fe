#include "reckit/types.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "reckit/errors.hpp"

namespace reckit {

int IdIndex::insert(std::int64_t raw) {
  auto [it, inserted] = to_dense_.try_emplace(raw, static_cast<int>(to_raw_.size()));
  if (inserted) to_raw_.push_back(raw);
  return it->second;
}

std::optional<int> IdIndex::dense(std::int64_t raw) const {
  auto it = to_dense_.find(raw);
  if (it == to_dense_.end()) return std::nullopt;
  return it->second;
}

RatingDataset RatingDataset::from_interactions(std::vector<Interaction> interactions,
                                               RatingScale scale) {
  RatingDataset dataset;
  dataset.scale_ = scale;
  std::unordered_map<std::int64_t, std::unordered_set<std::int64_t>> seen;
  for (const auto& interaction : interactions) {
    if (interaction.rating < scale.min || interaction.rating > scale.max) {
      throw ValueError("rating " + std::to_string(interaction.rating) +
                       " outside declared scale");
    }
    if (interaction.timestamp < 0) throw ValueError("negative timestamp");
    if (!seen[interaction.user_id].insert(interaction.item_id).second) {
      throw DuplicateInteraction("duplicate interaction for user " +
                                 std::to_string(interaction.user_id) + ", item " +
                                 std::to_string(interaction.item_id));
    }
    dataset.users_.insert(interaction.user_id);
    dataset.items_.insert(interaction.item_id);
  }
  dataset.interactions_ = std::move(interactions);
  return dataset;
}

SparseRatingMatrix SparseRatingMatrix::build(const RatingDataset& dataset) {
  if (dataset.empty()) throw EmptyDataset("cannot build a matrix from an empty dataset");
  SparseRatingMatrix matrix;
  matrix.n_users_ = dataset.n_users();
  matrix.n_items_ = dataset.n_items();
  matrix.nnz_ = dataset.size();
  matrix.rows_.resize(static_cast<std::size_t>(matrix.n_users_));
  matrix.cols_.resize(static_cast<std::size_t>(matrix.n_items_));
  for (const auto& interaction : dataset.interactions()) {
    const int u = *dataset.users().dense(interaction.user_id);
    const int i = *dataset.items().dense(interaction.item_id);
    matrix.rows_[static_cast<std::size_t>(u)].push_back({i, interaction.rating});
    matrix.cols_[static_cast<std::size_t>(i)].push_back({u, interaction.rating});
  }
  for (auto& row : matrix.rows_)
    std::sort(row.begin(), row.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.index < b.index; });
  for (auto& col : matrix.cols_)
    std::sort(col.begin(), col.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.index < b.index; });
  return matrix;
}

SparseRatingMatrix SparseRatingMatrix::from_triples(
    int n_users, int n_items, std::span<const std::tuple<int, int, double>> triples) {
  SparseRatingMatrix matrix;
  matrix.n_users_ = n_users;
  matrix.n_items_ = n_items;
  matrix.nnz_ = triples.size();
  matrix.rows_.resize(static_cast<std::size_t>(n_users));
  matrix.cols_.resize(static_cast<std::size_t>(n_items));
  for (const auto& [u, i, value] : triples) {
    matrix.rows_[static_cast<std::size_t>(u)].push_back({i, value});
    matrix.cols_[static_cast<std::size_t>(i)].push_back({u, value});
  }
  for (auto& row : matrix.rows_)
    std::sort(row.begin(), row.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.index < b.index; });
  for (auto& col : matrix.cols_)
    std::sort(col.begin(), col.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.index < b.index; });
  return matrix;
}

std::optional<double> SparseRatingMatrix::at(int user, int item) const {
  const auto entries = row(user);
  auto it = std::lower_bound(entries.begin(), entries.end(), item,
                             [](const MatrixEntry& e, int i) { return e.index < i; });
  if (it == entries.end() || it->index != item) return std::nullopt;
  return it->value;
}

SparseRatingMatrix SparseRatingMatrix::transposed() const {
  SparseRatingMatrix matrix;
  matrix.n_users_ = n_items_;
  matrix.n_items_ = n_users_;
  matrix.nnz_ = nnz_;
  matrix.rows_ = cols_;
  matrix.cols_ = rows_;
  return matrix;
}

double SparseRatingMatrix::row_mean(int user) const {
  const auto entries = row(user);
  if (entries.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : entries) sum += e.value;
  return sum / static_cast<double>(entries.size());
}

double SparseRatingMatrix::col_mean(int item) const {
  const auto entries = col(item);
  if (entries.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : entries) sum += e.value;
  return sum / static_cast<double>(entries.size());
}

double global_mean(const RatingDataset& dataset) {
  if (dataset.empty()) throw EmptyDataset("global_mean of an empty dataset");
  double sum = 0.0;
  for (const auto& interaction : dataset.interactions()) sum += interaction.rating;
  return sum / static_cast<double>(dataset.size());
}

RecommendationList top_k(std::span<const ScoredItem> scores, int k,
                         const std::unordered_set<int>& exclude, int user) {
  if (k < 1) throw InvalidK("top_k requires k >= 1");
  RecommendationList list;
  list.user = user;
  list.items.reserve(scores.size());
  for (const auto& scored : scores) {
    if (exclude.contains(scored.item)) continue;
    list.items.push_back(scored);
  }
  std::sort(list.items.begin(), list.items.end(), [](const ScoredItem& a, const ScoredItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item < b.item;
  });
  if (list.items.size() > static_cast<std::size_t>(k)) list.items.resize(static_cast<std::size_t>(k));
  return list;
}

}  // namespace reckit
