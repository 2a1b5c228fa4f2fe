#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace reckit {

/// Inclusive rating bounds of a dataset. MovieLens uses [1, 5].
struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  double clamp(double value) const {
    if (value < min) return min;
    if (value > max) return max;
    return value;
  }
  double width() const { return max - min; }
  bool operator==(const RatingScale&) const = default;
};

/// One explicit user-item rating event.
struct Interaction {
  std::int64_t user_id = 0;
  std::int64_t item_id = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

/// Bidirectional map between external ids and dense [0, n) indices.
/// Dense ids are assigned in first-seen order.
class IdIndex {
 public:
  int insert(std::int64_t raw);
  std::optional<int> dense(std::int64_t raw) const;
  std::int64_t raw(int dense_id) const { return to_raw_[static_cast<std::size_t>(dense_id)]; }
  int size() const { return static_cast<int>(to_raw_.size()); }
  const std::vector<std::int64_t>& raw_ids() const { return to_raw_; }

 private:
  std::unordered_map<std::int64_t, int> to_dense_;
  std::vector<std::int64_t> to_raw_;
};

/// Immutable set of interactions with dense id remappings.
/// Duplicate (user, item) pairs are rejected at construction so the
/// user-item matrix stays well-defined.
class RatingDataset {
 public:
  RatingDataset() = default;

  /// Throws DuplicateInteraction on a repeated (user, item) pair and
  /// ValueError on out-of-scale ratings or negative timestamps.
  static RatingDataset from_interactions(std::vector<Interaction> interactions,
                                         RatingScale scale = {});

  const std::vector<Interaction>& interactions() const { return interactions_; }
  const IdIndex& users() const { return users_; }
  const IdIndex& items() const { return items_; }
  RatingScale scale() const { return scale_; }

  int n_users() const { return users_.size(); }
  int n_items() const { return items_.size(); }
  std::size_t size() const { return interactions_.size(); }
  bool empty() const { return interactions_.empty(); }

  bool operator==(const RatingDataset& other) const {
    return interactions_ == other.interactions_ && scale_ == other.scale_;
  }

 private:
  std::vector<Interaction> interactions_;
  IdIndex users_;
  IdIndex items_;
  RatingScale scale_;
};

/// Entry of a sparse row (column index) or column (row index).
struct MatrixEntry {
  int index = 0;
  double value = 0.0;

  bool operator==(const MatrixEntry&) const = default;
};

/// The user-item matrix R in dense-id space, with row and column adjacency
/// for iteration. Immutable after construction.
class SparseRatingMatrix {
 public:
  SparseRatingMatrix() = default;

  /// Throws EmptyDataset when the dataset has no interactions.
  static SparseRatingMatrix build(const RatingDataset& dataset);

  /// Low-level constructor used by preprocessing transforms.
  /// Entries are (user, item, value) triples; duplicates are not checked.
  static SparseRatingMatrix from_triples(
      int n_users, int n_items, std::span<const std::tuple<int, int, double>> triples);

  int n_users() const { return n_users_; }
  int n_items() const { return n_items_; }
  std::size_t nnz() const { return nnz_; }

  std::span<const MatrixEntry> row(int user) const { return spans(rows_, user); }
  std::span<const MatrixEntry> col(int item) const { return spans(cols_, item); }
  std::optional<double> at(int user, int item) const;

  SparseRatingMatrix transposed() const;

  /// Mean of a row's stored entries; 0 for an empty row.
  double row_mean(int user) const;
  double col_mean(int item) const;

 private:
  static std::span<const MatrixEntry> spans(const std::vector<std::vector<MatrixEntry>>& v,
                                            int at) {
    const auto& entries = v[static_cast<std::size_t>(at)];
    return {entries.data(), entries.size()};
  }

  int n_users_ = 0;
  int n_items_ = 0;
  std::size_t nnz_ = 0;
  std::vector<std::vector<MatrixEntry>> rows_;
  std::vector<std::vector<MatrixEntry>> cols_;
};

struct ScoredItem {
  int item = 0;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

/// Ordered top-K output. Items are strictly ordered by descending score with
/// ascending item id breaking ties, so identical inputs always produce
/// identical lists.
struct RecommendationList {
  int user = -1;
  std::vector<ScoredItem> items;
};

/// Arithmetic mean of all ratings. Throws EmptyDataset.
double global_mean(const RatingDataset& dataset);

/// Selects the k best-scored items, skipping `exclude`. Throws InvalidK for
/// k < 1. Scores must carry unique item ids.
RecommendationList top_k(std::span<const ScoredItem> scores, int k,
                         const std::unordered_set<int>& exclude = {}, int user = -1);

}  // namespace reckit
