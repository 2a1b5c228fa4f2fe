#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reckit/types.hpp"

namespace reckit {

/// Per-item attribute vector. For MovieLens this is the 19 genre flags.
struct ItemFeatures {
  std::int64_t item_id = 0;
  std::string title;
  std::optional<int> release_year;
  std::vector<double> features;
};

/// Item catalog with lookup by external item id. All feature vectors share
/// one length.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  static ItemCatalog from_items(std::vector<ItemFeatures> items);

  const ItemFeatures* find(std::int64_t item_id) const;
  std::span<const ItemFeatures> items() const { return {items_.data(), items_.size()}; }
  std::size_t size() const { return items_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }

 private:
  std::vector<ItemFeatures> items_;
  std::map<std::int64_t, std::size_t> by_id_;
  std::size_t feature_dim_ = 0;
};

struct Transaction {
  std::string customer_id;
  std::int64_t timestamp = 0;
  double amount = 0.0;
};

struct TransactionLog {
  std::vector<Transaction> records;
};

struct StatsSummary {
  std::size_t n_interactions = 0;
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population (divide by N)
  double sparsity = 0.0;
  std::map<double, std::size_t> rating_counts;
};

/// Parses MovieLens u.data lines: user<TAB>item<TAB>rating<TAB>timestamp.
/// Throws ParseError (with line number), DuplicateInteraction, or
/// EmptyDataset for an input with no data lines.
RatingDataset parse_ratings(std::istream& in, RatingScale scale = {});

/// Writes the dataset back in the same tab-separated format. Parsing the
/// output yields an identical dataset.
void write_ratings(const RatingDataset& dataset, std::ostream& out);

/// Parses MovieLens u.item lines (pipe-separated, trailing 19 genre flags).
/// Non-ASCII title bytes are replaced, never fatal.
ItemCatalog parse_items(std::istream& in, int n_genres = 19);

/// Parses a `customer_id,timestamp,amount` CSV. Timestamps are integer epoch
/// seconds or RFC-3339 UTC. Negative amounts raise ValueError.
TransactionLog parse_transactions(std::istream& in);

/// Rating mean/median/population-stddev, per-value counts, and the sparsity
/// of the user-item matrix. Throws EmptyDataset.
StatsSummary dataset_stats(const RatingDataset& dataset);

}  // namespace reckit
