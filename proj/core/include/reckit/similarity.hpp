#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "reckit/ingest.hpp"
#include "reckit/preprocess.hpp"
#include "reckit/types.hpp"

namespace reckit {

/// Sparse entity-entity similarity scores in [-1, 1]. Rows are stored
/// explicitly per entity; knn_fit and compute_S produce symmetric contents.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(Axis axis, std::vector<std::vector<MatrixEntry>> rows);

  Axis axis() const { return axis_; }
  int size() const { return static_cast<int>(rows_.size()); }
  std::span<const MatrixEntry> row(int entity) const {
    const auto& r = rows_[static_cast<std::size_t>(entity)];
    return {r.data(), r.size()};
  }
  /// 0.0 when no score is stored for the pair.
  double get(int a, int b) const;

 private:
  Axis axis_ = Axis::kUser;
  std::vector<std::vector<MatrixEntry>> rows_;
};

/// dot(a,b) / (|a| |b|); 0 when either norm is zero.
/// Throws DimensionError on length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
  int id = 0;
  double similarity = 0.0;
};

/// Memory-based CF model. Similarities are adjusted cosine: each entity's
/// own mean is subtracted and both the dot product and the norms run over
/// co-rated entries only, so entities with no overlap score 0 (no evidence).
struct KnnModel {
  Axis mode = Axis::kUser;
  int neighborhood_size = 0;
  SimilarityMatrix similarity;
  std::vector<std::vector<Neighbor>> neighbors;  // positive similarity, descending
  std::vector<double> entity_means;              // means along the fitted axis
  std::vector<double> user_means;                // fallback means in user space
  SparseRatingMatrix ratings;                    // entity-major (transposed in item mode)
  RatingScale scale;
};

/// Item mode runs the identical computation on the transposed matrix.
KnnModel knn_fit(const SparseRatingMatrix& matrix, Axis mode, int neighborhood_size,
                 RatingScale scale = {});

/// Similarity-weighted average of neighbors' mean-centered ratings,
/// de-centered and clamped; falls back to the user's mean when no neighbor
/// rated the item. Throws ColdStart for out-of-range ids.
double knn_predict(const KnnModel& model, int user, int item);

/// Content profile: mean feature vector of the user's liked items.
struct UserProfile {
  std::int64_t user_id = 0;
  std::vector<double> vector;
  double like_threshold = 4.0;
};

/// Aggregates feature vectors of items the user rated at or above
/// like_threshold. Throws ColdStart when the user liked nothing.
UserProfile build_user_profile(const RatingDataset& dataset, const ItemCatalog& catalog,
                               std::int64_t user_id, double like_threshold = 4.0);

/// Cosine between the profile and an item's features; 0 for a zero item
/// vector.
double cbf_predict(const UserProfile& profile, const ItemFeatures& item);

/// Content-based model over a whole dataset: one profile per dense user,
/// item features aligned to dense item ids. Prediction is the profile/item
/// cosine; users with no liked items cold-start.
struct CbfModel {
  std::size_t feature_dim = 0;
  double like_threshold = 4.0;
  std::vector<std::vector<double>> profiles;      // indexed by dense user
  std::vector<bool> has_profile;
  std::vector<std::vector<double>> item_features;  // indexed by dense item

  double predict(int user, int item) const;
};

/// Items missing from the catalog get zero feature vectors (they score 0).
CbfModel cbf_fit(const RatingDataset& dataset, const ItemCatalog& catalog,
                 double like_threshold = 4.0);

}  // namespace reckit
