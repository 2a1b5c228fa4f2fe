#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reckit/ensemble.hpp"
#include "reckit/factor.hpp"
#include "reckit/graph.hpp"
#include "reckit/predictor.hpp"
#include "reckit/similarity.hpp"
#include "reckit/types.hpp"

namespace reckit {

/// Versioned model container. Carries the training dataset's id maps so a
/// loaded model can translate external ids on its own. Doubles are written
/// with shortest round-trip formatting, so numeric payloads reload exactly.
struct ModelBundle {
  std::string algorithm;
  RatingScale scale;
  std::vector<std::int64_t> user_ids;  // dense order of the training data
  std::vector<std::int64_t> item_ids;
  nlohmann::json payload;
};

void save_model(const ModelBundle& bundle, std::ostream& out);
ModelBundle load_model(std::istream& in);

nlohmann::json mf_to_json(const MfModel& model);
MfModel mf_from_json(const nlohmann::json& j);

nlohmann::json tf_to_json(const TensorModel& model);
TensorModel tf_from_json(const nlohmann::json& j);

nlohmann::json fm_to_json(const FmModel& model);
FmModel fm_from_json(const nlohmann::json& j);

/// The kNN payload carries what prediction needs (neighbor lists, means,
/// the rating matrix); the full similarity matrix is rebuilt by refitting,
/// not persisted.
nlohmann::json knn_to_json(const KnnModel& model);
KnnModel knn_from_json(const nlohmann::json& j);

nlohmann::json linear_model_to_json(const LinearModel& model);
LinearModel linear_model_from_json(const nlohmann::json& j);

nlohmann::json linear_rating_to_json(const RatingLinearModel& model);
RatingLinearModel linear_rating_from_json(const nlohmann::json& j);

nlohmann::json cbf_to_json(const CbfModel& model);
CbfModel cbf_from_json(const nlohmann::json& j);

/// SLIM (or random-walk) scorer payload: learned similarity plus the
/// training matrix the score aggregates over.
struct SlimRatingModel {
  SlimModel slim;
  SparseRatingMatrix ratings;
  RatingScale scale;

  double predict(int user, int item) const {
    return slim_predict(slim, ratings, user, item, scale);
  }
};

nlohmann::json slim_rating_to_json(const SlimRatingModel& model);
SlimRatingModel slim_rating_from_json(const nlohmann::json& j);

struct RwRatingModel {
  SimilarityMatrix similarity;
  SparseRatingMatrix ratings;
  RatingScale scale;

  double predict(int user, int item) const {
    return rw_predict(similarity, ratings, user, item, scale);
  }
};

nlohmann::json rw_rating_to_json(const RwRatingModel& model);
RwRatingModel rw_rating_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const SparseRatingMatrix& matrix);
SparseRatingMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json similarity_to_json(const SimilarityMatrix& matrix);
SimilarityMatrix similarity_from_json(const nlohmann::json& j);

/// Rebuilds a predictor from any serialized payload, including the
/// ensemble schemes (weighted, bagging, boosting, stacking, hybrid), whose
/// member payloads nest recursively.
PredictFn make_predictor(const std::string& algorithm, const nlohmann::json& payload);
PredictFn make_predictor(const ModelBundle& bundle);

}  // namespace reckit
