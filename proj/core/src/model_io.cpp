#include "reckit/model_io.hpp"

#include <istream>
#include <ostream>
#include <tuple>

#include "reckit/errors.hpp"
#include "reckit/linalg.hpp"

namespace reckit {

namespace {

nlohmann::json scale_to_json(const RatingScale& scale) {
  return nlohmann::json{{"min", scale.min}, {"max", scale.max}};
}

RatingScale scale_from_json(const nlohmann::json& j) {
  return {j.at("min").get<double>(), j.at("max").get<double>()};
}

nlohmann::json optional_scale_to_json(const std::optional<RatingScale>& scale) {
  if (!scale.has_value()) return nullptr;
  return scale_to_json(*scale);
}

std::optional<RatingScale> optional_scale_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return scale_from_json(j);
}

}  // namespace

void save_model(const ModelBundle& bundle, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "reckit-model";
  j["version"] = 1;
  j["algorithm"] = bundle.algorithm;
  j["scale"] = scale_to_json(bundle.scale);
  j["user_ids"] = bundle.user_ids;
  j["item_ids"] = bundle.item_ids;
  j["payload"] = bundle.payload;
  out << j.dump(1) << '\n';
}

ModelBundle load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model container is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "reckit-model")
    throw ParseError("not a reckit model container");
  if (j.value("version", 0) != 1) throw ParseError("unsupported model container version");
  ModelBundle bundle;
  bundle.algorithm = j.at("algorithm").get<std::string>();
  bundle.scale = scale_from_json(j.at("scale"));
  bundle.user_ids = j.at("user_ids").get<std::vector<std::int64_t>>();
  bundle.item_ids = j.at("item_ids").get<std::vector<std::int64_t>>();
  bundle.payload = j.at("payload");
  return bundle;
}

nlohmann::json mf_to_json(const MfModel& model) {
  nlohmann::json j;
  j["n_users"] = model.n_users;
  j["n_items"] = model.n_items;
  j["k"] = model.k;
  j["lambda"] = model.lambda;
  j["user_factors"] = model.user_factors;
  j["item_factors"] = model.item_factors;
  j["global_offset"] = model.global_offset;
  j["user_offsets"] = model.user_offsets;
  j["item_offsets"] = model.item_offsets;
  j["scale"] = optional_scale_to_json(model.scale);
  return j;
}

MfModel mf_from_json(const nlohmann::json& j) {
  MfModel model;
  model.n_users = j.at("n_users").get<int>();
  model.n_items = j.at("n_items").get<int>();
  model.k = j.at("k").get<int>();
  model.lambda = j.at("lambda").get<double>();
  model.user_factors = j.at("user_factors").get<std::vector<double>>();
  model.item_factors = j.at("item_factors").get<std::vector<double>>();
  model.global_offset = j.at("global_offset").get<double>();
  model.user_offsets = j.at("user_offsets").get<std::vector<double>>();
  model.item_offsets = j.at("item_offsets").get<std::vector<double>>();
  model.scale = optional_scale_from_json(j.at("scale"));
  return model;
}

nlohmann::json tf_to_json(const TensorModel& model) {
  nlohmann::json j;
  j["n_users"] = model.n_users;
  j["n_items"] = model.n_items;
  j["n_contexts"] = model.n_contexts;
  j["k"] = model.k;
  j["lambda"] = model.lambda;
  j["user_factors"] = model.user_factors;
  j["item_factors"] = model.item_factors;
  j["context_factors"] = model.context_factors;
  j["scale"] = optional_scale_to_json(model.scale);
  j["bin_edges"] = model.bin_edges;
  return j;
}

TensorModel tf_from_json(const nlohmann::json& j) {
  TensorModel model;
  model.n_users = j.at("n_users").get<int>();
  model.n_items = j.at("n_items").get<int>();
  model.n_contexts = j.at("n_contexts").get<int>();
  model.k = j.at("k").get<int>();
  model.lambda = j.at("lambda").get<double>();
  model.user_factors = j.at("user_factors").get<std::vector<double>>();
  model.item_factors = j.at("item_factors").get<std::vector<double>>();
  model.context_factors = j.at("context_factors").get<std::vector<double>>();
  model.scale = optional_scale_from_json(j.at("scale"));
  model.bin_edges = j.at("bin_edges").get<std::vector<std::int64_t>>();
  return model;
}

nlohmann::json fm_to_json(const FmModel& model) {
  nlohmann::json j;
  j["n_users"] = model.layout.n_users;
  j["n_items"] = model.layout.n_items;
  j["n_extras"] = model.layout.n_extras;
  j["k"] = model.k;
  j["lambda"] = model.lambda;
  j["w0"] = model.w0;
  j["w"] = model.w;
  j["v"] = model.v;
  j["target_offset"] = model.target_offset;
  j["scale"] = optional_scale_to_json(model.scale);
  return j;
}

FmModel fm_from_json(const nlohmann::json& j) {
  FmModel model;
  model.layout.n_users = j.at("n_users").get<int>();
  model.layout.n_items = j.at("n_items").get<int>();
  model.layout.n_extras = j.at("n_extras").get<int>();
  model.k = j.at("k").get<int>();
  model.lambda = j.at("lambda").get<double>();
  model.w0 = j.at("w0").get<double>();
  model.w = j.at("w").get<std::vector<double>>();
  model.v = j.at("v").get<std::vector<double>>();
  model.target_offset = j.at("target_offset").get<double>();
  model.scale = optional_scale_from_json(j.at("scale"));
  return model;
}

nlohmann::json matrix_to_json(const SparseRatingMatrix& matrix) {
  nlohmann::json j;
  j["n_users"] = matrix.n_users();
  j["n_items"] = matrix.n_items();
  nlohmann::json users = nlohmann::json::array();
  nlohmann::json items = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (int u = 0; u < matrix.n_users(); ++u) {
    for (const auto& entry : matrix.row(u)) {
      users.push_back(u);
      items.push_back(entry.index);
      values.push_back(entry.value);
    }
  }
  j["users"] = users;
  j["items"] = items;
  j["values"] = values;
  return j;
}

SparseRatingMatrix matrix_from_json(const nlohmann::json& j) {
  const auto users = j.at("users").get<std::vector<int>>();
  const auto items = j.at("items").get<std::vector<int>>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (users.size() != items.size() || users.size() != values.size())
    throw ParseError("matrix payload arrays disagree in length");
  std::vector<std::tuple<int, int, double>> triples;
  triples.reserve(users.size());
  for (std::size_t i = 0; i < users.size(); ++i)
    triples.emplace_back(users[i], items[i], values[i]);
  return SparseRatingMatrix::from_triples(j.at("n_users").get<int>(),
                                          j.at("n_items").get<int>(), triples);
}

nlohmann::json similarity_to_json(const SimilarityMatrix& matrix) {
  nlohmann::json j;
  j["axis"] = matrix.axis() == Axis::kUser ? "user" : "item";
  j["size"] = matrix.size();
  nlohmann::json rows = nlohmann::json::array();
  for (int a = 0; a < matrix.size(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& entry : matrix.row(a)) {
      row.push_back(entry.index);
      row.push_back(entry.value);
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = rows;
  return j;
}

SimilarityMatrix similarity_from_json(const nlohmann::json& j) {
  const int size = j.at("size").get<int>();
  std::vector<std::vector<MatrixEntry>> rows(static_cast<std::size_t>(size));
  const auto& row_arrays = j.at("rows");
  for (int a = 0; a < size; ++a) {
    const auto& row = row_arrays.at(static_cast<std::size_t>(a));
    for (std::size_t p = 0; p + 1 < row.size(); p += 2)
      rows[static_cast<std::size_t>(a)].push_back(
          {row.at(p).get<int>(), row.at(p + 1).get<double>()});
  }
  const Axis axis = j.at("axis").get<std::string>() == "user" ? Axis::kUser : Axis::kItem;
  return SimilarityMatrix(axis, std::move(rows));
}

nlohmann::json knn_to_json(const KnnModel& model) {
  nlohmann::json j;
  j["mode"] = model.mode == Axis::kUser ? "user" : "item";
  j["neighborhood_size"] = model.neighborhood_size;
  nlohmann::json neighbors = nlohmann::json::array();
  for (const auto& list : model.neighbors) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& neighbor : list) {
      row.push_back(neighbor.id);
      row.push_back(neighbor.similarity);
    }
    neighbors.push_back(std::move(row));
  }
  j["neighbors"] = neighbors;
  j["entity_means"] = model.entity_means;
  j["user_means"] = model.user_means;
  j["ratings"] = matrix_to_json(model.ratings);
  j["scale"] = scale_to_json(model.scale);
  return j;
}

KnnModel knn_from_json(const nlohmann::json& j) {
  KnnModel model;
  model.mode = j.at("mode").get<std::string>() == "user" ? Axis::kUser : Axis::kItem;
  model.neighborhood_size = j.at("neighborhood_size").get<int>();
  for (const auto& row : j.at("neighbors")) {
    std::vector<Neighbor> list;
    for (std::size_t p = 0; p + 1 < row.size(); p += 2)
      list.push_back({row.at(p).get<int>(), row.at(p + 1).get<double>()});
    model.neighbors.push_back(std::move(list));
  }
  model.entity_means = j.at("entity_means").get<std::vector<double>>();
  model.user_means = j.at("user_means").get<std::vector<double>>();
  model.ratings = matrix_from_json(j.at("ratings"));
  model.scale = scale_from_json(j.at("scale"));
  return model;
}

nlohmann::json linear_model_to_json(const LinearModel& model) {
  nlohmann::json j;
  j["bias"] = model.bias;
  j["weights"] = model.weights;
  j["schema"] = model.schema;
  j["scale"] = optional_scale_to_json(model.scale);
  return j;
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  LinearModel model;
  model.bias = j.at("bias").get<double>();
  model.weights = j.at("weights").get<std::vector<double>>();
  model.schema = j.at("schema").get<std::vector<std::string>>();
  model.scale = optional_scale_from_json(j.at("scale"));
  return model;
}

nlohmann::json linear_rating_to_json(const RatingLinearModel& model) {
  nlohmann::json j;
  j["model"] = linear_model_to_json(model.model);
  j["user_mean"] = model.user_mean;
  j["item_mean"] = model.item_mean;
  j["user_count"] = model.user_count;
  j["item_count"] = model.item_count;
  return j;
}

RatingLinearModel linear_rating_from_json(const nlohmann::json& j) {
  RatingLinearModel model;
  model.model = linear_model_from_json(j.at("model"));
  model.user_mean = j.at("user_mean").get<std::vector<double>>();
  model.item_mean = j.at("item_mean").get<std::vector<double>>();
  model.user_count = j.at("user_count").get<std::vector<double>>();
  model.item_count = j.at("item_count").get<std::vector<double>>();
  return model;
}

nlohmann::json cbf_to_json(const CbfModel& model) {
  nlohmann::json j;
  j["feature_dim"] = model.feature_dim;
  j["like_threshold"] = model.like_threshold;
  j["profiles"] = model.profiles;
  std::vector<int> has(model.has_profile.size());
  for (std::size_t i = 0; i < has.size(); ++i) has[i] = model.has_profile[i] ? 1 : 0;
  j["has_profile"] = has;
  j["item_features"] = model.item_features;
  return j;
}

CbfModel cbf_from_json(const nlohmann::json& j) {
  CbfModel model;
  model.feature_dim = j.at("feature_dim").get<std::size_t>();
  model.like_threshold = j.at("like_threshold").get<double>();
  model.profiles = j.at("profiles").get<std::vector<std::vector<double>>>();
  const auto has = j.at("has_profile").get<std::vector<int>>();
  model.has_profile.assign(has.size(), false);
  for (std::size_t i = 0; i < has.size(); ++i) model.has_profile[i] = has[i] != 0;
  model.item_features = j.at("item_features").get<std::vector<std::vector<double>>>();
  return model;
}

nlohmann::json slim_rating_to_json(const SlimRatingModel& model) {
  nlohmann::json j;
  j["n_items"] = model.slim.n_items;
  j["rank"] = model.slim.rank;
  j["lambda"] = model.slim.lambda;
  j["w"] = model.slim.w;
  j["h"] = model.slim.h;
  j["ratings"] = matrix_to_json(model.ratings);
  j["scale"] = scale_to_json(model.scale);
  return j;
}

SlimRatingModel slim_rating_from_json(const nlohmann::json& j) {
  SlimRatingModel model;
  model.slim.n_items = j.at("n_items").get<int>();
  model.slim.rank = j.at("rank").get<int>();
  model.slim.lambda = j.at("lambda").get<double>();
  model.slim.w = j.at("w").get<std::vector<double>>();
  model.slim.h = j.at("h").get<std::vector<double>>();
  model.ratings = matrix_from_json(j.at("ratings"));
  model.scale = scale_from_json(j.at("scale"));
  return model;
}

nlohmann::json rw_rating_to_json(const RwRatingModel& model) {
  nlohmann::json j;
  j["similarity"] = similarity_to_json(model.similarity);
  j["ratings"] = matrix_to_json(model.ratings);
  j["scale"] = scale_to_json(model.scale);
  return j;
}

RwRatingModel rw_rating_from_json(const nlohmann::json& j) {
  RwRatingModel model;
  model.similarity = similarity_from_json(j.at("similarity"));
  model.ratings = matrix_from_json(j.at("ratings"));
  model.scale = scale_from_json(j.at("scale"));
  return model;
}

PredictFn make_predictor(const std::string& algorithm, const nlohmann::json& payload) {
  if (algorithm == "mf_sgd" || algorithm == "mf_als") {
    auto model = std::make_shared<MfModel>(mf_from_json(payload));
    return [model](int u, int i) { return mf_predict(*model, u, i); };
  }
  if (algorithm == "tensor") {
    auto model = std::make_shared<TensorModel>(tf_from_json(payload));
    // Rating prediction uses the most recent context bin as the default.
    const int context = model->n_contexts - 1;
    return [model, context](int u, int i) { return tf_predict(*model, u, i, context); };
  }
  if (algorithm == "fm") {
    auto model = std::make_shared<FmModel>(fm_from_json(payload));
    return [model](int u, int i) {
      return fm_predict(*model, fm_encode(model->layout, u, i));
    };
  }
  if (algorithm == "knn_user" || algorithm == "knn_item") {
    auto model = std::make_shared<KnnModel>(knn_from_json(payload));
    return [model](int u, int i) { return knn_predict(*model, u, i); };
  }
  if (algorithm == "linear") {
    auto model = std::make_shared<RatingLinearModel>(linear_rating_from_json(payload));
    return [model](int u, int i) { return model->predict(u, i); };
  }
  if (algorithm == "cbf") {
    auto model = std::make_shared<CbfModel>(cbf_from_json(payload));
    return [model](int u, int i) { return model->predict(u, i); };
  }
  if (algorithm == "slim") {
    auto model = std::make_shared<SlimRatingModel>(slim_rating_from_json(payload));
    return [model](int u, int i) { return model->predict(u, i); };
  }
  if (algorithm == "random_walk") {
    auto model = std::make_shared<RwRatingModel>(rw_rating_from_json(payload));
    return [model](int u, int i) { return model->predict(u, i); };
  }
  if (algorithm == "bagging") {
    auto ensemble = std::make_shared<BaggingEnsemble>();
    for (const auto& member : payload.at("members"))
      ensemble->members.push_back(mf_from_json(member));
    return [ensemble](int u, int i) { return ensemble->predict(u, i); };
  }
  if (algorithm == "boosting") {
    auto ensemble = std::make_shared<BoostingEnsemble>();
    ensemble->initial = payload.at("initial").get<double>();
    ensemble->shrinkage = payload.at("shrinkage").get<double>();
    ensemble->scale = optional_scale_from_json(payload.at("scale"));
    for (const auto& stage : payload.at("stages"))
      ensemble->stages.push_back(mf_from_json(stage));
    return [ensemble](int u, int i) { return ensemble->predict(u, i); };
  }
  if (algorithm == "weighted") {
    auto members = std::make_shared<std::vector<PredictFn>>();
    auto weights = std::make_shared<std::vector<double>>(
        payload.at("weights").get<std::vector<double>>());
    for (const auto& member : payload.at("members"))
      members->push_back(make_predictor(member.at("algorithm").get<std::string>(),
                                        member.at("payload")));
    return [members, weights](int u, int i) {
      std::vector<double> predictions(members->size());
      for (std::size_t m = 0; m < members->size(); ++m) predictions[m] = (*members)[m](u, i);
      return weighted_combine(predictions, *weights);
    };
  }
  if (algorithm == "stacking") {
    auto members = std::make_shared<std::vector<PredictFn>>();
    for (const auto& member : payload.at("members"))
      members->push_back(make_predictor(member.at("algorithm").get<std::string>(),
                                        member.at("payload")));
    auto meta = std::make_shared<LinearModel>(linear_model_from_json(payload.at("meta")));
    auto scale = std::make_shared<std::optional<RatingScale>>(
        optional_scale_from_json(payload.at("scale")));
    return [members, meta, scale](int u, int i) {
      std::vector<double> features(members->size());
      for (std::size_t m = 0; m < members->size(); ++m) features[m] = (*members)[m](u, i);
      double value = linear_predict(*meta, features);
      if (scale->has_value()) value = (*scale)->clamp(value);
      return value;
    };
  }
  if (algorithm == "hybrid") {
    const double beta = payload.at("beta").get<double>();
    const RatingScale scale = scale_from_json(payload.at("scale"));
    PredictFn cf = make_predictor(payload.at("cf").at("algorithm").get<std::string>(),
                                  payload.at("cf").at("payload"));
    PredictFn cbf = make_predictor(payload.at("cbf").at("algorithm").get<std::string>(),
                                   payload.at("cbf").at("payload"));
    // CBF emits cosine in [0, 1]; map it onto the rating scale so the blend
    // operates in one unit system.
    return [beta, scale, cf = std::move(cf), cbf = std::move(cbf)](int u, int i) {
      const double cbf_rating = scale.min + cbf(u, i) * scale.width();
      return hybrid_weighted(cf(u, i), cbf_rating, beta);
    };
  }
  throw InvalidConfig("unknown model algorithm '" + algorithm + "'");
}

PredictFn make_predictor(const ModelBundle& bundle) {
  return make_predictor(bundle.algorithm, bundle.payload);
}

}  // namespace reckit
