#include "reckit/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "reckit/errors.hpp"

namespace reckit {

SimilarityMatrix::SimilarityMatrix(Axis axis, std::vector<std::vector<MatrixEntry>> rows)
    : axis_(axis), rows_(std::move(rows)) {
  for (auto& row : rows_)
    std::sort(row.begin(), row.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.index < b.index; });
}

double SimilarityMatrix::get(int a, int b) const {
  const auto entries = row(a);
  auto it = std::lower_bound(entries.begin(), entries.end(), b,
                             [](const MatrixEntry& e, int i) { return e.index < i; });
  if (it == entries.end() || it->index != b) return 0.0;
  return it->value;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

KnnModel knn_fit(const SparseRatingMatrix& matrix, Axis mode, int neighborhood_size,
                 RatingScale scale) {
  if (matrix.nnz() == 0) throw EmptyDataset("knn_fit on an empty matrix");
  if (neighborhood_size < 1) throw InvalidK("neighborhood size must be >= 1");

  KnnModel model;
  model.mode = mode;
  model.neighborhood_size = neighborhood_size;
  model.scale = scale;
  model.user_means.resize(static_cast<std::size_t>(matrix.n_users()));
  for (int u = 0; u < matrix.n_users(); ++u)
    model.user_means[static_cast<std::size_t>(u)] = matrix.row_mean(u);

  model.ratings = mode == Axis::kUser ? matrix : matrix.transposed();
  const SparseRatingMatrix& m = model.ratings;
  const int n = m.n_users();

  model.entity_means.resize(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e) model.entity_means[static_cast<std::size_t>(e)] = m.row_mean(e);

  // Pairwise accumulation through shared raters: for every co-rated pair
  // (a, b) collect sum(ca*cb), sum(ca^2), sum(cb^2) over the overlap only.
  std::vector<std::vector<MatrixEntry>> sim_rows(static_cast<std::size_t>(n));
  std::vector<double> dot_acc(static_cast<std::size_t>(n), 0.0);
  std::vector<double> self_acc(static_cast<std::size_t>(n), 0.0);
  std::vector<double> other_acc(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> touched;

  for (int a = 0; a < n; ++a) {
    touched.clear();
    const double mean_a = model.entity_means[static_cast<std::size_t>(a)];
    for (const auto& ra : m.row(a)) {
      const double ca = ra.value - mean_a;
      for (const auto& rb : m.col(ra.index)) {
        const int b = rb.index;
        if (b <= a) continue;
        const double cb = rb.value - model.entity_means[static_cast<std::size_t>(b)];
        if (!seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = true;
          touched.push_back(b);
        }
        dot_acc[static_cast<std::size_t>(b)] += ca * cb;
        self_acc[static_cast<std::size_t>(b)] += ca * ca;
        other_acc[static_cast<std::size_t>(b)] += cb * cb;
      }
    }
    for (int b : touched) {
      const double na = self_acc[static_cast<std::size_t>(b)];
      const double nb = other_acc[static_cast<std::size_t>(b)];
      double sim = 0.0;
      if (na > 0.0 && nb > 0.0)
        sim = dot_acc[static_cast<std::size_t>(b)] / (std::sqrt(na) * std::sqrt(nb));
      if (sim != 0.0) {
        sim_rows[static_cast<std::size_t>(a)].push_back({b, sim});
        sim_rows[static_cast<std::size_t>(b)].push_back({a, sim});
      }
      dot_acc[static_cast<std::size_t>(b)] = 0.0;
      self_acc[static_cast<std::size_t>(b)] = 0.0;
      other_acc[static_cast<std::size_t>(b)] = 0.0;
      seen[static_cast<std::size_t>(b)] = false;
    }
  }
  // Unit diagonal for entities with a nonzero centered vector.
  for (int a = 0; a < n; ++a) {
    double norm = 0.0;
    const double mean_a = model.entity_means[static_cast<std::size_t>(a)];
    for (const auto& ra : m.row(a)) norm += (ra.value - mean_a) * (ra.value - mean_a);
    if (norm > 0.0) sim_rows[static_cast<std::size_t>(a)].push_back({a, 1.0});
  }

  model.neighbors.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    std::vector<Neighbor> candidates;
    for (const auto& entry : sim_rows[static_cast<std::size_t>(a)]) {
      if (entry.index == a || entry.value <= 0.0) continue;
      candidates.push_back({entry.index, entry.value});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Neighbor& x, const Neighbor& y) {
      if (x.similarity != y.similarity) return x.similarity > y.similarity;
      return x.id < y.id;
    });
    if (candidates.size() > static_cast<std::size_t>(neighborhood_size))
      candidates.resize(static_cast<std::size_t>(neighborhood_size));
    model.neighbors[static_cast<std::size_t>(a)] = std::move(candidates);
  }
  model.similarity = SimilarityMatrix(mode, std::move(sim_rows));
  return model;
}

double knn_predict(const KnnModel& model, int user, int item) {
  const int n_users = model.mode == Axis::kUser ? model.ratings.n_users() : model.ratings.n_items();
  const int n_items = model.mode == Axis::kUser ? model.ratings.n_items() : model.ratings.n_users();
  if (user < 0 || user >= n_users || item < 0 || item >= n_items)
    throw ColdStart("knn_predict: unknown user or item");

  // In item mode the roles swap: the "entity" is the item and its neighbors
  // are other items the user has rated.
  const int entity = model.mode == Axis::kUser ? user : item;
  const int target = model.mode == Axis::kUser ? item : user;

  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& neighbor : model.neighbors[static_cast<std::size_t>(entity)]) {
    const auto rating = model.ratings.at(neighbor.id, target);
    if (!rating.has_value()) continue;
    const double centered =
        *rating - model.entity_means[static_cast<std::size_t>(neighbor.id)];
    numerator += neighbor.similarity * centered;
    denominator += std::abs(neighbor.similarity);
  }
  const double user_mean = model.user_means[static_cast<std::size_t>(user)];
  if (denominator == 0.0) return model.scale.clamp(user_mean);
  const double base = model.entity_means[static_cast<std::size_t>(entity)];
  return model.scale.clamp(base + numerator / denominator);
}

UserProfile build_user_profile(const RatingDataset& dataset, const ItemCatalog& catalog,
                               std::int64_t user_id, double like_threshold) {
  UserProfile profile;
  profile.user_id = user_id;
  profile.like_threshold = like_threshold;
  profile.vector.assign(catalog.feature_dim(), 0.0);
  std::size_t liked = 0;
  for (const auto& interaction : dataset.interactions()) {
    if (interaction.user_id != user_id || interaction.rating < like_threshold) continue;
    const ItemFeatures* item = catalog.find(interaction.item_id);
    if (item == nullptr) continue;
    for (std::size_t f = 0; f < profile.vector.size(); ++f)
      profile.vector[f] += item->features[f];
    ++liked;
  }
  if (liked == 0)
    throw ColdStart("user " + std::to_string(user_id) + " has no items rated >= threshold");
  for (double& v : profile.vector) v /= static_cast<double>(liked);
  return profile;
}

double cbf_predict(const UserProfile& profile, const ItemFeatures& item) {
  return cosine_similarity(profile.vector, item.features);
}

double CbfModel::predict(int user, int item) const {
  if (user < 0 || user >= static_cast<int>(profiles.size()) || item < 0 ||
      item >= static_cast<int>(item_features.size()))
    throw ColdStart("cbf: unknown user or item");
  if (!has_profile[static_cast<std::size_t>(user)])
    throw ColdStart("cbf: user has no profile");
  return cosine_similarity(profiles[static_cast<std::size_t>(user)],
                           item_features[static_cast<std::size_t>(item)]);
}

CbfModel cbf_fit(const RatingDataset& dataset, const ItemCatalog& catalog,
                 double like_threshold) {
  if (dataset.empty()) throw EmptyDataset("cbf_fit of an empty dataset");
  CbfModel model;
  model.feature_dim = catalog.feature_dim();
  model.like_threshold = like_threshold;

  model.item_features.assign(static_cast<std::size_t>(dataset.n_items()),
                             std::vector<double>(model.feature_dim, 0.0));
  for (int i = 0; i < dataset.n_items(); ++i) {
    const ItemFeatures* item = catalog.find(dataset.items().raw(i));
    if (item != nullptr) model.item_features[static_cast<std::size_t>(i)] = item->features;
  }

  model.profiles.assign(static_cast<std::size_t>(dataset.n_users()),
                        std::vector<double>(model.feature_dim, 0.0));
  model.has_profile.assign(static_cast<std::size_t>(dataset.n_users()), false);
  std::vector<std::size_t> liked(static_cast<std::size_t>(dataset.n_users()), 0);
  for (const auto& interaction : dataset.interactions()) {
    if (interaction.rating < like_threshold) continue;
    const auto u = static_cast<std::size_t>(*dataset.users().dense(interaction.user_id));
    const auto i = static_cast<std::size_t>(*dataset.items().dense(interaction.item_id));
    for (std::size_t f = 0; f < model.feature_dim; ++f)
      model.profiles[u][f] += model.item_features[i][f];
    ++liked[u];
  }
  for (std::size_t u = 0; u < liked.size(); ++u) {
    if (liked[u] == 0) continue;
    model.has_profile[u] = true;
    for (double& v : model.profiles[u]) v /= static_cast<double>(liked[u]);
  }
  return model;
}

}  // namespace reckit
