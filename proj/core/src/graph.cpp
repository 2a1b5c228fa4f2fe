#include "reckit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "reckit/errors.hpp"
#include "reckit/random.hpp"

namespace reckit {

std::size_t InteractionGraph::n_edges() const {
  std::size_t twice = 0;
  for (const auto& edges : adjacency_) twice += edges.size();
  return twice / 2;
}

InteractionGraph build_graph(const RatingDataset& dataset, double like_threshold) {
  if (dataset.empty()) throw EmptyDataset("build_graph of an empty dataset");
  const int n = dataset.n_items();

  std::vector<std::vector<int>> liked_by_user(static_cast<std::size_t>(dataset.n_users()));
  for (const auto& interaction : dataset.interactions()) {
    if (interaction.rating < like_threshold) continue;
    liked_by_user[static_cast<std::size_t>(*dataset.users().dense(interaction.user_id))]
        .push_back(*dataset.items().dense(interaction.item_id));
  }

  std::map<std::pair<int, int>, double> weights;
  for (auto& liked : liked_by_user) {
    std::sort(liked.begin(), liked.end());
    for (std::size_t a = 0; a < liked.size(); ++a)
      for (std::size_t b = a + 1; b < liked.size(); ++b)
        weights[{liked[a], liked[b]}] += 1.0;
  }

  std::vector<std::vector<WeightedEdge>> adjacency(static_cast<std::size_t>(n));
  for (const auto& [pair, weight] : weights) {
    adjacency[static_cast<std::size_t>(pair.first)].push_back({pair.second, weight});
    adjacency[static_cast<std::size_t>(pair.second)].push_back({pair.first, weight});
  }
  for (auto& edges : adjacency)
    std::sort(edges.begin(), edges.end(),
              [](const WeightedEdge& a, const WeightedEdge& b) { return a.node < b.node; });
  return InteractionGraph(n, adjacency);
}

SimilarityMatrix rw_similarity(const InteractionGraph& graph, const WalkConfig& config) {
  if (config.walk_length < 2) throw InvalidConfig("walk_length must be >= 2");
  if (config.walks_per_seed < 1) throw InvalidConfig("walks_per_seed must be >= 1");
  if (graph.n_edges() == 0) throw EmptyInput("rw_similarity on an edgeless graph");

  const int n = graph.n_nodes();
  std::vector<std::vector<MatrixEntry>> rows(static_cast<std::size_t>(n));
  std::vector<int> visit_count(static_cast<std::size_t>(n), 0);
  std::vector<int> visited_nodes;
  std::vector<bool> visited_flag(static_cast<std::size_t>(n), false);

  for (int seed_node = 0; seed_node < n; ++seed_node) {
    if (graph.neighbors(seed_node).empty()) continue;  // isolated: all-zero row
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(seed_node)));
    std::fill(visit_count.begin(), visit_count.end(), 0);

    for (int walk = 0; walk < config.walks_per_seed; ++walk) {
      visited_nodes.clear();
      int current = seed_node;
      for (int step = 0; step < config.walk_length; ++step) {
        const auto edges = graph.neighbors(current);
        if (edges.empty()) break;
        double total = 0.0;
        for (const auto& edge : edges) total += edge.weight;
        double draw = rng.uniform() * total;
        int next = edges.back().node;
        for (const auto& edge : edges) {
          draw -= edge.weight;
          if (draw <= 0.0) {
            next = edge.node;
            break;
          }
        }
        current = next;
        if (current != seed_node && !visited_flag[static_cast<std::size_t>(current)]) {
          visited_flag[static_cast<std::size_t>(current)] = true;
          visited_nodes.push_back(current);
        }
      }
      for (int node : visited_nodes) {
        visit_count[static_cast<std::size_t>(node)] += 1;
        visited_flag[static_cast<std::size_t>(node)] = false;
      }
    }

    auto& row = rows[static_cast<std::size_t>(seed_node)];
    for (int node = 0; node < n; ++node) {
      if (visit_count[static_cast<std::size_t>(node)] == 0) continue;
      row.push_back({node, static_cast<double>(visit_count[static_cast<std::size_t>(node)]) /
                               static_cast<double>(config.walks_per_seed)});
    }
  }
  return SimilarityMatrix(Axis::kItem, std::move(rows));
}

DenseMatrix compute_S(const SparseRatingMatrix& matrix) {
  if (matrix.nnz() == 0) throw EmptyDataset("compute_S on an empty matrix");
  const int n = matrix.n_items();
  std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (const auto& entry : matrix.col(i)) norms[static_cast<std::size_t>(i)] += entry.value * entry.value;
    norms[static_cast<std::size_t>(i)] = std::sqrt(norms[static_cast<std::size_t>(i)]);
  }
  DenseMatrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (const auto& entry : matrix.col(i)) {
      // Accumulate dot products through shared users.
      for (const auto& other : matrix.row(entry.index)) {
        if (other.index < i) continue;
        s.at(i, other.index) += entry.value * other.value;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double denom = norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)];
      const double value = denom > 0.0 ? s.at(i, j) / denom : 0.0;
      s.at(i, j) = value;
      s.at(j, i) = value;
    }
  }
  for (int i = 0; i < n; ++i)
    if (norms[static_cast<std::size_t>(i)] > 0.0) s.at(i, i) = 1.0;
  return s;
}

double SlimModel::similarity(int i, int j) const {
  double sum = 0.0;
  for (int f = 0; f < rank; ++f)
    sum += w[static_cast<std::size_t>(f) * n_items + i] * h[static_cast<std::size_t>(f) * n_items + j];
  return sum;
}

double SlimModel::objective(const DenseMatrix& s) const {
  double value = 0.0;
  for (int i = 0; i < n_items; ++i)
    for (int j = 0; j < n_items; ++j) {
      const double e = s.at(i, j) - similarity(i, j);
      value += e * e;
    }
  double l1 = 0.0;
  for (double x : w) l1 += std::abs(x);
  for (double x : h) l1 += std::abs(x);
  return value + lambda * l1;
}

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Smooth part |S - W^T H|_F^2 and its gradients.
double slim_smooth(const SlimModel& m, const DenseMatrix& s, std::vector<double>* grad_w,
                   std::vector<double>* grad_h) {
  const int n = m.n_items;
  const int r = m.rank;
  if (grad_w != nullptr) grad_w->assign(m.w.size(), 0.0);
  if (grad_h != nullptr) grad_h->assign(m.h.size(), 0.0);
  double value = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double e = m.similarity(i, j) - s.at(i, j);  // residual of the fit
      value += e * e;
      if (grad_w != nullptr)
        for (int f = 0; f < r; ++f) {
          (*grad_w)[static_cast<std::size_t>(f) * n + i] +=
              2.0 * e * m.h[static_cast<std::size_t>(f) * n + j];
          (*grad_h)[static_cast<std::size_t>(f) * n + j] +=
              2.0 * e * m.w[static_cast<std::size_t>(f) * n + i];
        }
    }
  }
  return value;
}

}  // namespace

SlimModel slim_fit(const DenseMatrix& s, int rank, double lambda, const SlimConfig& config) {
  if (s.rows != s.cols) throw DimensionError("slim_fit: S must be square");
  if (rank < 1) throw InvalidK("slim_fit: rank must be >= 1");

  SlimModel model;
  model.n_items = s.rows;
  model.rank = rank;
  model.lambda = lambda;

  Rng rng(derive_seed(config.seed, "slim_init"));
  const double init = 0.1 / std::sqrt(static_cast<double>(rank));
  model.w.resize(static_cast<std::size_t>(rank) * s.rows);
  model.h.resize(static_cast<std::size_t>(rank) * s.rows);
  for (double& x : model.w) x = rng.normal(0.0, init);
  for (double& x : model.h) x = rng.normal(0.0, init);

  std::vector<double> grad_w;
  std::vector<double> grad_h;
  double step = config.initial_step;
  double objective = model.objective(s);
  model.objective_trace.push_back(objective);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    slim_smooth(model, s, &grad_w, &grad_h);

    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      SlimModel trial = model;
      for (std::size_t idx = 0; idx < trial.w.size(); ++idx)
        trial.w[idx] = soft_threshold(model.w[idx] - step * grad_w[idx], step * lambda);
      for (std::size_t idx = 0; idx < trial.h.size(); ++idx)
        trial.h[idx] = soft_threshold(model.h[idx] - step * grad_h[idx], step * lambda);
      trial.objective_trace = {};
      const double trial_objective = trial.objective(s);
      if (trial_objective <= objective) {
        model.w = std::move(trial.w);
        model.h = std::move(trial.h);
        objective = trial_objective;
        accepted = true;
        step *= 1.2;  // gentle growth after a successful step
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflowed: converged
    model.objective_trace.push_back(objective);
    if (!std::isfinite(objective)) throw DivergenceError("slim_fit objective not finite");
  }
  return model;
}

double slim_predict(const SlimModel& model, const SparseRatingMatrix& matrix, int user,
                    int item, std::optional<RatingScale> scale) {
  if (user < 0 || user >= matrix.n_users()) throw ColdStart("slim_predict: unknown user");
  if (item < 0 || item >= model.n_items) throw ColdStart("slim_predict: unknown item");
  const auto rated = matrix.row(user);
  if (rated.empty()) throw ColdStart("slim_predict: user has no ratings");

  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& entry : rated) {
    const double sim = model.similarity(item, entry.index);
    numerator += entry.value * sim;
    denominator += std::abs(sim);
  }
  double value;
  if (denominator == 0.0) {
    value = matrix.row_mean(user);
  } else {
    value = numerator / denominator;
  }
  if (scale.has_value()) value = scale->clamp(value);
  return value;
}

double rw_predict(const SimilarityMatrix& similarity, const SparseRatingMatrix& matrix,
                  int user, int item, std::optional<RatingScale> scale) {
  if (user < 0 || user >= matrix.n_users()) throw ColdStart("rw_predict: unknown user");
  if (item < 0 || item >= similarity.size()) throw ColdStart("rw_predict: unknown item");
  const auto rated = matrix.row(user);
  if (rated.empty()) throw ColdStart("rw_predict: user has no ratings");

  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& entry : rated) {
    const double sim = similarity.get(item, entry.index);
    numerator += sim * entry.value;
    denominator += std::abs(sim);
  }
  double value = denominator > 0.0 ? numerator / denominator : matrix.row_mean(user);
  if (scale.has_value()) value = scale->clamp(value);
  return value;
}

LinearModel linear_fit(const DenseMatrix& x, std::span<const double> y, double lambda,
                       std::vector<std::string> schema, std::optional<RatingScale> scale) {
  const std::vector<double> solution = ridge_fit(x, y, lambda);
  LinearModel model;
  model.bias = solution[0];
  model.weights.assign(solution.begin() + 1, solution.end());
  model.schema = std::move(schema);
  model.scale = scale;
  return model;
}

double linear_predict(const LinearModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size())
    throw DimensionError("linear_predict: feature count mismatch");
  double value = model.bias + dot(model.weights, features);
  if (model.scale.has_value()) value = model.scale->clamp(value);
  return value;
}

std::vector<double> RatingLinearModel::features(int user, int item) const {
  return {user_mean[static_cast<std::size_t>(user)], item_mean[static_cast<std::size_t>(item)],
          user_count[static_cast<std::size_t>(user)], item_count[static_cast<std::size_t>(item)]};
}

double RatingLinearModel::predict(int user, int item) const {
  if (user < 0 || user >= static_cast<int>(user_mean.size()) || item < 0 ||
      item >= static_cast<int>(item_mean.size()))
    throw ColdStart("linear rating model: unknown user or item");
  return linear_predict(model, features(user, item));
}

RatingLinearModel linear_fit_ratings(const TrainingData& data, double lambda) {
  if (data.observations.empty()) throw EmptyDataset("linear_fit_ratings on empty data");
  RatingLinearModel rating_model;
  const auto nu = static_cast<std::size_t>(data.n_users);
  const auto ni = static_cast<std::size_t>(data.n_items);
  rating_model.user_mean.assign(nu, 0.0);
  rating_model.item_mean.assign(ni, 0.0);
  rating_model.user_count.assign(nu, 0.0);
  rating_model.item_count.assign(ni, 0.0);

  double total = 0.0;
  for (const auto& obs : data.observations) {
    rating_model.user_mean[static_cast<std::size_t>(obs.user)] += obs.value;
    rating_model.item_mean[static_cast<std::size_t>(obs.item)] += obs.value;
    rating_model.user_count[static_cast<std::size_t>(obs.user)] += 1.0;
    rating_model.item_count[static_cast<std::size_t>(obs.item)] += 1.0;
    total += obs.value;
  }
  const double mean = total / static_cast<double>(data.observations.size());
  for (std::size_t u = 0; u < nu; ++u)
    rating_model.user_mean[u] =
        rating_model.user_count[u] > 0.0 ? rating_model.user_mean[u] / rating_model.user_count[u] : mean;
  for (std::size_t i = 0; i < ni; ++i)
    rating_model.item_mean[i] =
        rating_model.item_count[i] > 0.0 ? rating_model.item_mean[i] / rating_model.item_count[i] : mean;

  DenseMatrix x(static_cast<int>(data.observations.size()), 4);
  std::vector<double> y(data.observations.size());
  for (std::size_t r = 0; r < data.observations.size(); ++r) {
    const auto& obs = data.observations[r];
    const auto row = rating_model.features(obs.user, obs.item);
    for (int c = 0; c < 4; ++c) x.at(static_cast<int>(r), c) = row[static_cast<std::size_t>(c)];
    y[r] = obs.value;
  }
  rating_model.model = linear_fit(x, y, lambda,
                                  {"user_mean", "item_mean", "user_count", "item_count"},
                                  data.scale);
  return rating_model;
}

}  // namespace reckit
