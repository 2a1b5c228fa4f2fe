#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reckit/factor.hpp"
#include "reckit/linalg.hpp"
#include "reckit/similarity.hpp"
#include "reckit/types.hpp"

namespace reckit {

struct WeightedEdge {
  int node = 0;
  double weight = 0.0;  // co-consumption count, >= 1
};

/// Item co-consumption graph: an edge (i, j) counts the users who rated
/// both items at or above the like threshold. No self-loops.
class InteractionGraph {
 public:
  InteractionGraph() = default;
  InteractionGraph(int n_nodes, std::vector<std::vector<WeightedEdge>> adjacency)
      : n_nodes_(n_nodes), adjacency_(std::move(adjacency)) {}

  int n_nodes() const { return n_nodes_; }
  std::span<const WeightedEdge> neighbors(int node) const {
    const auto& edges = adjacency_[static_cast<std::size_t>(node)];
    return {edges.data(), edges.size()};
  }
  std::size_t n_edges() const;

 private:
  int n_nodes_ = 0;
  std::vector<std::vector<WeightedEdge>> adjacency_;
};

InteractionGraph build_graph(const RatingDataset& dataset, double like_threshold = 4.0);

struct WalkConfig {
  int walk_length = 10;     // steps taken per walk, >= 2
  int walks_per_seed = 1000;
  std::uint64_t seed = 0;
};

/// Sim(i, j) = (walks seeded at i that visit j) / (walks seeded at i).
/// Steps follow edges with probability proportional to weight. Per-seed
/// generators are derived from (seed, node), so rows are reproducible
/// independently. Isolated nodes get all-zero rows. Throws EmptyInput for
/// an edgeless graph.
SimilarityMatrix rw_similarity(const InteractionGraph& graph, const WalkConfig& config);

/// Cosine similarity of raw item column vectors; unit diagonal for nonzero
/// columns. Dense because slim_fit consumes it whole.
DenseMatrix compute_S(const SparseRatingMatrix& matrix);

/// Factorized SLIM variant: approximates the item-item similarity matrix S
/// as W^T H with L1 penalties on both factors (canonical SLIM instead
/// constrains A ~ AW; this form factorizes S itself).
struct SlimModel {
  int n_items = 0;
  int rank = 0;
  double lambda = 0.0;
  std::vector<double> w;  // rank x n_items, row-major
  std::vector<double> h;  // rank x n_items, row-major
  std::vector<double> objective_trace;

  /// (W^T H)_ij
  double similarity(int i, int j) const;
  double objective(const DenseMatrix& s) const;
};

struct SlimConfig {
  int max_iters = 300;
  double initial_step = 1e-3;
  std::uint64_t seed = 0;
};

/// Proximal gradient descent with soft-thresholding and backtracking; the
/// objective trace is non-increasing. Throws InvalidK for rank < 1 and
/// DimensionError for non-square S.
SlimModel slim_fit(const DenseMatrix& s, int rank, double lambda, const SlimConfig& config = {});

/// r_hat(u, i) = sum_j r_uj * S_hat(i, j) / sum_j |S_hat(i, j)| over the
/// user's rated items; the user's mean when the denominator vanishes.
/// Throws ColdStart for an unknown or ratingless user.
double slim_predict(const SlimModel& model, const SparseRatingMatrix& matrix, int user,
                    int item, std::optional<RatingScale> scale = RatingScale{});

/// Random-walk rating scorer: similarity-weighted average of the user's
/// ratings, r_hat(u, i) = sum_j Sim(i, j) r_uj / sum_j |Sim(i, j)| over the
/// user's rated items; the user's mean when no rated item is similar.
double rw_predict(const SimilarityMatrix& similarity, const SparseRatingMatrix& matrix,
                  int user, int item, std::optional<RatingScale> scale = RatingScale{});

/// r_hat = w0 + w . F, a weighted sum of interaction features.
struct LinearModel {
  double bias = 0.0;
  std::vector<double> weights;
  std::vector<std::string> schema;
  std::optional<RatingScale> scale;

  bool operator==(const LinearModel&) const = default;
};

/// Ridge least squares via the normal equations (intercept unpenalized).
/// Throws SingularSystem when lambda = 0 leaves the system singular.
LinearModel linear_fit(const DenseMatrix& x, std::span<const double> y, double lambda,
                       std::vector<std::string> schema = {},
                       std::optional<RatingScale> scale = std::nullopt);

/// Affine combination, clamped when the model has a scale.
double linear_predict(const LinearModel& model, std::span<const double> features);

/// Linear rating model over the default interaction features
/// [user mean, item mean, user count, item count], with the training
/// statistics retained for prediction.
struct RatingLinearModel {
  LinearModel model;
  std::vector<double> user_mean;
  std::vector<double> item_mean;
  std::vector<double> user_count;
  std::vector<double> item_count;

  double predict(int user, int item) const;  // ColdStart outside range
  std::vector<double> features(int user, int item) const;
};

RatingLinearModel linear_fit_ratings(const TrainingData& data, double lambda);

}  // namespace reckit
