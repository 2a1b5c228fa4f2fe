#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "reckit/preprocess.hpp"
#include "reckit/types.hpp"

namespace reckit {

/// One dense-id training observation. Training sets are multisets: bagging
/// resamples repeat observations, which RatingDataset forbids.
struct Observation {
  int user = 0;
  int item = 0;
  double value = 0.0;
};

struct Observation3 {
  int user = 0;
  int item = 0;
  int context = 0;
  double value = 0.0;
};

struct TrainingData {
  int n_users = 0;
  int n_items = 0;
  std::optional<RatingScale> scale;
  std::vector<Observation> observations;

  static TrainingData from_dataset(const RatingDataset& dataset);
};

struct TrainingData3 {
  int n_users = 0;
  int n_items = 0;
  int n_contexts = 0;
  std::optional<RatingScale> scale;
  std::vector<Observation3> observations;
  std::vector<std::int64_t> bin_edges;  // timestamp bin lower edges

  /// Context = timestamp bucketed into n_bins equal-width bins.
  static TrainingData3 from_dataset(const RatingDataset& dataset, int n_bins = 8);
};

enum class Optimizer { kSgd, kAls };
enum class Centering { kNone, kGlobal, kUser, kItem };

struct TrainConfig {
  double learning_rate = 0.01;
  double lambda = 0.02;
  int epochs = 100;
  int batch_size = 1;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kSgd;
  Centering centering = Centering::kGlobal;
  double init_scale = 0.1;  // factor init ~ Normal(0, init_scale / sqrt(k))
};

/// Captures the objective value after each epoch (SGD) or half-step (ALS).
struct FitTrace {
  std::vector<double> objective;
};

/// R ~ U V^T with optional de-centering offsets.
struct MfModel {
  int n_users = 0;
  int n_items = 0;
  int k = 0;
  double lambda = 0.0;
  std::vector<double> user_factors;  // n_users x k, row-major
  std::vector<double> item_factors;  // n_items x k, row-major
  double global_offset = 0.0;
  std::vector<double> user_offsets;  // empty unless user centering was used
  std::vector<double> item_offsets;
  std::optional<RatingScale> scale;

  std::span<const double> user_row(int u) const {
    return {user_factors.data() + static_cast<std::size_t>(u) * k, static_cast<std::size_t>(k)};
  }
  std::span<const double> item_row(int i) const {
    return {item_factors.data() + static_cast<std::size_t>(i) * k, static_cast<std::size_t>(k)};
  }

  bool operator==(const MfModel&) const = default;
};

/// Squared-error objective over the matrix's stored entries plus
/// lambda * (|U|_F^2 + |V|_F^2). Offsets are not applied; this is the raw
/// factor objective.
double mf_loss(const MfModel& model, const SparseRatingMatrix& matrix);
double mf_loss(const MfModel& model, std::span<const Observation> observations);

struct MfGradient {
  std::vector<double> user_grad;
  std::vector<double> item_grad;
};

/// Analytic gradient of mf_loss with respect to every factor entry.
MfGradient mf_gradient(const MfModel& model, const SparseRatingMatrix& matrix);

/// Trains by mini-batch SGD or exact alternating ridge solves (ALS).
/// Deterministic under config.seed. Throws DivergenceError (naming the
/// epoch) when the objective blows up.
MfModel mf_fit(const TrainingData& data, int k, const TrainConfig& config,
               FitTrace* trace = nullptr);

/// offsets + dot(U_u, V_i), clamped to the scale when one is set.
/// Throws ColdStart for out-of-range ids.
double mf_predict(const MfModel& model, int user, int item);

/// CP decomposition: T ~ sum_k u_k (x) v_k (x) w_k over (user, item,
/// context) triples.
struct TensorModel {
  int n_users = 0;
  int n_items = 0;
  int n_contexts = 0;
  int k = 0;
  double lambda = 0.0;
  std::vector<double> user_factors;
  std::vector<double> item_factors;
  std::vector<double> context_factors;
  std::optional<RatingScale> scale;
  std::vector<std::int64_t> bin_edges;  // timestamp bin lower edges, may be empty

  bool operator==(const TensorModel&) const = default;
};

double tf_loss(const TensorModel& model, std::span<const Observation3> observations);

struct TensorGradient {
  std::vector<double> user_grad;
  std::vector<double> item_grad;
  std::vector<double> context_grad;
};

TensorGradient tf_gradient(const TensorModel& model, std::span<const Observation3> observations);

/// SGD on squared reconstruction error over observed entries. Throws
/// InvalidK for k < 1.
TensorModel tf_fit(const TrainingData3& data, int k, const TrainConfig& config,
                   FitTrace* trace = nullptr);

/// sum_k U[u,k] V[i,k] W[c,k], clamped when a scale is set.
double tf_predict(const TensorModel& model, int user, int item, int context);

/// Sparse feature vector: (index, value) pairs with strictly increasing
/// indices.
using SparseFeatures = std::vector<std::pair<int, double>>;

/// Feature layout: one-hot(user) ++ one-hot(item) ++ extras.
struct FmLayout {
  int n_users = 0;
  int n_items = 0;
  int n_extras = 0;

  int dimension() const { return n_users + n_items + n_extras; }
  bool operator==(const FmLayout&) const = default;
};

/// Throws UnknownCategory for ids outside the layout.
SparseFeatures fm_encode(const FmLayout& layout, int user, int item,
                         std::span<const double> extras = {});

/// Order-2 factorization machine.
struct FmModel {
  FmLayout layout;
  int k = 0;
  double lambda = 0.0;
  double w0 = 0.0;
  std::vector<double> w;  // layout.dimension()
  std::vector<double> v;  // layout.dimension() x k, row-major
  double target_offset = 0.0;  // added back after training on centered targets
  std::optional<RatingScale> scale;

  bool operator==(const FmModel&) const = default;
};

/// w0 + sum_i w_i x_i + sum_{i<j} <v_i, v_j> x_i x_j, computed with the
/// O(n k) pairwise identity, plus the target offset; clamped when a scale is
/// set. Throws DimensionError for indices outside the layout.
double fm_predict(const FmModel& model, const SparseFeatures& x);

/// The pairwise interaction term alone (used by the O(n^2) equivalence
/// tests).
double fm_pairwise_term(const FmModel& model, const SparseFeatures& x);

double fm_loss(const FmModel& model, std::span<const SparseFeatures> rows,
               std::span<const double> targets);

struct FmGradient {
  double w0_grad = 0.0;
  std::vector<double> w_grad;
  std::vector<double> v_grad;
};

FmGradient fm_gradient(const FmModel& model, std::span<const SparseFeatures> rows,
                       std::span<const double> targets);

/// SGD on squared error with L2 on w and v; targets are centered on their
/// global mean (re-added at prediction).
FmModel fm_fit(const TrainingData& data, int k, const TrainConfig& config,
               FitTrace* trace = nullptr);

}  // namespace reckit
