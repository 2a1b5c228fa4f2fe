#include "reckit/factor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "reckit/errors.hpp"
#include "reckit/linalg.hpp"
#include "reckit/random.hpp"

namespace reckit {

namespace {

void validate_config(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0)) throw InvalidConfig("learning_rate must be > 0");
  if (config.epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (config.batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
}

std::vector<double> init_factors(std::size_t count, int k, Rng& rng, double init_scale) {
  std::vector<double> factors(count * static_cast<std::size_t>(k));
  const double stddev = init_scale / std::sqrt(static_cast<double>(k));
  for (double& f : factors) f = rng.normal(0.0, stddev);
  return factors;
}

double squared_norm(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return sum;
}

void check_divergence(double objective, double initial, int epoch, const char* what) {
  const double floor = std::max(initial, 1e-12);
  if (!std::isfinite(objective) || objective > 1e6 * floor)
    throw DivergenceError(std::string(what) + " diverged at epoch " + std::to_string(epoch));
}

}  // namespace

TrainingData TrainingData::from_dataset(const RatingDataset& dataset) {
  if (dataset.empty()) throw EmptyDataset("training data from an empty dataset");
  TrainingData data;
  data.n_users = dataset.n_users();
  data.n_items = dataset.n_items();
  data.scale = dataset.scale();
  data.observations.reserve(dataset.size());
  for (const auto& interaction : dataset.interactions()) {
    data.observations.push_back({*dataset.users().dense(interaction.user_id),
                                 *dataset.items().dense(interaction.item_id),
                                 interaction.rating});
  }
  return data;
}

TrainingData3 TrainingData3::from_dataset(const RatingDataset& dataset, int n_bins) {
  if (dataset.empty()) throw EmptyDataset("training data from an empty dataset");
  if (n_bins < 1) throw InvalidConfig("context bin count must be >= 1");
  TrainingData3 data;
  data.n_users = dataset.n_users();
  data.n_items = dataset.n_items();
  data.n_contexts = n_bins;
  data.scale = dataset.scale();

  std::int64_t lo = dataset.interactions().front().timestamp;
  std::int64_t hi = lo;
  for (const auto& interaction : dataset.interactions()) {
    lo = std::min(lo, interaction.timestamp);
    hi = std::max(hi, interaction.timestamp);
  }
  const double width = hi > lo ? static_cast<double>(hi - lo) / n_bins : 1.0;
  data.bin_edges.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b)
    data.bin_edges[static_cast<std::size_t>(b)] =
        lo + static_cast<std::int64_t>(static_cast<double>(b) * width);

  data.observations.reserve(dataset.size());
  for (const auto& interaction : dataset.interactions()) {
    int bin = hi > lo ? static_cast<int>(static_cast<double>(interaction.timestamp - lo) / width)
                      : 0;
    bin = std::clamp(bin, 0, n_bins - 1);
    data.observations.push_back({*dataset.users().dense(interaction.user_id),
                                 *dataset.items().dense(interaction.item_id), bin,
                                 interaction.rating});
  }
  return data;
}

// ---------------------------------------------------------------------------
// Matrix factorization
// ---------------------------------------------------------------------------

double mf_loss(const MfModel& model, std::span<const Observation> observations) {
  double loss = 0.0;
  for (const auto& obs : observations) {
    const double e = obs.value - dot(model.user_row(obs.user), model.item_row(obs.item));
    loss += e * e;
  }
  loss += model.lambda * (squared_norm(model.user_factors) + squared_norm(model.item_factors));
  return loss;
}

double mf_loss(const MfModel& model, const SparseRatingMatrix& matrix) {
  if (matrix.n_users() != model.n_users || matrix.n_items() != model.n_items)
    throw DimensionError("mf_loss: matrix does not match model dimensions");
  double loss = 0.0;
  for (int u = 0; u < matrix.n_users(); ++u) {
    for (const auto& entry : matrix.row(u)) {
      const double e = entry.value - dot(model.user_row(u), model.item_row(entry.index));
      loss += e * e;
    }
  }
  loss += model.lambda * (squared_norm(model.user_factors) + squared_norm(model.item_factors));
  return loss;
}

MfGradient mf_gradient(const MfModel& model, const SparseRatingMatrix& matrix) {
  if (matrix.n_users() != model.n_users || matrix.n_items() != model.n_items)
    throw DimensionError("mf_gradient: matrix does not match model dimensions");
  MfGradient grad;
  grad.user_grad.assign(model.user_factors.size(), 0.0);
  grad.item_grad.assign(model.item_factors.size(), 0.0);
  const int k = model.k;
  for (int u = 0; u < matrix.n_users(); ++u) {
    const auto uf = model.user_row(u);
    for (const auto& entry : matrix.row(u)) {
      const auto vf = model.item_row(entry.index);
      const double e = entry.value - dot(uf, vf);
      for (int f = 0; f < k; ++f) {
        grad.user_grad[static_cast<std::size_t>(u) * k + f] -= 2.0 * e * vf[f];
        grad.item_grad[static_cast<std::size_t>(entry.index) * k + f] -= 2.0 * e * uf[f];
      }
    }
  }
  for (std::size_t i = 0; i < grad.user_grad.size(); ++i)
    grad.user_grad[i] += 2.0 * model.lambda * model.user_factors[i];
  for (std::size_t i = 0; i < grad.item_grad.size(); ++i)
    grad.item_grad[i] += 2.0 * model.lambda * model.item_factors[i];
  return grad;
}

namespace {

struct Offsets {
  double global = 0.0;
  std::vector<double> user;
  std::vector<double> item;

  double base(int u, int i) const {
    double b = global;
    if (!user.empty()) b += user[static_cast<std::size_t>(u)];
    if (!item.empty()) b += item[static_cast<std::size_t>(i)];
    return b;
  }
};

Offsets compute_offsets(const TrainingData& data, Centering centering) {
  Offsets offsets;
  if (centering == Centering::kNone) return offsets;
  double sum = 0.0;
  for (const auto& obs : data.observations) sum += obs.value;
  const double mean = sum / static_cast<double>(data.observations.size());
  if (centering == Centering::kGlobal) {
    offsets.global = mean;
    return offsets;
  }
  const bool by_user = centering == Centering::kUser;
  const std::size_t n = static_cast<std::size_t>(by_user ? data.n_users : data.n_items);
  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& obs : data.observations) {
    const auto idx = static_cast<std::size_t>(by_user ? obs.user : obs.item);
    sums[idx] += obs.value;
    counts[idx] += 1;
  }
  std::vector<double> means(n, mean);  // entities unseen in a resample fall back to the mean
  for (std::size_t i = 0; i < n; ++i)
    if (counts[i] > 0) means[i] = sums[i] / static_cast<double>(counts[i]);
  (by_user ? offsets.user : offsets.item) = std::move(means);
  return offsets;
}

// Each observation's update applies the squared-error gradient for that
// entry plus the L2 penalty on the touched rows scaled by 1/N, so one epoch
// applies roughly one full-strength regularization pull; the conventional
// factor 2 is absorbed into the learning rate. The per-epoch trace reports
// the full objective (squared error plus lambda times squared factor norms).
void mf_fit_sgd(MfModel& model, std::span<const Observation> residuals,
                const TrainConfig& config, FitTrace* trace) {
  const int k = model.k;
  const std::size_t n = residuals.size();
  const double reg = config.lambda / static_cast<double>(n);
  const double lr = config.learning_rate;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(config.seed, "mf_sgd_order"));

  const double initial = mf_loss(model, residuals);
  std::vector<double> grad_u(model.user_factors.size());
  std::vector<double> grad_v(model.item_factors.size());
  std::vector<bool> in_batch_u(static_cast<std::size_t>(model.n_users), false);
  std::vector<bool> in_batch_v(static_cast<std::size_t>(model.n_items), false);
  std::vector<int> touched_u;
  std::vector<int> touched_v;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      if (config.batch_size == 1) {
        const auto& obs = residuals[order[start]];
        double* uf = model.user_factors.data() + static_cast<std::size_t>(obs.user) * k;
        double* vf = model.item_factors.data() + static_cast<std::size_t>(obs.item) * k;
        double pred = 0.0;
        for (int f = 0; f < k; ++f) pred += uf[f] * vf[f];
        const double e = obs.value - pred;
        for (int f = 0; f < k; ++f) {
          const double u_old = uf[f];
          uf[f] += lr * (e * vf[f] - reg * u_old);
          vf[f] += lr * (e * u_old - reg * vf[f]);
        }
        continue;
      }
      touched_u.clear();
      touched_v.clear();
      for (std::size_t pos = start; pos < stop; ++pos) {
        const auto& obs = residuals[order[pos]];
        const auto uf = model.user_row(obs.user);
        const auto vf = model.item_row(obs.item);
        const double e = obs.value - dot(uf, vf);
        double* gu = grad_u.data() + static_cast<std::size_t>(obs.user) * k;
        double* gv = grad_v.data() + static_cast<std::size_t>(obs.item) * k;
        if (!in_batch_u[static_cast<std::size_t>(obs.user)]) {
          in_batch_u[static_cast<std::size_t>(obs.user)] = true;
          touched_u.push_back(obs.user);
        }
        if (!in_batch_v[static_cast<std::size_t>(obs.item)]) {
          in_batch_v[static_cast<std::size_t>(obs.item)] = true;
          touched_v.push_back(obs.item);
        }
        for (int f = 0; f < k; ++f) {
          gu[f] += e * vf[f] - reg * uf[f];
          gv[f] += e * uf[f] - reg * vf[f];
        }
      }
      for (int u : touched_u) {
        double* uf = model.user_factors.data() + static_cast<std::size_t>(u) * k;
        double* gu = grad_u.data() + static_cast<std::size_t>(u) * k;
        for (int f = 0; f < k; ++f) {
          uf[f] += lr * gu[f];
          gu[f] = 0.0;
        }
        in_batch_u[static_cast<std::size_t>(u)] = false;
      }
      for (int i : touched_v) {
        double* vf = model.item_factors.data() + static_cast<std::size_t>(i) * k;
        double* gv = grad_v.data() + static_cast<std::size_t>(i) * k;
        for (int f = 0; f < k; ++f) {
          vf[f] += lr * gv[f];
          gv[f] = 0.0;
        }
        in_batch_v[static_cast<std::size_t>(i)] = false;
      }
    }
    const double objective = mf_loss(model, residuals);
    check_divergence(objective, initial, epoch, "mf_fit (SGD)");
    if (trace != nullptr) trace->objective.push_back(objective);
  }
}

// Exact per-row ridge solve; rows without observations are driven to zero,
// which is the exact minimizer of the lambda-penalized subproblem.
void als_solve_side(std::vector<double>& side, const std::vector<double>& other,
                    const std::vector<std::vector<MatrixEntry>>& adjacency, int k,
                    double lambda) {
  DenseMatrix a(k, k);
  std::vector<double> b(static_cast<std::size_t>(k));
  for (std::size_t row = 0; row < adjacency.size(); ++row) {
    double* target = side.data() + row * static_cast<std::size_t>(k);
    if (adjacency[row].empty()) {
      std::fill(target, target + k, 0.0);
      continue;
    }
    std::fill(a.data.begin(), a.data.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    for (const auto& entry : adjacency[row]) {
      const double* of = other.data() + static_cast<std::size_t>(entry.index) * k;
      for (int i = 0; i < k; ++i) {
        b[static_cast<std::size_t>(i)] += entry.value * of[i];
        for (int j = i; j < k; ++j) a.at(i, j) += of[i] * of[j];
      }
    }
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < i; ++j) a.at(i, j) = a.at(j, i);
      a.at(i, i) += lambda;
    }
    std::vector<double> solution;
    if (!cholesky_solve(a, b, solution)) {
      // Rank-deficient subproblem (possible when lambda == 0 and the row has
      // fewer observations than k); a tiny jitter keeps the solve defined.
      DenseMatrix jittered = a;
      for (int i = 0; i < k; ++i) jittered.at(i, i) += 1e-10;
      if (!cholesky_solve(std::move(jittered), b, solution))
        throw SingularSystem("als_solve_side: ridge system not solvable");
    }
    std::copy(solution.begin(), solution.end(), target);
  }
}

void mf_fit_als(MfModel& model, std::span<const Observation> residuals,
                const TrainConfig& config, FitTrace* trace) {
  const int k = model.k;
  std::vector<std::vector<MatrixEntry>> rows(static_cast<std::size_t>(model.n_users));
  std::vector<std::vector<MatrixEntry>> cols(static_cast<std::size_t>(model.n_items));
  for (const auto& obs : residuals) {
    rows[static_cast<std::size_t>(obs.user)].push_back({obs.item, obs.value});
    cols[static_cast<std::size_t>(obs.item)].push_back({obs.user, obs.value});
  }
  const double initial = mf_loss(model, residuals);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    als_solve_side(model.user_factors, model.item_factors, rows, k, config.lambda);
    double objective = mf_loss(model, residuals);
    check_divergence(objective, initial, epoch, "mf_fit (ALS)");
    if (trace != nullptr) trace->objective.push_back(objective);

    als_solve_side(model.item_factors, model.user_factors, cols, k, config.lambda);
    objective = mf_loss(model, residuals);
    check_divergence(objective, initial, epoch, "mf_fit (ALS)");
    if (trace != nullptr) trace->objective.push_back(objective);
  }
}

}  // namespace

MfModel mf_fit(const TrainingData& data, int k, const TrainConfig& config, FitTrace* trace) {
  validate_config(config);
  if (k < 1) throw InvalidK("latent factor count must be >= 1");
  if (data.observations.empty()) throw EmptyDataset("mf_fit on empty training data");

  MfModel model;
  model.n_users = data.n_users;
  model.n_items = data.n_items;
  model.k = k;
  model.lambda = config.lambda;
  model.scale = data.scale;

  Rng init_rng(derive_seed(config.seed, "mf_init"));
  model.user_factors = init_factors(static_cast<std::size_t>(data.n_users), k, init_rng,
                                    config.init_scale);
  model.item_factors = init_factors(static_cast<std::size_t>(data.n_items), k, init_rng,
                                    config.init_scale);

  const Offsets offsets = compute_offsets(data, config.centering);
  model.global_offset = offsets.global;
  model.user_offsets = offsets.user;
  model.item_offsets = offsets.item;

  std::vector<Observation> residuals = data.observations;
  for (auto& obs : residuals) obs.value -= offsets.base(obs.user, obs.item);

  if (config.optimizer == Optimizer::kAls)
    mf_fit_als(model, residuals, config, trace);
  else
    mf_fit_sgd(model, residuals, config, trace);
  return model;
}

double mf_predict(const MfModel& model, int user, int item) {
  if (user < 0 || user >= model.n_users || item < 0 || item >= model.n_items)
    throw ColdStart("mf_predict: unknown user or item");
  double value = model.global_offset + dot(model.user_row(user), model.item_row(item));
  if (!model.user_offsets.empty()) value += model.user_offsets[static_cast<std::size_t>(user)];
  if (!model.item_offsets.empty()) value += model.item_offsets[static_cast<std::size_t>(item)];
  if (model.scale.has_value()) value = model.scale->clamp(value);
  return value;
}

// ---------------------------------------------------------------------------
// CP tensor factorization
// ---------------------------------------------------------------------------

namespace {

double tf_raw_predict(const TensorModel& model, int user, int item, int context) {
  const int k = model.k;
  const double* uf = model.user_factors.data() + static_cast<std::size_t>(user) * k;
  const double* vf = model.item_factors.data() + static_cast<std::size_t>(item) * k;
  const double* wf = model.context_factors.data() + static_cast<std::size_t>(context) * k;
  double sum = 0.0;
  for (int f = 0; f < k; ++f) sum += uf[f] * vf[f] * wf[f];
  return sum;
}

}  // namespace

double tf_loss(const TensorModel& model, std::span<const Observation3> observations) {
  double loss = 0.0;
  for (const auto& obs : observations) {
    const double e = obs.value - tf_raw_predict(model, obs.user, obs.item, obs.context);
    loss += e * e;
  }
  loss += model.lambda * (squared_norm(model.user_factors) + squared_norm(model.item_factors) +
                          squared_norm(model.context_factors));
  return loss;
}

TensorGradient tf_gradient(const TensorModel& model,
                           std::span<const Observation3> observations) {
  TensorGradient grad;
  grad.user_grad.assign(model.user_factors.size(), 0.0);
  grad.item_grad.assign(model.item_factors.size(), 0.0);
  grad.context_grad.assign(model.context_factors.size(), 0.0);
  const int k = model.k;
  for (const auto& obs : observations) {
    const double* uf = model.user_factors.data() + static_cast<std::size_t>(obs.user) * k;
    const double* vf = model.item_factors.data() + static_cast<std::size_t>(obs.item) * k;
    const double* wf = model.context_factors.data() + static_cast<std::size_t>(obs.context) * k;
    const double e = obs.value - tf_raw_predict(model, obs.user, obs.item, obs.context);
    for (int f = 0; f < k; ++f) {
      grad.user_grad[static_cast<std::size_t>(obs.user) * k + f] -= 2.0 * e * vf[f] * wf[f];
      grad.item_grad[static_cast<std::size_t>(obs.item) * k + f] -= 2.0 * e * uf[f] * wf[f];
      grad.context_grad[static_cast<std::size_t>(obs.context) * k + f] -=
          2.0 * e * uf[f] * vf[f];
    }
  }
  for (std::size_t i = 0; i < grad.user_grad.size(); ++i)
    grad.user_grad[i] += 2.0 * model.lambda * model.user_factors[i];
  for (std::size_t i = 0; i < grad.item_grad.size(); ++i)
    grad.item_grad[i] += 2.0 * model.lambda * model.item_factors[i];
  for (std::size_t i = 0; i < grad.context_grad.size(); ++i)
    grad.context_grad[i] += 2.0 * model.lambda * model.context_factors[i];
  return grad;
}

TensorModel tf_fit(const TrainingData3& data, int k, const TrainConfig& config,
                   FitTrace* trace) {
  validate_config(config);
  if (k < 1) throw InvalidK("tensor component count must be >= 1");
  if (data.observations.empty()) throw EmptyDataset("tf_fit on empty training data");

  TensorModel model;
  model.n_users = data.n_users;
  model.n_items = data.n_items;
  model.n_contexts = data.n_contexts;
  model.k = k;
  model.lambda = config.lambda;
  model.scale = data.scale;
  model.bin_edges = data.bin_edges;

  Rng init_rng(derive_seed(config.seed, "tf_init"));
  model.user_factors = init_factors(static_cast<std::size_t>(data.n_users), k, init_rng,
                                    config.init_scale);
  model.item_factors = init_factors(static_cast<std::size_t>(data.n_items), k, init_rng,
                                    config.init_scale);
  model.context_factors = init_factors(static_cast<std::size_t>(data.n_contexts), k, init_rng,
                                       config.init_scale);

  const std::size_t n = data.observations.size();
  const double reg = config.lambda / static_cast<double>(n);
  const double lr = config.learning_rate;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(config.seed, "tf_sgd_order"));

  const double initial = tf_loss(model, data.observations);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const auto& obs = data.observations[order[pos]];
      double* uf = model.user_factors.data() + static_cast<std::size_t>(obs.user) * k;
      double* vf = model.item_factors.data() + static_cast<std::size_t>(obs.item) * k;
      double* wf = model.context_factors.data() + static_cast<std::size_t>(obs.context) * k;
      double pred = 0.0;
      for (int f = 0; f < k; ++f) pred += uf[f] * vf[f] * wf[f];
      const double e = obs.value - pred;
      for (int f = 0; f < k; ++f) {
        const double u_old = uf[f];
        const double v_old = vf[f];
        const double w_old = wf[f];
        uf[f] += lr * (e * v_old * w_old - reg * u_old);
        vf[f] += lr * (e * u_old * w_old - reg * v_old);
        wf[f] += lr * (e * u_old * v_old - reg * w_old);
      }
    }
    const double objective = tf_loss(model, data.observations);
    check_divergence(objective, initial, epoch, "tf_fit");
    if (trace != nullptr) trace->objective.push_back(objective);
  }
  return model;
}

double tf_predict(const TensorModel& model, int user, int item, int context) {
  if (user < 0 || user >= model.n_users || item < 0 || item >= model.n_items || context < 0 ||
      context >= model.n_contexts)
    throw ColdStart("tf_predict: unknown user, item, or context");
  double value = tf_raw_predict(model, user, item, context);
  if (model.scale.has_value()) value = model.scale->clamp(value);
  return value;
}

// ---------------------------------------------------------------------------
// Factorization machine
// ---------------------------------------------------------------------------

SparseFeatures fm_encode(const FmLayout& layout, int user, int item,
                         std::span<const double> extras) {
  if (user < 0 || user >= layout.n_users)
    throw UnknownCategory("fm_encode: user id outside layout");
  if (item < 0 || item >= layout.n_items)
    throw UnknownCategory("fm_encode: item id outside layout");
  if (static_cast<int>(extras.size()) != layout.n_extras)
    throw DimensionError("fm_encode: extra feature count mismatch");
  SparseFeatures x;
  x.reserve(2 + extras.size());
  x.emplace_back(user, 1.0);
  x.emplace_back(layout.n_users + item, 1.0);
  for (std::size_t t = 0; t < extras.size(); ++t)
    x.emplace_back(layout.n_users + layout.n_items + static_cast<int>(t), extras[t]);
  return x;
}

namespace {

double fm_raw_predict(const FmModel& model, const SparseFeatures& x) {
  const int k = model.k;
  double value = model.w0;
  for (const auto& [index, xi] : x) value += model.w[static_cast<std::size_t>(index)] * xi;
  // 1/2 sum_f [(sum_i v_if x_i)^2 - sum_i v_if^2 x_i^2]
  for (int f = 0; f < k; ++f) {
    double linear = 0.0;
    double square = 0.0;
    for (const auto& [index, xi] : x) {
      const double vx = model.v[static_cast<std::size_t>(index) * k + f] * xi;
      linear += vx;
      square += vx * vx;
    }
    value += 0.5 * (linear * linear - square);
  }
  return value;
}

void fm_check_features(const FmModel& model, const SparseFeatures& x) {
  for (const auto& [index, value] : x) {
    (void)value;
    if (index < 0 || index >= model.layout.dimension())
      throw DimensionError("feature index outside the model layout");
  }
}

}  // namespace

double fm_pairwise_term(const FmModel& model, const SparseFeatures& x) {
  fm_check_features(model, x);
  const int k = model.k;
  double value = 0.0;
  for (int f = 0; f < k; ++f) {
    double linear = 0.0;
    double square = 0.0;
    for (const auto& [index, xi] : x) {
      const double vx = model.v[static_cast<std::size_t>(index) * k + f] * xi;
      linear += vx;
      square += vx * vx;
    }
    value += 0.5 * (linear * linear - square);
  }
  return value;
}

double fm_predict(const FmModel& model, const SparseFeatures& x) {
  fm_check_features(model, x);
  double value = fm_raw_predict(model, x) + model.target_offset;
  if (model.scale.has_value()) value = model.scale->clamp(value);
  return value;
}

double fm_loss(const FmModel& model, std::span<const SparseFeatures> rows,
               std::span<const double> targets) {
  if (rows.size() != targets.size()) throw DimensionError("fm_loss: row/target count mismatch");
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double e = targets[r] - fm_raw_predict(model, rows[r]);
    loss += e * e;
  }
  loss += model.lambda * (squared_norm(model.w) + squared_norm(model.v));
  return loss;
}

FmGradient fm_gradient(const FmModel& model, std::span<const SparseFeatures> rows,
                       std::span<const double> targets) {
  if (rows.size() != targets.size())
    throw DimensionError("fm_gradient: row/target count mismatch");
  FmGradient grad;
  grad.w_grad.assign(model.w.size(), 0.0);
  grad.v_grad.assign(model.v.size(), 0.0);
  const int k = model.k;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& x = rows[r];
    const double e = targets[r] - fm_raw_predict(model, x);
    grad.w0_grad -= 2.0 * e;
    for (int f = 0; f < k; ++f) {
      double s = 0.0;
      for (const auto& [index, xi] : x) s += model.v[static_cast<std::size_t>(index) * k + f] * xi;
      sums[static_cast<std::size_t>(f)] = s;
    }
    for (const auto& [index, xi] : x) {
      grad.w_grad[static_cast<std::size_t>(index)] -= 2.0 * e * xi;
      for (int f = 0; f < k; ++f) {
        const double vif = model.v[static_cast<std::size_t>(index) * k + f];
        grad.v_grad[static_cast<std::size_t>(index) * k + f] -=
            2.0 * e * xi * (sums[static_cast<std::size_t>(f)] - vif * xi);
      }
    }
  }
  for (std::size_t i = 0; i < grad.w_grad.size(); ++i)
    grad.w_grad[i] += 2.0 * model.lambda * model.w[i];
  for (std::size_t i = 0; i < grad.v_grad.size(); ++i)
    grad.v_grad[i] += 2.0 * model.lambda * model.v[i];
  return grad;
}

FmModel fm_fit(const TrainingData& data, int k, const TrainConfig& config, FitTrace* trace) {
  validate_config(config);
  if (k < 1) throw InvalidK("factor dimension must be >= 1");
  if (data.observations.empty()) throw EmptyDataset("fm_fit on empty training data");

  FmModel model;
  model.layout = {data.n_users, data.n_items, 0};
  model.k = k;
  model.lambda = config.lambda;
  model.scale = data.scale;

  // Training on globally centered targets keeps w0 near zero.
  double sum = 0.0;
  for (const auto& obs : data.observations) sum += obs.value;
  model.target_offset = sum / static_cast<double>(data.observations.size());

  const int dim = model.layout.dimension();
  model.w.assign(static_cast<std::size_t>(dim), 0.0);
  Rng init_rng(derive_seed(config.seed, "fm_init"));
  model.v = init_factors(static_cast<std::size_t>(dim), k, init_rng, config.init_scale);

  std::vector<SparseFeatures> rows;
  std::vector<double> targets;
  rows.reserve(data.observations.size());
  targets.reserve(data.observations.size());
  for (const auto& obs : data.observations) {
    rows.push_back(fm_encode(model.layout, obs.user, obs.item));
    targets.push_back(obs.value - model.target_offset);
  }

  const std::size_t n = rows.size();
  const double reg = config.lambda / static_cast<double>(n);
  const double lr = config.learning_rate;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(config.seed, "fm_sgd_order"));

  const double initial = fm_loss(model, rows, targets);
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const auto& x = rows[order[pos]];
      const double e = targets[order[pos]] - fm_raw_predict(model, x);
      model.w0 += lr * e;
      for (int f = 0; f < k; ++f) {
        double s = 0.0;
        for (const auto& [index, xi] : x)
          s += model.v[static_cast<std::size_t>(index) * k + f] * xi;
        sums[static_cast<std::size_t>(f)] = s;
      }
      for (const auto& [index, xi] : x) {
        model.w[static_cast<std::size_t>(index)] +=
            lr * (e * xi - reg * model.w[static_cast<std::size_t>(index)]);
        for (int f = 0; f < k; ++f) {
          double& vif = model.v[static_cast<std::size_t>(index) * k + f];
          vif += lr * (e * xi * (sums[static_cast<std::size_t>(f)] - vif * xi) - reg * vif);
        }
      }
    }
    const double objective = fm_loss(model, rows, targets);
    check_divergence(objective, initial, epoch, "fm_fit");
    if (trace != nullptr) trace->objective.push_back(objective);
  }
  return model;
}

}  // namespace reckit
