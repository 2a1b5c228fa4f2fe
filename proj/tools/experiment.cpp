#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "reckit/ensemble.hpp"
#include "reckit/evaluate.hpp"
#include "reckit/factor.hpp"
#include "reckit/graph.hpp"
#include "reckit/ingest.hpp"
#include "reckit/model_io.hpp"
#include "reckit/random.hpp"
#include "reckit/segment.hpp"
#include "reckit/similarity.hpp"
#include "reckit/split.hpp"
#include "reckit/tune.hpp"

namespace reckit::cli {

namespace {

const nlohmann::json* descend(const nlohmann::json& root, const std::string& dotted_path) {
  const nlohmann::json* node = &root;
  std::size_t start = 0;
  while (start <= dotted_path.size()) {
    const std::size_t dot = dotted_path.find('.', start);
    const std::string key = dotted_path.substr(start, dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return node;
}

}  // namespace

const nlohmann::json* Experiment::find(const std::string& dotted_path) const {
  return descend(config, dotted_path);
}

double Experiment::number_or(const std::string& dotted_path, double fallback) const {
  const auto* node = find(dotted_path);
  if (node == nullptr) return fallback;
  if (!node->is_number()) throw ConfigError(dotted_path, "expected a number");
  return node->get<double>();
}

std::string Experiment::string_or(const std::string& dotted_path,
                                  const std::string& fallback) const {
  const auto* node = find(dotted_path);
  if (node == nullptr) return fallback;
  if (!node->is_string()) throw ConfigError(dotted_path, "expected a string");
  return node->get<std::string>();
}

bool Experiment::flag_or(const std::string& dotted_path, bool fallback) const {
  const auto* node = find(dotted_path);
  if (node == nullptr) return fallback;
  if (!node->is_boolean()) throw ConfigError(dotted_path, "expected a boolean");
  return node->get<bool>();
}

const nlohmann::json& Experiment::require(const std::string& dotted_path) const {
  const auto* node = find(dotted_path);
  if (node == nullptr) throw ConfigError(dotted_path, "required field is missing");
  return *node;
}

Experiment load_experiment(const std::optional<std::string>& config_path,
                           const std::optional<std::uint64_t>& seed_flag,
                           const std::optional<std::string>& out_flag) {
  Experiment experiment;
  if (config_path.has_value()) {
    std::ifstream in(*config_path);
    if (!in) throw Error("cannot open config file '" + *config_path + "'");
    try {
      in >> experiment.config;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
    }
  } else {
    experiment.config = nlohmann::json::object();
  }

  if (seed_flag.has_value()) {
    experiment.seed = *seed_flag;
  } else {
    const auto* seed_node = experiment.find("seed");
    if (seed_node == nullptr)
      throw ConfigError("seed", "a seed is mandatory (config field or --seed)");
    if (!seed_node->is_number_unsigned() && !seed_node->is_number_integer())
      throw ConfigError("seed", "expected an unsigned integer");
    experiment.seed = seed_node->get<std::uint64_t>();
  }
  experiment.out = out_flag.has_value() ? std::filesystem::path(*out_flag)
                                        : std::filesystem::path(
                                              experiment.string_or("out", "reckit_out"));
  return experiment;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

namespace {

// Commands without randomness still go through load_experiment, which
// demands a seed; default it to zero for them.
std::optional<std::uint64_t> seed_or_zero(const std::optional<std::uint64_t>& seed) {
  return seed.has_value() ? seed : std::optional<std::uint64_t>{0};
}

RatingDataset load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ratings file '" + path + "'");
  return parse_ratings(in);
}

ItemCatalog load_items(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open items file '" + path + "'");
  return parse_items(in);
}

std::string ratings_tsv(const RatingDataset& dataset) {
  std::ostringstream out;
  write_ratings(dataset, out);
  return out.str();
}

std::string resolve_data_path(const Experiment& experiment,
                              const std::optional<std::string>& flag, const char* field) {
  if (flag.has_value()) return *flag;
  const std::string from_config = experiment.string_or(std::string("data.") + field, "");
  if (from_config.empty())
    throw ConfigError(std::string("data.") + field, "required path is missing");
  return from_config;
}

SplitResult make_split(const Experiment& experiment, const RatingDataset& dataset) {
  const std::string strategy = experiment.string_or("split.strategy", "random");
  const std::uint64_t seed = derive_seed(experiment.seed, "split");
  SplitResult split;
  if (strategy == "random") {
    split = train_test_split(dataset, experiment.number_or("split.test_fraction", 0.2), seed);
  } else if (strategy == "time") {
    const auto* cutoff = experiment.find("split.cutoff");
    if (cutoff == nullptr) throw ConfigError("split.cutoff", "time split needs a cutoff");
    split = time_split(dataset, cutoff->get<std::int64_t>());
  } else if (strategy == "stratified") {
    split = stratified_split(dataset, experiment.number_or("split.test_fraction", 0.2), seed);
  } else if (strategy == "kfold") {
    const int folds = static_cast<int>(experiment.number_or("split.folds", 5));
    const int index = static_cast<int>(experiment.number_or("split.fold_index", 0));
    auto all = kfold(dataset, folds, seed);
    if (index < 0 || index >= static_cast<int>(all.size()))
      throw ConfigError("split.fold_index", "fold index outside [0, folds)");
    split = std::move(all[static_cast<std::size_t>(index)]);
  } else {
    throw ConfigError("split.strategy", "unknown strategy '" + strategy + "'");
  }
  if (!split.warning.empty()) std::cerr << "warning: " << split.warning << '\n';

  const double val_fraction = experiment.number_or("split.validation_fraction", 0.0);
  if (val_fraction > 0.0)
    split = carve_validation(std::move(split), val_fraction,
                             derive_seed(experiment.seed, "validation"));
  return split;
}

TrainConfig train_config_from(const nlohmann::json& spec, const std::string& algorithm,
                              std::uint64_t seed) {
  TrainConfig config;
  config.learning_rate = spec.value("learning_rate", 0.01);
  config.lambda = spec.value("lambda", 0.02);
  config.epochs = spec.value("epochs", 50);
  config.batch_size = spec.value("batch_size", 1);
  config.seed = seed;
  config.optimizer = algorithm == "mf_als" ? Optimizer::kAls : Optimizer::kSgd;
  const std::string centering = spec.value("centering", "global");
  if (centering == "none")
    config.centering = Centering::kNone;
  else if (centering == "global")
    config.centering = Centering::kGlobal;
  else if (centering == "user")
    config.centering = Centering::kUser;
  else if (centering == "item")
    config.centering = Centering::kItem;
  else
    throw ConfigError("model.centering", "unknown centering '" + centering + "'");
  return config;
}

SparseRatingMatrix matrix_from_training(const TrainingData& data) {
  std::vector<std::tuple<int, int, double>> triples;
  triples.reserve(data.observations.size());
  for (const auto& obs : data.observations)
    triples.emplace_back(obs.user, obs.item, obs.value);
  return SparseRatingMatrix::from_triples(data.n_users, data.n_items, triples);
}

struct Trained {
  std::string algorithm;
  nlohmann::json payload;
};

/// Algorithms trainable from bare (user, item, rating) observations; these
/// are the ones allowed as ensemble members.
Trained train_member(const nlohmann::json& spec, const TrainingData& data,
                     std::uint64_t seed) {
  const std::string algorithm = spec.value("algorithm", "mf_sgd");
  const TrainConfig config = train_config_from(spec, algorithm, seed);
  const int k = spec.value("k", 8);
  const RatingScale scale = data.scale.value_or(RatingScale{});

  if (algorithm == "mf_sgd" || algorithm == "mf_als")
    return {algorithm, mf_to_json(mf_fit(data, k, config))};
  if (algorithm == "fm") return {algorithm, fm_to_json(fm_fit(data, k, config))};
  if (algorithm == "knn_user" || algorithm == "knn_item") {
    const auto matrix = matrix_from_training(data);
    const int neighborhood = spec.value("neighborhood", 50);
    const Axis mode = algorithm == "knn_user" ? Axis::kUser : Axis::kItem;
    return {algorithm, knn_to_json(knn_fit(matrix, mode, neighborhood, scale))};
  }
  if (algorithm == "linear")
    return {algorithm, linear_rating_to_json(linear_fit_ratings(data, config.lambda))};
  if (algorithm == "slim") {
    const auto matrix = matrix_from_training(data);
    SlimConfig slim_config;
    slim_config.max_iters = spec.value("max_iters", 200);
    slim_config.seed = seed;
    SlimRatingModel model;
    model.slim = slim_fit(compute_S(matrix), k, config.lambda, slim_config);
    model.ratings = matrix;
    model.scale = scale;
    return {algorithm, slim_rating_to_json(model)};
  }
  throw ConfigError("model.algorithm",
                    "algorithm '" + algorithm + "' is not usable here");
}

double validation_rmse(const PredictFn& predictor, const RatingDataset& train,
                       const RatingDataset& validation) {
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& interaction : validation.interactions()) {
    const auto u = train.users().dense(interaction.user_id);
    const auto i = train.items().dense(interaction.item_id);
    if (!u.has_value() || !i.has_value()) continue;
    try {
      const double e = predictor(*u, *i) - interaction.rating;
      sq += e * e;
      ++n;
    } catch (const ColdStart&) {
    }
  }
  if (n == 0) throw EmptyInput("validation has no scorable pairs");
  return std::sqrt(sq / static_cast<double>(n));
}

Trained train_top_level(const Experiment& experiment, const RatingDataset& train,
                        const std::optional<RatingDataset>& validation) {
  const bool has_model = experiment.config.contains("model");
  const bool has_ensemble = experiment.config.contains("ensemble");
  if (has_model == has_ensemble)
    throw ConfigError("model", "exactly one of 'model' or 'ensemble' must be configured");

  const TrainingData data = TrainingData::from_dataset(train);
  const RatingScale scale = train.scale();
  const std::uint64_t seed = derive_seed(experiment.seed, "train");

  auto catalog = [&]() -> ItemCatalog {
    const std::string path = experiment.string_or("data.items", "");
    if (path.empty()) throw ConfigError("data.items", "this model needs an item file");
    return load_items(path);
  };

  if (has_model) {
    const nlohmann::json& spec = experiment.require("model");
    const std::string algorithm = spec.value("algorithm", "mf_sgd");

    if (algorithm == "tensor") {
      const int bins = spec.value("context_bins", 8);
      const TrainConfig config = train_config_from(spec, algorithm, seed);
      const auto model = tf_fit(TrainingData3::from_dataset(train, bins),
                                spec.value("k", 8), config);
      return {algorithm, tf_to_json(model)};
    }
    if (algorithm == "cbf") {
      const auto model = cbf_fit(train, catalog(), spec.value("like_threshold", 4.0));
      return {algorithm, cbf_to_json(model)};
    }
    if (algorithm == "random_walk") {
      const auto graph = build_graph(train, spec.value("like_threshold", 4.0));
      WalkConfig walk_config;
      walk_config.walk_length = spec.value("walk_length", 10);
      walk_config.walks_per_seed = spec.value("walks_per_seed", 500);
      walk_config.seed = derive_seed(seed, "random_walk");
      RwRatingModel model;
      model.similarity = rw_similarity(graph, walk_config);
      model.ratings = matrix_from_training(data);
      model.scale = scale;
      return {algorithm, rw_rating_to_json(model)};
    }
    if (algorithm == "hybrid") {
      const nlohmann::json cf_spec =
          spec.contains("cf") ? spec.at("cf") : nlohmann::json{{"algorithm", "knn_item"}};
      const Trained cf = train_member(cf_spec, data, derive_seed(seed, "hybrid_cf"));
      const auto cbf_model = cbf_fit(train, catalog(), spec.value("like_threshold", 4.0));
      nlohmann::json payload;
      payload["beta"] = spec.value("beta", 0.7);
      payload["scale"] = {{"min", scale.min}, {"max", scale.max}};
      payload["cf"] = {{"algorithm", cf.algorithm}, {"payload", cf.payload}};
      payload["cbf"] = {{"algorithm", "cbf"}, {"payload", cbf_to_json(cbf_model)}};
      return {"hybrid", payload};
    }
    return train_member(spec, data, seed);
  }

  const nlohmann::json& spec = experiment.require("ensemble");
  const std::string scheme = spec.value("scheme", "weighted");

  if (scheme == "weighted") {
    if (!spec.contains("members") || !spec.at("members").is_array() ||
        spec.at("members").empty())
      throw ConfigError("ensemble.members", "weighted ensembles need members");
    std::vector<Trained> members;
    for (std::size_t m = 0; m < spec.at("members").size(); ++m)
      members.push_back(train_member(spec.at("members").at(m), data, derive_seed(seed, m)));

    std::vector<double> weights;
    if (spec.contains("weights") && spec.at("weights").is_array()) {
      weights = normalize_weights(spec.at("weights").get<std::vector<double>>());
      if (weights.size() != members.size())
        throw ConfigError("ensemble.weights", "one weight per member required");
    } else {
      // Default: inverse validation-RMSE weighting.
      if (!validation.has_value())
        throw ConfigError("split.validation_fraction",
                          "inverse-RMSE weighting needs a validation carve");
      std::vector<double> rmses;
      for (const auto& member : members)
        rmses.push_back(validation_rmse(make_predictor(member.algorithm, member.payload),
                                        train, *validation));
      weights = inverse_rmse_weights(rmses);
    }
    nlohmann::json payload;
    payload["weights"] = weights;
    payload["members"] = nlohmann::json::array();
    for (const auto& member : members)
      payload["members"].push_back(
          {{"algorithm", member.algorithm}, {"payload", member.payload}});
    return {"weighted", payload};
  }

  if (scheme == "bagging") {
    const nlohmann::json base = spec.value("base", nlohmann::json{{"algorithm", "mf_sgd"}});
    const std::string base_algorithm = base.value("algorithm", "mf_sgd");
    if (base_algorithm != "mf_sgd" && base_algorithm != "mf_als")
      throw ConfigError("ensemble.base.algorithm", "bagging bases are MF models");
    const TrainConfig config = train_config_from(base, base_algorithm, seed);
    const auto ensemble = bagging_fit(data, base.value("k", 8), config,
                                      spec.value("n", 5), derive_seed(seed, "bagging"));
    nlohmann::json payload;
    payload["members"] = nlohmann::json::array();
    for (const auto& member : ensemble.members) payload["members"].push_back(mf_to_json(member));
    return {"bagging", payload};
  }

  if (scheme == "boosting") {
    const nlohmann::json base = spec.value("base", nlohmann::json{{"algorithm", "mf_sgd"}});
    const TrainConfig config = train_config_from(base, base.value("algorithm", "mf_sgd"), seed);
    const auto ensemble = boosting_fit(data, base.value("k", 8), config,
                                       spec.value("rounds", 5), spec.value("shrinkage", 0.5));
    nlohmann::json payload;
    payload["initial"] = ensemble.initial;
    payload["shrinkage"] = ensemble.shrinkage;
    payload["scale"] = {{"min", scale.min}, {"max", scale.max}};
    payload["stages"] = nlohmann::json::array();
    for (const auto& stage : ensemble.stages) payload["stages"].push_back(mf_to_json(stage));
    return {"boosting", payload};
  }

  if (scheme == "stacking") {
    if (!spec.contains("members") || spec.at("members").size() < 2)
      throw ConfigError("ensemble.members", "stacking needs at least 2 members");
    std::vector<TrainerFn> trainers;
    for (std::size_t m = 0; m < spec.at("members").size(); ++m) {
      const nlohmann::json member_spec = spec.at("members").at(m);
      const std::uint64_t member_seed = derive_seed(seed, m);
      trainers.push_back([member_spec, member_seed](const TrainingData& seen) -> PredictFn {
        const Trained trained = train_member(member_spec, seen, member_seed);
        return make_predictor(trained.algorithm, trained.payload);
      });
    }
    const auto ensemble = stacking_fit(data, trainers, derive_seed(seed, "stacking"),
                                       spec.value("folds", 5), spec.value("meta_lambda", 1e-8));
    nlohmann::json payload;
    payload["meta"] = linear_model_to_json(ensemble.meta);
    payload["scale"] = {{"min", scale.min}, {"max", scale.max}};
    payload["members"] = nlohmann::json::array();
    for (std::size_t m = 0; m < spec.at("members").size(); ++m) {
      const Trained full = train_member(spec.at("members").at(m), data, derive_seed(seed, m));
      payload["members"].push_back({{"algorithm", full.algorithm}, {"payload", full.payload}});
    }
    return {"stacking", payload};
  }

  throw ConfigError("ensemble.scheme", "unknown scheme '" + scheme + "'");
}

ModelBundle bundle_for(const Trained& trained, const RatingDataset& train) {
  ModelBundle bundle;
  bundle.algorithm = trained.algorithm;
  bundle.scale = train.scale();
  bundle.user_ids = train.users().raw_ids();
  bundle.item_ids = train.items().raw_ids();
  bundle.payload = trained.payload;
  return bundle;
}

std::string stats_text(const StatsSummary& stats) {
  std::ostringstream out;
  out << "n_interactions=" << stats.n_interactions << '\n'
      << "n_users=" << stats.n_users << '\n'
      << "n_items=" << stats.n_items << '\n'
      << "mean=" << nlohmann::json(stats.mean).dump() << '\n'
      << "median=" << nlohmann::json(stats.median).dump() << '\n'
      << "stddev=" << nlohmann::json(stats.stddev).dump() << '\n'
      << "sparsity=" << nlohmann::json(stats.sparsity).dump() << '\n';
  for (const auto& [rating, count] : stats.rating_counts)
    out << "count_rating_" << nlohmann::json(rating).dump() << '=' << count << '\n';
  return out.str();
}

EvalConfig eval_config_from(const Experiment& experiment) {
  EvalConfig config;
  config.k = static_cast<int>(experiment.number_or("evaluation.k", 10));
  config.relevance_threshold = experiment.number_or("evaluation.relevance_threshold", 4.0);
  config.full_catalog = experiment.flag_or("evaluation.full_catalog", false);
  return config;
}

int fail(const std::exception& e) {
  std::cerr << "error: " << e.what() << '\n';
  return 1;
}

}  // namespace

int run_ingest(const CommonFlags& flags, const std::optional<std::string>& ratings,
               const std::optional<std::string>& items) {
  try {
    const auto experiment =
        load_experiment(flags.config, seed_or_zero(flags.seed), flags.out);
    const auto dataset =
        load_ratings(resolve_data_path(experiment, ratings, "ratings"));
    const auto stats = dataset_stats(dataset);

    nlohmann::json summary;
    summary["n_interactions"] = stats.n_interactions;
    summary["n_users"] = stats.n_users;
    summary["n_items"] = stats.n_items;
    summary["sparsity"] = stats.sparsity;

    std::string items_path = items.value_or(experiment.string_or("data.items", ""));
    if (!items_path.empty()) {
      const auto catalog = load_items(items_path);
      summary["n_catalog_items"] = catalog.size();
      summary["feature_dim"] = catalog.feature_dim();
    }
    write_atomic(experiment.out / "ratings.tsv", ratings_tsv(dataset));
    write_atomic(experiment.out / "summary.json", summary.dump(2) + "\n");
    std::cout << stats_text(stats);
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_stats(const CommonFlags& flags, const std::optional<std::string>& ratings) {
  try {
    const auto experiment =
        load_experiment(flags.config, seed_or_zero(flags.seed), flags.out);
    const auto dataset = load_ratings(resolve_data_path(experiment, ratings, "ratings"));
    std::cout << stats_text(dataset_stats(dataset));
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_split(const CommonFlags& flags, const std::optional<std::string>& ratings,
              const std::optional<std::string>& strategy,
              const std::optional<double>& test_fraction,
              const std::optional<double>& validation_fraction,
              const std::optional<std::int64_t>& cutoff, const std::optional<int>& folds) {
  try {
    auto experiment = load_experiment(flags.config, flags.seed, flags.out);
    // flags override the config's split block
    if (strategy.has_value()) experiment.config["split"]["strategy"] = *strategy;
    if (test_fraction.has_value()) experiment.config["split"]["test_fraction"] = *test_fraction;
    if (validation_fraction.has_value())
      experiment.config["split"]["validation_fraction"] = *validation_fraction;
    if (cutoff.has_value()) experiment.config["split"]["cutoff"] = *cutoff;
    if (folds.has_value()) experiment.config["split"]["folds"] = *folds;

    const auto dataset = load_ratings(resolve_data_path(experiment, ratings, "ratings"));

    if (experiment.string_or("split.strategy", "random") == "kfold" &&
        experiment.find("split.fold_index") == nullptr) {
      // export every fold
      const int k = static_cast<int>(experiment.number_or("split.folds", 5));
      const auto all = kfold(dataset, k, derive_seed(experiment.seed, "split"));
      for (std::size_t f = 0; f < all.size(); ++f) {
        write_atomic(experiment.out / ("fold_" + std::to_string(f) + "_train.tsv"),
                     ratings_tsv(all[f].train));
        write_atomic(experiment.out / ("fold_" + std::to_string(f) + "_test.tsv"),
                     ratings_tsv(all[f].test));
      }
      std::cout << "wrote " << all.size() << " folds to " << experiment.out.string() << '\n';
      return 0;
    }

    const auto split = make_split(experiment, dataset);
    write_atomic(experiment.out / "train.tsv", ratings_tsv(split.train));
    write_atomic(experiment.out / "test.tsv", ratings_tsv(split.test));
    if (split.validation.has_value())
      write_atomic(experiment.out / "validation.tsv", ratings_tsv(*split.validation));
    std::cout << "train=" << split.train.size() << " test=" << split.test.size();
    if (split.validation.has_value()) std::cout << " validation=" << split.validation->size();
    std::cout << '\n';
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_train(const CommonFlags& flags) {
  try {
    const auto experiment = load_experiment(flags.config, flags.seed, flags.out);
    const auto dataset =
        load_ratings(resolve_data_path(experiment, std::nullopt, "ratings"));
    const auto split = make_split(experiment, dataset);
    const auto trained = train_top_level(experiment, split.train, split.validation);

    std::ostringstream model_out;
    save_model(bundle_for(trained, split.train), model_out);
    write_atomic(experiment.out / "model.json", model_out.str());
    write_atomic(experiment.out / "train.tsv", ratings_tsv(split.train));
    write_atomic(experiment.out / "test.tsv", ratings_tsv(split.test));
    if (split.validation.has_value())
      write_atomic(experiment.out / "validation.tsv", ratings_tsv(*split.validation));
    std::cout << "trained " << trained.algorithm << " on " << split.train.size()
              << " interactions\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_evaluate(const CommonFlags& flags, const std::optional<std::string>& model_path) {
  try {
    const auto experiment = load_experiment(flags.config, flags.seed, flags.out);
    const auto dataset =
        load_ratings(resolve_data_path(experiment, std::nullopt, "ratings"));
    const auto split = make_split(experiment, dataset);

    const std::string path =
        model_path.value_or((experiment.out / "model.json").string());
    std::ifstream model_in(path);
    if (!model_in) throw Error("cannot open model file '" + path + "'");
    const auto bundle = load_model(model_in);
    const auto predictor = make_predictor(bundle);

    const auto report = evaluate(predictor, split.train, split.test,
                                 eval_config_from(experiment));
    write_atomic(experiment.out / "report.json", report_json(report));
    write_atomic(experiment.out / "report.txt", report_text(report));
    std::cout << report_text(report);
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_recommend(const CommonFlags& flags, const std::optional<std::string>& model_path,
                  const std::optional<std::string>& ratings, std::int64_t user, int k,
                  bool include_seen) {
  try {
    const auto experiment =
        load_experiment(flags.config, seed_or_zero(flags.seed), flags.out);
    if (k < 1) throw InvalidK("recommend needs --k >= 1");
    const std::string path =
        model_path.value_or((experiment.out / "model.json").string());
    std::ifstream model_in(path);
    if (!model_in) throw Error("cannot open model file '" + path + "'");
    const auto bundle = load_model(model_in);
    const auto predictor = make_predictor(bundle);

    int dense_user = -1;
    for (std::size_t u = 0; u < bundle.user_ids.size(); ++u)
      if (bundle.user_ids[u] == user) dense_user = static_cast<int>(u);
    if (dense_user < 0)
      throw ColdStart("user " + std::to_string(user) + " is unknown to the model");

    std::unordered_set<int> exclude;
    if (!include_seen) {
      const std::string ratings_path = ratings.has_value()
                                           ? *ratings
                                           : experiment.string_or("data.ratings", "");
      if (!ratings_path.empty()) {
        const auto seen = load_ratings(ratings_path);
        std::unordered_map<std::int64_t, int> item_dense;
        for (std::size_t i = 0; i < bundle.item_ids.size(); ++i)
          item_dense[bundle.item_ids[i]] = static_cast<int>(i);
        for (const auto& interaction : seen.interactions()) {
          if (interaction.user_id != user) continue;
          const auto it = item_dense.find(interaction.item_id);
          if (it != item_dense.end()) exclude.insert(it->second);
        }
      }
    }

    std::vector<ScoredItem> scores;
    for (std::size_t i = 0; i < bundle.item_ids.size(); ++i) {
      if (exclude.contains(static_cast<int>(i))) continue;
      try {
        scores.push_back({static_cast<int>(i), predictor(dense_user, static_cast<int>(i))});
      } catch (const ColdStart&) {
      }
    }
    // ties order by the external item id the user actually sees
    std::sort(scores.begin(), scores.end(), [&](const ScoredItem& a, const ScoredItem& b) {
      if (a.score != b.score) return a.score > b.score;
      return bundle.item_ids[static_cast<std::size_t>(a.item)] <
             bundle.item_ids[static_cast<std::size_t>(b.item)];
    });
    if (scores.size() > static_cast<std::size_t>(k)) scores.resize(static_cast<std::size_t>(k));

    std::ostringstream out;
    for (const auto& scored : scores) {
      out << bundle.item_ids[static_cast<std::size_t>(scored.item)] << '\t'
          << nlohmann::json(scored.score).dump() << '\n';
    }
    std::cout << out.str();
    write_atomic(experiment.out / "recommendations.tsv", out.str());
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_tune(const CommonFlags& flags) {
  try {
    auto experiment = load_experiment(flags.config, flags.seed, flags.out);
    const auto dataset =
        load_ratings(resolve_data_path(experiment, std::nullopt, "ratings"));
    if (experiment.find("split.validation_fraction") == nullptr)
      experiment.config["split"]["validation_fraction"] = 0.1;
    const auto split = make_split(experiment, dataset);
    if (!split.validation.has_value())
      throw ConfigError("split.validation_fraction", "tuning needs a validation carve");

    const nlohmann::json model_spec =
        experiment.config.contains("model") ? experiment.require("model")
                                            : nlohmann::json{{"algorithm", "mf_sgd"}};
    const TrainingData data = TrainingData::from_dataset(split.train);
    const std::uint64_t train_seed = derive_seed(experiment.seed, "tune_train");

    const TunableTrainer trainer = [&](const ParamSet& params) -> PredictFn {
      nlohmann::json spec = model_spec;
      for (const auto& [axis, value] : params) spec[axis] = value;
      if (spec.contains("k")) spec["k"] = static_cast<int>(spec["k"].get<double>());
      if (spec.contains("epochs"))
        spec["epochs"] = static_cast<int>(spec["epochs"].get<double>());
      if (spec.contains("batch_size"))
        spec["batch_size"] = static_cast<int>(spec["batch_size"].get<double>());
      if (spec.contains("neighborhood"))
        spec["neighborhood"] = static_cast<int>(spec["neighborhood"].get<double>());
      const Trained trained = train_member(spec, data, train_seed);
      return make_predictor(trained.algorithm, trained.payload);
    };

    const std::string metric_name = experiment.string_or("tune.metric", "rmse");
    const MetricDirection direction =
        metric_name == "rmse" ? MetricDirection::kMinimize : MetricDirection::kMaximize;
    const MetricFn metric = [&](const PredictFn& predictor) -> double {
      if (metric_name == "rmse")
        return validation_rmse(predictor, split.train, *split.validation);
      EvalConfig config = eval_config_from(experiment);
      const auto report = evaluate(predictor, split.train, *split.validation, config);
      if (metric_name == "map") return report.map;
      throw ConfigError("tune.metric", "unknown metric '" + metric_name + "'");
    };

    const std::string method = experiment.string_or("tune.method", "grid");
    TuneResult result;
    if (method == "grid") {
      const auto* grid_node = experiment.find("tune.grid");
      if (grid_node == nullptr) throw ConfigError("tune.grid", "grid search needs axes");
      HyperGrid grid;
      for (const auto& [axis, values] : grid_node->items())
        grid[axis] = values.get<std::vector<double>>();
      result = grid_search(trainer, grid, metric, metric_name, direction);
    } else if (method == "random") {
      const auto* space_node = experiment.find("tune.space");
      if (space_node == nullptr) throw ConfigError("tune.space", "random search needs axes");
      RandomSpace space;
      for (const auto& [axis, node] : space_node->items()) {
        RandomAxis range;
        range.lo = node.at("lo").get<double>();
        range.hi = node.at("hi").get<double>();
        range.log_scale = node.value("log", axis == "learning_rate" || axis == "lambda");
        range.integer = node.value("integer", axis == "k" || axis == "epochs" ||
                                                  axis == "batch_size");
        space[axis] = range;
      }
      result = random_search(trainer, space, static_cast<int>(experiment.number_or("tune.n_trials", 20)),
                             derive_seed(experiment.seed, "random_search"), metric,
                             metric_name, direction);
    } else {
      throw ConfigError("tune.method", "unknown method '" + method + "'");
    }

    std::ostringstream csv;
    write_tuning_csv(result, csv);
    write_atomic(experiment.out / "tuning.csv", csv.str());

    nlohmann::json best = model_spec;
    for (const auto& [axis, value] : result.best().params) best[axis] = value;
    nlohmann::json best_doc;
    best_doc["model"] = best;
    best_doc["metric"] = result.metric_name;
    best_doc["value"] = *result.best().metric;
    write_atomic(experiment.out / "best.json", best_doc.dump(2) + "\n");
    std::cout << "best " << result.metric_name << "="
              << nlohmann::json(*result.best().metric).dump() << '\n';
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

int run_segment(const CommonFlags& flags, const std::optional<std::string>& transactions,
                const std::optional<std::int64_t>& reference_time,
                const std::optional<int>& kmeans_k) {
  try {
    const auto experiment = load_experiment(flags.config, flags.seed, flags.out);
    const std::string path = transactions.has_value()
                                 ? *transactions
                                 : experiment.string_or("data.transactions", "");
    if (path.empty()) throw ConfigError("data.transactions", "required path is missing");
    std::ifstream in(path);
    if (!in) throw Error("cannot open transactions file '" + path + "'");
    const auto log = parse_transactions(in);

    std::int64_t reference = 0;
    if (reference_time.has_value()) {
      reference = *reference_time;
    } else if (const auto* node = experiment.find("segment.reference_time"); node != nullptr) {
      reference = node->get<std::int64_t>();
    } else {
      for (const auto& tx : log.records) reference = std::max(reference, tx.timestamp);
    }

    auto scored = score_quintiles(compute_rfm(log, reference));
    if (scored.reduced)
      std::cerr << "warning: fewer than 5 customers; using " << scored.buckets
                << " buckets\n";

    std::ostringstream csv;
    write_segment_csv(scored.profiles, csv);
    write_atomic(experiment.out / "segments.csv", csv.str());
    std::cout << csv.str();

    const int k = kmeans_k.has_value()
                      ? *kmeans_k
                      : static_cast<int>(experiment.number_or("segment.kmeans_k", 0));
    if (k > 0) {
      const auto clusters = kmeans_segment(scored.profiles, k,
                                           derive_seed(experiment.seed, "kmeans"));
      std::ostringstream cluster_csv;
      cluster_csv << "customer_id,cluster\n";
      for (std::size_t i = 0; i < scored.profiles.size(); ++i)
        cluster_csv << scored.profiles[i].customer_id << ',' << clusters.assignment[i] << '\n';
      write_atomic(experiment.out / "clusters.csv", cluster_csv.str());
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

}  // namespace reckit::cli
