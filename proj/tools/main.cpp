#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"reckit - recommendation engine toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  reckit::cli::CommonFlags flags;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  app.add_option("--config", config, "experiment config JSON")->expected(1);
  app.add_option("--seed", seed, "master random seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");

  std::optional<std::string> ratings;
  std::optional<std::string> items;
  std::optional<std::string> transactions;
  std::optional<std::string> model_path;

  auto* ingest = app.add_subcommand("ingest", "parse data files, write canonical copies");
  ingest->add_option("--ratings", ratings, "MovieLens u.data-format ratings file");
  ingest->add_option("--items", items, "MovieLens u.item-format item file");

  auto* stats = app.add_subcommand("stats", "print dataset statistics");
  stats->add_option("--ratings", ratings, "ratings file");

  auto* split = app.add_subcommand("split", "split a dataset and export the parts");
  std::optional<std::string> strategy;
  std::optional<double> test_fraction;
  std::optional<double> validation_fraction;
  std::optional<std::int64_t> cutoff;
  std::optional<int> folds;
  split->add_option("--ratings", ratings, "ratings file");
  split->add_option("--strategy", strategy, "random | time | stratified | kfold");
  split->add_option("--test-fraction", test_fraction, "test fraction in (0,1)");
  split->add_option("--validation-fraction", validation_fraction, "validation carve fraction");
  split->add_option("--cutoff", cutoff, "timestamp cutoff for the time strategy");
  split->add_option("--folds", folds, "fold count for the kfold strategy");

  app.add_subcommand("train", "train the configured model or ensemble");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained model on the test split");
  evaluate->add_option("--model", model_path, "model container (default <out>/model.json)");

  auto* recommend = app.add_subcommand("recommend", "top-K recommendations for one user");
  std::int64_t user = 0;
  int k = 10;
  bool include_seen = false;
  recommend->add_option("--model", model_path, "model container");
  recommend->add_option("--ratings", ratings, "ratings used to exclude seen items");
  recommend->add_option("--user", user, "external user id")->required();
  recommend->add_option("--k", k, "list length");
  recommend->add_flag("--include-seen", include_seen, "do not exclude already-rated items");

  app.add_subcommand("tune", "hyperparameter search over the configured model");

  auto* segment = app.add_subcommand("segment", "RFM customer segmentation");
  std::optional<std::int64_t> reference_time;
  std::optional<int> kmeans_k;
  segment->add_option("--transactions", transactions, "transactions CSV");
  segment->add_option("--reference-time", reference_time, "epoch reference (default: newest)");
  segment->add_option("--kmeans-k", kmeans_k, "also k-means cluster the RFM vectors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << '\n';
    return 2;
  }

  flags.config = config;
  flags.seed = seed;
  flags.out = out;

  if (ingest->parsed()) return reckit::cli::run_ingest(flags, ratings, items);
  if (stats->parsed()) return reckit::cli::run_stats(flags, ratings);
  if (split->parsed())
    return reckit::cli::run_split(flags, ratings, strategy, test_fraction,
                                  validation_fraction, cutoff, folds);
  if (app.get_subcommand("train")->parsed()) return reckit::cli::run_train(flags);
  if (evaluate->parsed()) return reckit::cli::run_evaluate(flags, model_path);
  if (recommend->parsed())
    return reckit::cli::run_recommend(flags, model_path, ratings, user, k, include_seen);
  if (app.get_subcommand("tune")->parsed()) return reckit::cli::run_tune(flags);
  if (segment->parsed())
    return reckit::cli::run_segment(flags, transactions, reference_time, kmeans_k);
  std::cerr << app.help() << '\n';
  return 2;
}
