#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "reckit/errors.hpp"

namespace reckit::cli {

/// Configuration problem with the offending field path, e.g.
/// "model.learning_rate".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error("config error at '" + path + "': " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Values common to every subcommand. Flag values override config fields,
/// which override defaults.
struct Experiment {
  nlohmann::json config;  // parsed config document (may be empty)
  std::uint64_t seed = 0;
  std::filesystem::path out;

  const nlohmann::json* find(const std::string& dotted_path) const;
  double number_or(const std::string& dotted_path, double fallback) const;
  std::string string_or(const std::string& dotted_path, const std::string& fallback) const;
  bool flag_or(const std::string& dotted_path, bool fallback) const;

  /// Missing required field -> ConfigError with the field path.
  const nlohmann::json& require(const std::string& dotted_path) const;
};

Experiment load_experiment(const std::optional<std::string>& config_path,
                           const std::optional<std::uint64_t>& seed_flag,
                           const std::optional<std::string>& out_flag);

/// Writes via a temp file plus rename so failures never leave partial
/// artifacts.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int run_ingest(const CommonFlags& flags, const std::optional<std::string>& ratings,
               const std::optional<std::string>& items);
int run_stats(const CommonFlags& flags, const std::optional<std::string>& ratings);
int run_split(const CommonFlags& flags, const std::optional<std::string>& ratings,
              const std::optional<std::string>& strategy,
              const std::optional<double>& test_fraction,
              const std::optional<double>& validation_fraction,
              const std::optional<std::int64_t>& cutoff, const std::optional<int>& folds);
int run_train(const CommonFlags& flags);
int run_evaluate(const CommonFlags& flags, const std::optional<std::string>& model_path);
int run_recommend(const CommonFlags& flags, const std::optional<std::string>& model_path,
                  const std::optional<std::string>& ratings, std::int64_t user, int k,
                  bool include_seen);
int run_tune(const CommonFlags& flags);
int run_segment(const CommonFlags& flags, const std::optional<std::string>& transactions,
                const std::optional<std::int64_t>& reference_time,
                const std::optional<int>& kmeans_k);

}  // namespace reckit::cli
