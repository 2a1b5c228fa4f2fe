#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace reckit {

/// Self-contained xoshiro256++ generator. All randomness in the library flows
/// through this class so that results are bit-reproducible across platforms
/// and standard-library versions (std:: distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev);

  /// Fisher-Yates shuffle, deterministic for a given generator state.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::uint64_t state_[4];
  bool have_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Derives a sub-seed for a named component from a master seed (FNV-1a mix).
/// Keeps independent pipeline stages reproducible in isolation.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace reckit
