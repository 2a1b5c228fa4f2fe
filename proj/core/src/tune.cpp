#include "reckit/tune.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "reckit/errors.hpp"
#include "reckit/random.hpp"

namespace reckit {

namespace {

TuneResult run_cells(const TunableTrainer& trainer, std::vector<ParamSet> cells,
                     const MetricFn& metric, std::string metric_name,
                     MetricDirection direction) {
  TuneResult result;
  result.metric_name = std::move(metric_name);
  result.direction = direction;
  result.table.reserve(cells.size());

  bool have_best = false;
  for (auto& params : cells) {
    TuneCell cell;
    cell.params = std::move(params);
    try {
      const PredictFn model = trainer(cell.params);
      cell.metric = metric(model);
    } catch (const Error& e) {
      cell.error = e.what();
    }
    result.table.push_back(std::move(cell));

    const auto& added = result.table.back();
    if (!added.metric.has_value()) continue;
    if (!have_best) {
      result.best_index = result.table.size() - 1;
      have_best = true;
      continue;
    }
    const double best_value = *result.table[result.best_index].metric;
    const bool improves = direction == MetricDirection::kMinimize
                              ? *added.metric < best_value
                              : *added.metric > best_value;
    if (improves) result.best_index = result.table.size() - 1;
  }
  if (!have_best) throw EmptyInput("every configuration failed to train");
  return result;
}

}  // namespace

TuneResult grid_search(const TunableTrainer& trainer, const HyperGrid& grid,
                       const MetricFn& metric, std::string metric_name,
                       MetricDirection direction) {
  if (grid.empty()) throw InvalidConfig("grid_search: empty grid");
  for (const auto& [axis, values] : grid)
    if (values.empty()) throw InvalidConfig("grid_search: axis '" + axis + "' has no values");

  std::vector<ParamSet> cells;
  cells.push_back({});
  for (const auto& [axis, values] : grid) {
    std::vector<ParamSet> expanded;
    expanded.reserve(cells.size() * values.size());
    for (const auto& cell : cells) {
      for (double value : values) {
        ParamSet next = cell;
        next[axis] = value;
        expanded.push_back(std::move(next));
      }
    }
    cells = std::move(expanded);
  }
  return run_cells(trainer, std::move(cells), metric, std::move(metric_name), direction);
}

TuneResult random_search(const TunableTrainer& trainer, const RandomSpace& space, int n_trials,
                         std::uint64_t seed, const MetricFn& metric, std::string metric_name,
                         MetricDirection direction) {
  if (space.empty()) throw InvalidConfig("random_search: empty space");
  if (n_trials < 1) throw InvalidConfig("random_search: n_trials must be >= 1");
  for (const auto& [axis, range] : space) {
    if (!(range.hi >= range.lo))
      throw InvalidConfig("random_search: axis '" + axis + "' has hi < lo");
    if (range.log_scale && !(range.lo > 0.0))
      throw InvalidConfig("random_search: log-scale axis '" + axis + "' needs lo > 0");
  }

  Rng rng(derive_seed(seed, "random_search"));
  std::vector<ParamSet> cells;
  cells.reserve(static_cast<std::size_t>(n_trials));
  for (int trial = 0; trial < n_trials; ++trial) {
    ParamSet params;
    for (const auto& [axis, range] : space) {
      double value;
      if (range.log_scale)
        value = std::exp(rng.uniform(std::log(range.lo), std::log(range.hi)));
      else
        value = rng.uniform(range.lo, range.hi);
      if (range.integer) value = std::round(value);
      params[axis] = value;
    }
    cells.push_back(std::move(params));
  }
  return run_cells(trainer, std::move(cells), metric, std::move(metric_name), direction);
}

void write_tuning_csv(const TuneResult& result, std::ostream& out) {
  if (result.table.empty()) return;
  char buf[64];
  auto fmt = [&buf](double value) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
  };
  for (const auto& [axis, value] : result.table.front().params) out << axis << ',';
  out << result.metric_name << ",error,best\n";
  for (std::size_t row = 0; row < result.table.size(); ++row) {
    const auto& cell = result.table[row];
    for (const auto& [axis, value] : cell.params) out << fmt(value) << ',';
    out << (cell.metric.has_value() ? fmt(*cell.metric) : "") << ',' << cell.error << ','
        << (row == result.best_index ? "1" : "0") << '\n';
  }
}

}  // namespace reckit
