#include "reckit/segment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "reckit/errors.hpp"
#include "reckit/random.hpp"

namespace reckit {

std::vector<RfmProfile> compute_rfm(const TransactionLog& log, std::int64_t reference_time) {
  if (log.records.empty()) throw EmptyInput("compute_rfm on an empty transaction log");
  std::map<std::string, RfmProfile> by_customer;
  std::map<std::string, std::int64_t> last_purchase;
  for (const auto& tx : log.records) {
    if (tx.timestamp > reference_time)
      throw InvalidReference("reference time precedes transaction for customer " +
                             tx.customer_id);
    auto& profile = by_customer[tx.customer_id];
    profile.customer_id = tx.customer_id;
    profile.frequency += 1;
    profile.monetary += tx.amount;
    auto [it, inserted] = last_purchase.try_emplace(tx.customer_id, tx.timestamp);
    if (!inserted) it->second = std::max(it->second, tx.timestamp);
  }
  std::vector<RfmProfile> profiles;
  profiles.reserve(by_customer.size());
  for (auto& [customer, profile] : by_customer) {
    profile.recency_days =
        static_cast<double>(reference_time - last_purchase[customer]) / 86400.0;
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

namespace {

// Quintile score via strict-dominance rank: score = 1 + floor(rank * q / n)
// where rank counts customers strictly better. Ties share the better bucket.
template <typename Better>
void score_attribute(std::vector<RfmProfile>& profiles, int buckets, Better better,
                     int RfmProfile::* field) {
  const std::size_t n = profiles.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return better(profiles[a], profiles[b]); });
  std::size_t strictly_better = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos > 0 && better(profiles[order[pos - 1]], profiles[order[pos]]))
      strictly_better = pos;
    profiles[order[pos]].*field =
        1 + static_cast<int>(strictly_better * static_cast<std::size_t>(buckets) / n);
  }
}

}  // namespace

QuintileResult score_quintiles(std::vector<RfmProfile> profiles) {
  if (profiles.empty()) throw EmptyInput("score_quintiles on no profiles");
  QuintileResult result;
  result.buckets = static_cast<int>(std::min<std::size_t>(5, profiles.size()));
  result.reduced = result.buckets < 5;

  score_attribute(profiles, result.buckets,
                  [](const RfmProfile& a, const RfmProfile& b) {
                    return a.recency_days < b.recency_days;  // recent is better
                  },
                  &RfmProfile::r);
  score_attribute(profiles, result.buckets,
                  [](const RfmProfile& a, const RfmProfile& b) {
                    return a.frequency > b.frequency;  // frequent is better
                  },
                  &RfmProfile::f);
  score_attribute(profiles, result.buckets,
                  [](const RfmProfile& a, const RfmProfile& b) {
                    return a.monetary > b.monetary;  // big spend is better
                  },
                  &RfmProfile::m);
  result.profiles = std::move(profiles);
  return result;
}

const std::array<Segment, 6>& segment_table() {
  static const std::array<Segment, 6> table = {{
      {"Best customers", 1, 1, 1, "Bought most recently, most often, and spend the most."},
      {"Loyal customers", 2, 2, 3, "Buy on a regular basis. Responsive to promotions."},
      {"Big spenders", 1, 4, 1, "Spend big money but do so infrequently."},
      {"Almost lost", 3, 2, 4, "Haven't purchased for some time but spent a lot when did."},
      {"Lost customers", 4, 1, 5,
       "Haven't purchased for the longest time, but spent a lot when they did."},
      {"Inactive customers", 5, 5, 5, "Last purchased a long time ago and spent little."},
  }};
  return table;
}

std::optional<Segment> assign_segment(const RfmProfile& profile) {
  for (const auto& segment : segment_table())
    if (segment.r == profile.r && segment.f == profile.f && segment.m == profile.m)
      return segment;
  return std::nullopt;
}

std::string segment_label(const RfmProfile& profile) {
  const auto segment = assign_segment(profile);
  return segment.has_value() ? segment->name : "Unlabeled";
}

KmeansResult kmeans_segment(std::span<const RfmProfile> profiles, int k, std::uint64_t seed,
                            int max_iters) {
  if (profiles.empty()) throw EmptyInput("kmeans_segment on no profiles");
  if (k < 1) throw InvalidK("kmeans_segment requires k >= 1");
  if (max_iters < 1) throw InvalidConfig("kmeans_segment requires max_iters >= 1");

  const std::size_t n = profiles.size();
  DenseMatrix points(static_cast<int>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    points.at(static_cast<int>(i), 0) = profiles[i].recency_days;
    points.at(static_cast<int>(i), 1) = static_cast<double>(profiles[i].frequency);
    points.at(static_cast<int>(i), 2) = profiles[i].monetary;
  }
  // Z-score each attribute; a constant attribute collapses to zero rather
  // than erroring, which leaves clustering over the informative attributes.
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += points.at(static_cast<int>(i), c);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = points.at(static_cast<int>(i), c) - mean;
      sq += d * d;
    }
    const double stddev = std::sqrt(sq / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      double& v = points.at(static_cast<int>(i), c);
      v = stddev > 0.0 ? (v - mean) / stddev : 0.0;
    }
  }

  std::vector<std::size_t> distinct;
  {
    std::set<std::array<double, 3>> seen;
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 3> key = {points.at(static_cast<int>(i), 0),
                                   points.at(static_cast<int>(i), 1),
                                   points.at(static_cast<int>(i), 2)};
      if (seen.insert(key).second) distinct.push_back(i);
    }
  }
  if (static_cast<std::size_t>(k) > distinct.size())
    throw InvalidK("kmeans_segment: k exceeds the number of distinct profiles");

  Rng rng(derive_seed(seed, "kmeans_init"));
  rng.shuffle(distinct);

  KmeansResult result;
  result.centroids = DenseMatrix(k, 3);
  for (int c = 0; c < k; ++c)
    for (int d = 0; d < 3; ++d)
      result.centroids.at(c, d) = points.at(static_cast<int>(distinct[static_cast<std::size_t>(c)]), d);

  result.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_distance = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double distance = 0.0;
        for (int d = 0; d < 3; ++d) {
          const double diff = points.at(static_cast<int>(i), d) - result.centroids.at(c, d);
          distance += diff * diff;
        }
        if (distance < best_distance) {
          best_distance = distance;
          best = c;
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
    }

    DenseMatrix sums(k, 3);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[static_cast<std::size_t>(result.assignment[i])] += 1;
      for (int d = 0; d < 3; ++d)
        sums.at(result.assignment[i], d) += points.at(static_cast<int>(i), d);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;  // empty cluster keeps its centroid
      for (int d = 0; d < 3; ++d)
        result.centroids.at(c, d) =
            sums.at(c, d) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (int d = 0; d < 3; ++d) {
        const double diff = points.at(static_cast<int>(i), d) -
                            result.centroids.at(result.assignment[i], d);
        inertia += diff * diff;
      }
    result.inertia_trace.push_back(inertia);
    result.iterations = iter + 1;
    if (!changed && iter > 0) break;
  }
  return result;
}

void write_segment_csv(std::span<const RfmProfile> profiles, std::ostream& out) {
  out << "customer_id,recency,frequency,monetary,r,f,m,segment\n";
  char buf[64];
  auto fmt = [&buf](double value) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
  };
  for (const auto& profile : profiles) {
    out << profile.customer_id << ',' << fmt(profile.recency_days) << ',' << profile.frequency
        << ',' << fmt(profile.monetary) << ',' << profile.r << ',' << profile.f << ','
        << profile.m << ',' << segment_label(profile) << '\n';
  }
}

}  // namespace reckit
