#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "reckit/errors.hpp"
#include "reckit/random.hpp"
#include "reckit/segment.hpp"
#include "support/synthetic.hpp"

using namespace reckit;

namespace {

TransactionLog log_of(std::vector<Transaction> records) {
  TransactionLog log;
  log.records = std::move(records);
  return log;
}

}  // namespace

TEST_CASE("compute_rfm identity cases") {
  const auto profiles = compute_rfm(log_of({{"c1", 1000, 10.0}}), 1000);
  REQUIRE(profiles.size() == 1);
  CHECK(profiles[0].recency_days == 0.0);
  CHECK(profiles[0].frequency == 1);
  CHECK(profiles[0].monetary == 10.0);
}

TEST_CASE("compute_rfm aggregates per customer") {
  const auto profiles = compute_rfm(
      log_of({{"c1", 100, 5.0}, {"c1", 200, 5.0}, {"c1", 300, 5.0}}), 300 + 86400);
  REQUIRE(profiles.size() == 1);
  CHECK(profiles[0].frequency == 3);
  CHECK(profiles[0].monetary == 15.0);
  CHECK(profiles[0].recency_days == doctest::Approx(1.0));
}

TEST_CASE("compute_rfm rejects a reference time before a transaction") {
  CHECK_THROWS_AS(compute_rfm(log_of({{"c1", 1000, 1.0}}), 999), InvalidReference);
}

TEST_CASE("compute_rfm matches a group-by oracle on a synthetic log") {
  Rng rng(141);
  std::vector<Transaction> records;
  for (int i = 0; i < 600; ++i) {
    records.push_back({"c" + std::to_string(rng.uniform_int(100)),
                       static_cast<std::int64_t>(rng.uniform_int(1000000)),
                       rng.uniform(0.0, 50.0)});
  }
  const std::int64_t reference = 2000000;
  const auto profiles = compute_rfm(log_of(records), reference);

  std::map<std::string, std::size_t> count_oracle;
  std::map<std::string, double> sum_oracle;
  std::map<std::string, std::int64_t> last_oracle;
  for (const auto& tx : records) {
    ++count_oracle[tx.customer_id];
    sum_oracle[tx.customer_id] += tx.amount;
    auto [it, inserted] = last_oracle.try_emplace(tx.customer_id, tx.timestamp);
    if (!inserted) it->second = std::max(it->second, tx.timestamp);
  }
  REQUIRE(profiles.size() == count_oracle.size());
  for (const auto& profile : profiles) {
    CHECK(profile.frequency == count_oracle.at(profile.customer_id));
    CHECK(profile.monetary == doctest::Approx(sum_oracle.at(profile.customer_id)));
    CHECK(profile.recency_days ==
          doctest::Approx(static_cast<double>(reference - last_oracle.at(profile.customer_id)) /
                          86400.0));
  }
}

TEST_CASE("score_quintiles: extremes score (1,1,1) and (5,5,5)") {
  std::vector<RfmProfile> profiles;
  for (int i = 0; i < 10; ++i) {
    RfmProfile profile;
    profile.customer_id = "c" + std::to_string(i);
    profile.recency_days = 10.0 * (i + 1);           // c0 most recent
    profile.frequency = static_cast<std::size_t>(100 - i);  // c0 most frequent
    profile.monetary = 1000.0 - 50.0 * i;            // c0 biggest spender
    profiles.push_back(profile);
  }
  const auto result = score_quintiles(profiles);
  CHECK(!result.reduced);
  CHECK(result.profiles.front().r == 1);
  CHECK(result.profiles.front().f == 1);
  CHECK(result.profiles.front().m == 1);
  CHECK(result.profiles.back().r == 5);
  CHECK(result.profiles.back().f == 5);
  CHECK(result.profiles.back().m == 5);
}

TEST_CASE("score_quintiles: 10 distinct customers give exactly 2 per bucket") {
  std::vector<RfmProfile> profiles;
  for (int i = 0; i < 10; ++i) {
    RfmProfile profile;
    profile.customer_id = "c" + std::to_string(i);
    profile.recency_days = 3.0 * i + 1.0;
    profile.frequency = static_cast<std::size_t>(7 * i + 3);
    profile.monetary = 13.0 * i + 2.0;
    profiles.push_back(profile);
  }
  const auto result = score_quintiles(profiles);

  // rank-bucket oracle: sorted rank -> 1 + floor(rank * 5 / 10)
  std::map<int, int> r_counts;
  std::map<int, int> f_counts;
  std::map<int, int> m_counts;
  for (const auto& profile : result.profiles) {
    ++r_counts[profile.r];
    ++f_counts[profile.f];
    ++m_counts[profile.m];
  }
  for (int bucket = 1; bucket <= 5; ++bucket) {
    CHECK(r_counts[bucket] == 2);
    CHECK(f_counts[bucket] == 2);
    CHECK(m_counts[bucket] == 2);
  }
}

TEST_CASE("quintile ties share the better bucket") {
  std::vector<RfmProfile> profiles(6);
  for (int i = 0; i < 6; ++i) {
    profiles[static_cast<std::size_t>(i)].customer_id = "c" + std::to_string(i);
    profiles[static_cast<std::size_t>(i)].recency_days = i < 2 ? 5.0 : 10.0 + i;
    profiles[static_cast<std::size_t>(i)].frequency = 10;  // all tied
    profiles[static_cast<std::size_t>(i)].monetary = 100.0;
  }
  const auto result = score_quintiles(profiles);
  CHECK(result.profiles[0].r == result.profiles[1].r);
  CHECK(result.profiles[0].r == 1);
  for (const auto& profile : result.profiles) {
    CHECK(profile.f == 1);  // all tied -> everyone in the best bucket
    CHECK(profile.m == 1);
  }
}

TEST_CASE("quintile scores depend only on ranks (monotone transform invariance)") {
  Rng rng(143);
  std::vector<RfmProfile> profiles(25);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].customer_id = "c" + std::to_string(i);
    profiles[i].recency_days = rng.uniform(0.0, 100.0);
    profiles[i].frequency = 1 + rng.uniform_int(50);
    profiles[i].monetary = rng.uniform(1.0, 500.0);
  }
  const auto base = score_quintiles(profiles);
  auto transformed = profiles;
  for (auto& profile : transformed) {
    profile.recency_days = std::exp(profile.recency_days / 20.0);  // strictly increasing
    profile.monetary = std::sqrt(profile.monetary) * 3.0 + 1.0;
  }
  const auto again = score_quintiles(transformed);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    CHECK(base.profiles[i].r == again.profiles[i].r);
    CHECK(base.profiles[i].f == again.profiles[i].f);
    CHECK(base.profiles[i].m == again.profiles[i].m);
  }
}

TEST_CASE("fewer than five customers reduces the bucket count") {
  std::vector<RfmProfile> profiles(3);
  for (int i = 0; i < 3; ++i) {
    profiles[static_cast<std::size_t>(i)].customer_id = "c" + std::to_string(i);
    profiles[static_cast<std::size_t>(i)].recency_days = i;
    profiles[static_cast<std::size_t>(i)].frequency = static_cast<std::size_t>(3 - i);
    profiles[static_cast<std::size_t>(i)].monetary = 10.0 - i;
  }
  const auto result = score_quintiles(profiles);
  CHECK(result.reduced);
  CHECK(result.buckets == 3);
  CHECK(result.profiles.front().r == 1);
  CHECK(result.profiles.back().r == 3);
}

TEST_CASE("assign_segment matches the six table rows exactly") {
  auto scored = [](int r, int f, int m) {
    RfmProfile profile;
    profile.r = r;
    profile.f = f;
    profile.m = m;
    return profile;
  };
  CHECK(assign_segment(scored(1, 1, 1))->name == "Best customers");
  CHECK(assign_segment(scored(2, 2, 3))->name == "Loyal customers");
  CHECK(assign_segment(scored(1, 4, 1))->name == "Big spenders");
  CHECK(assign_segment(scored(3, 2, 4))->name == "Almost lost");
  CHECK(assign_segment(scored(4, 1, 5))->name == "Lost customers");
  CHECK(assign_segment(scored(5, 5, 5))->name == "Inactive customers");
  CHECK(!assign_segment(scored(3, 3, 3)).has_value());
  CHECK(segment_label(scored(3, 3, 3)) == "Unlabeled");
  // pure function of the scores
  CHECK(assign_segment(scored(1, 1, 1))->name == assign_segment(scored(1, 1, 1))->name);
}

TEST_CASE("kmeans separates two well-separated clouds") {
  Rng rng(149);
  std::vector<RfmProfile> profiles;
  for (int i = 0; i < 20; ++i) {
    RfmProfile profile;
    profile.customer_id = "c" + std::to_string(i);
    const bool cloud = i < 10;
    profile.recency_days = (cloud ? 5.0 : 80.0) + rng.uniform(-1.0, 1.0);
    profile.frequency = static_cast<std::size_t>(cloud ? 50 + rng.uniform_int(5) : 2 + rng.uniform_int(3));
    profile.monetary = (cloud ? 900.0 : 30.0) + rng.uniform(-5.0, 5.0);
    profiles.push_back(profile);
  }
  const auto result = kmeans_segment(profiles, 2, 7);
  for (int i = 1; i < 10; ++i) CHECK(result.assignment[static_cast<std::size_t>(i)] == result.assignment[0]);
  for (int i = 11; i < 20; ++i) CHECK(result.assignment[static_cast<std::size_t>(i)] == result.assignment[10]);
  CHECK(result.assignment[0] != result.assignment[10]);
}

TEST_CASE("kmeans with k = 1 centers on the mean") {
  std::vector<RfmProfile> profiles(4);
  for (int i = 0; i < 4; ++i) {
    profiles[static_cast<std::size_t>(i)].customer_id = "c" + std::to_string(i);
    profiles[static_cast<std::size_t>(i)].recency_days = i;
    profiles[static_cast<std::size_t>(i)].frequency = static_cast<std::size_t>(i + 1);
    profiles[static_cast<std::size_t>(i)].monetary = 10.0 * i;
  }
  const auto result = kmeans_segment(profiles, 1, 3);
  // in z-scored space the mean is the origin
  for (int d = 0; d < 3; ++d) CHECK(result.centroids.at(0, d) == doctest::Approx(0.0));
  for (int assignment : result.assignment) CHECK(assignment == 0);
}

TEST_CASE("kmeans inertia is monotone and beats a random-assignment baseline") {
  Rng rng(151);
  std::vector<RfmProfile> profiles(20);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].customer_id = "c" + std::to_string(i);
    profiles[i].recency_days = rng.uniform(0.0, 60.0);
    profiles[i].frequency = 1 + rng.uniform_int(40);
    profiles[i].monetary = rng.uniform(5.0, 800.0);
  }
  const auto result = kmeans_segment(profiles, 3, 11);
  REQUIRE(!result.inertia_trace.empty());
  for (std::size_t i = 1; i < result.inertia_trace.size(); ++i)
    CHECK(result.inertia_trace[i] <= result.inertia_trace[i - 1] + 1e-9);

  // Random-assignment oracle baseline in the same z-scored space.
  std::vector<double> mean(3, 0.0);
  std::vector<double> sd(3, 0.0);
  auto attr = [&](const RfmProfile& p, int d) {
    return d == 0 ? p.recency_days : (d == 1 ? static_cast<double>(p.frequency) : p.monetary);
  };
  for (int d = 0; d < 3; ++d) {
    for (const auto& p : profiles) mean[static_cast<std::size_t>(d)] += attr(p, d);
    mean[static_cast<std::size_t>(d)] /= static_cast<double>(profiles.size());
    for (const auto& p : profiles) {
      const double diff = attr(p, d) - mean[static_cast<std::size_t>(d)];
      sd[static_cast<std::size_t>(d)] += diff * diff;
    }
    sd[static_cast<std::size_t>(d)] = std::sqrt(sd[static_cast<std::size_t>(d)] / static_cast<double>(profiles.size()));
  }
  Rng baseline_rng(31);
  double baseline = 0.0;
  {
    std::vector<int> assignment(profiles.size());
    for (auto& a : assignment) a = static_cast<int>(baseline_rng.uniform_int(3));
    std::vector<std::vector<double>> centroid(3, std::vector<double>(3, 0.0));
    std::vector<int> counts(3, 0);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      ++counts[static_cast<std::size_t>(assignment[i])];
      for (int d = 0; d < 3; ++d)
        centroid[static_cast<std::size_t>(assignment[i])][static_cast<std::size_t>(d)] +=
            (attr(profiles[i], d) - mean[static_cast<std::size_t>(d)]) / sd[static_cast<std::size_t>(d)];
    }
    for (int c = 0; c < 3; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        for (int d = 0; d < 3; ++d)
          centroid[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] /= counts[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < profiles.size(); ++i)
      for (int d = 0; d < 3; ++d) {
        const double z = (attr(profiles[i], d) - mean[static_cast<std::size_t>(d)]) / sd[static_cast<std::size_t>(d)];
        const double diff = z - centroid[static_cast<std::size_t>(assignment[i])][static_cast<std::size_t>(d)];
        baseline += diff * diff;
      }
  }
  CHECK(result.inertia_trace.back() <= baseline);

  // seed reproducibility
  const auto again = kmeans_segment(profiles, 3, 11);
  CHECK(result.assignment == again.assignment);
  CHECK(result.inertia_trace == again.inertia_trace);
}

TEST_CASE("kmeans rejects k above the number of distinct points") {
  std::vector<RfmProfile> profiles(4);
  for (auto& profile : profiles) {
    profile.recency_days = 1.0;
    profile.frequency = 2;
    profile.monetary = 3.0;
  }
  CHECK_THROWS_AS(kmeans_segment(profiles, 2, 1), InvalidK);
  CHECK_NOTHROW(kmeans_segment(profiles, 1, 1));
}

TEST_CASE("segment CSV layout") {
  std::vector<RfmProfile> profiles(1);
  profiles[0].customer_id = "c9";
  profiles[0].recency_days = 1.5;
  profiles[0].frequency = 4;
  profiles[0].monetary = 99.5;
  profiles[0].r = 1;
  profiles[0].f = 1;
  profiles[0].m = 1;
  std::ostringstream out;
  write_segment_csv(profiles, out);
  CHECK(out.str() ==
        "customer_id,recency,frequency,monetary,r,f,m,segment\n"
        "c9,1.5,4,99.5,1,1,1,Best customers\n");
}
