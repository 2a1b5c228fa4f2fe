#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reckit/ingest.hpp"
#include "reckit/linalg.hpp"

namespace reckit {

/// Per-customer recency/frequency/monetary values plus quintile scores
/// (1 best .. 5 worst once scored).
struct RfmProfile {
  std::string customer_id;
  double recency_days = 0.0;
  std::size_t frequency = 0;
  double monetary = 0.0;
  int r = 0;
  int f = 0;
  int m = 0;
};

/// recency = days since last purchase, frequency = purchase count,
/// monetary = total spend. Throws InvalidReference when reference_time
/// precedes a transaction and EmptyInput for an empty log.
std::vector<RfmProfile> compute_rfm(const TransactionLog& log, std::int64_t reference_time);

struct QuintileResult {
  std::vector<RfmProfile> profiles;
  int buckets = 5;
  bool reduced = false;  // fewer than 5 customers shrinks the bucket count
};

/// Ranks each attribute into quintiles: lower recency scores better, higher
/// frequency and monetary score better; ties share the better bucket.
QuintileResult score_quintiles(std::vector<RfmProfile> profiles);

struct Segment {
  std::string name;
  int r = 0;
  int f = 0;
  int m = 0;
  std::string description;
};

/// The six canonical segment patterns, encoded verbatim.
const std::array<Segment, 6>& segment_table();

/// Exact match against the segment table; the table is a lookup of six
/// exemplars, not a partition, so most score triples return nullopt
/// (unlabeled).
std::optional<Segment> assign_segment(const RfmProfile& profile);

/// The segment name or "Unlabeled".
std::string segment_label(const RfmProfile& profile);

struct KmeansResult {
  std::vector<int> assignment;
  DenseMatrix centroids;              // k x 3, in z-scored feature space
  std::vector<double> inertia_trace;  // non-increasing per Lloyd iteration
  int iterations = 0;
};

/// Lloyd's algorithm on z-scored (recency, frequency, monetary) vectors.
/// Initial centroids are k distinct points sampled uniformly under the
/// seed. Throws InvalidK when k exceeds the number of distinct points.
KmeansResult kmeans_segment(std::span<const RfmProfile> profiles, int k, std::uint64_t seed,
                            int max_iters = 100);

/// `customer_id,recency,frequency,monetary,r,f,m,segment` rows.
void write_segment_csv(std::span<const RfmProfile> profiles, std::ostream& out);

}  // namespace reckit
