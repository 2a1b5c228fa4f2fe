#include "reckit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "reckit/errors.hpp"

namespace reckit {

namespace {

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::int64_t parse_int(const std::string& text, std::size_t line_no, const char* what) {
  std::int64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(std::string("invalid ") + what + " '" + text + "'", line_no);
  return value;
}

double parse_double(const std::string& text, std::size_t line_no, const char* what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError(std::string("invalid ") + what + " '" + text + "'", line_no);
  return value;
}

void format_double(std::string& out, double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Accepts integer epoch seconds or RFC-3339 UTC (YYYY-MM-DDTHH:MM:SSZ).
std::int64_t parse_timestamp(const std::string& text, std::size_t line_no) {
  if (text.find('T') == std::string::npos) return parse_int(text, line_no, "timestamp");
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
    throw ParseError("invalid RFC-3339 timestamp '" + text + "'", line_no);
  }
  auto field = [&](std::size_t pos, std::size_t len) {
    return parse_int(text.substr(pos, len), line_no, "timestamp field");
  };
  const int year = static_cast<int>(field(0, 4));
  const int month = static_cast<int>(field(5, 2));
  const int day = static_cast<int>(field(8, 2));
  const int hour = static_cast<int>(field(11, 2));
  const int minute = static_cast<int>(field(14, 2));
  const int second = static_cast<int>(field(17, 2));
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
    throw ParseError("out-of-range RFC-3339 timestamp '" + text + "'", line_no);
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

}  // namespace

RatingDataset parse_ratings(std::istream& in, RatingScale scale) {
  std::vector<Interaction> interactions;
  std::string raw_line;
  std::size_t line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = strip_cr(raw_line);
    if (line.empty()) continue;
    const auto fields = split_on(line, '\t');
    if (fields.size() != 4) throw ParseError("expected 4 tab-separated fields", line_no);
    Interaction interaction;
    interaction.user_id = parse_int(fields[0], line_no, "user id");
    interaction.item_id = parse_int(fields[1], line_no, "item id");
    interaction.rating = parse_double(fields[2], line_no, "rating");
    interaction.timestamp = parse_int(fields[3], line_no, "timestamp");
    if (interaction.rating < scale.min || interaction.rating > scale.max)
      throw ParseError("rating outside scale", line_no);
    if (interaction.timestamp < 0) throw ParseError("negative timestamp", line_no);
    interactions.push_back(interaction);
  }
  if (interactions.empty()) throw EmptyDataset("rating stream contains no interactions");
  return RatingDataset::from_interactions(std::move(interactions), scale);
}

void write_ratings(const RatingDataset& dataset, std::ostream& out) {
  std::string line;
  for (const auto& interaction : dataset.interactions()) {
    line.clear();
    line += std::to_string(interaction.user_id);
    line += '\t';
    line += std::to_string(interaction.item_id);
    line += '\t';
    format_double(line, interaction.rating);
    line += '\t';
    line += std::to_string(interaction.timestamp);
    line += '\n';
    out << line;
  }
}

ItemCatalog ItemCatalog::from_items(std::vector<ItemFeatures> items) {
  ItemCatalog catalog;
  if (!items.empty()) catalog.feature_dim_ = items.front().features.size();
  for (std::size_t pos = 0; pos < items.size(); ++pos) {
    if (items[pos].features.size() != catalog.feature_dim_)
      throw DimensionError("item feature vectors differ in length");
    catalog.by_id_.emplace(items[pos].item_id, pos);
  }
  catalog.items_ = std::move(items);
  return catalog;
}

const ItemFeatures* ItemCatalog::find(std::int64_t item_id) const {
  auto it = by_id_.find(item_id);
  if (it == by_id_.end()) return nullptr;
  return &items_[it->second];
}

ItemCatalog parse_items(std::istream& in, int n_genres) {
  std::vector<ItemFeatures> items;
  std::string raw_line;
  std::size_t line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = strip_cr(raw_line);
    if (line.empty()) continue;
    const auto fields = split_on(line, '|');
    // u.item: id|title|release date|video release date|url|19 genre flags
    if (static_cast<int>(fields.size()) < n_genres + 1)
      throw ParseError("too few fields for " + std::to_string(n_genres) + " genre flags",
                       line_no);
    ItemFeatures item;
    item.item_id = parse_int(fields[0], line_no, "item id");
    if (fields.size() > 1) {
      item.title = fields[1];
      // Legacy 8-bit encodings appear in MovieLens titles; titles are
      // cosmetic, so replace anything non-ASCII instead of failing.
      for (char& c : item.title)
        if (static_cast<unsigned char>(c) >= 0x80) c = '?';
    }
    if (fields.size() > 2 && fields[2].size() >= 4) {
      const std::string year_text = fields[2].substr(fields[2].size() - 4);
      int year = 0;
      auto [ptr, ec] = std::from_chars(year_text.data(), year_text.data() + 4, year);
      if (ec == std::errc{} && ptr == year_text.data() + 4) item.release_year = year;
    }
    item.features.reserve(static_cast<std::size_t>(n_genres));
    for (std::size_t f = fields.size() - static_cast<std::size_t>(n_genres); f < fields.size();
         ++f) {
      const double flag = parse_double(fields[f], line_no, "genre flag");
      if (flag != 0.0 && flag != 1.0) throw ParseError("genre flag must be 0 or 1", line_no);
      item.features.push_back(flag);
    }
    items.push_back(std::move(item));
  }
  return ItemCatalog::from_items(std::move(items));
}

TransactionLog parse_transactions(std::istream& in) {
  TransactionLog log;
  std::string raw_line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = strip_cr(raw_line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "customer_id,timestamp,amount")
        throw ParseError("expected header 'customer_id,timestamp,amount'", line_no);
      saw_header = true;
      continue;
    }
    const auto fields = split_on(line, ',');
    if (fields.size() != 3) throw ParseError("expected 3 comma-separated fields", line_no);
    Transaction tx;
    tx.customer_id = fields[0];
    tx.timestamp = parse_timestamp(fields[1], line_no);
    tx.amount = parse_double(fields[2], line_no, "amount");
    if (tx.amount < 0.0)
      throw ValueError("negative amount at line " + std::to_string(line_no));
    log.records.push_back(std::move(tx));
  }
  if (!saw_header) throw ParseError("empty transaction stream", 0);
  return log;
}

StatsSummary dataset_stats(const RatingDataset& dataset) {
  if (dataset.empty()) throw EmptyDataset("dataset_stats of an empty dataset");
  StatsSummary stats;
  stats.n_interactions = dataset.size();
  stats.n_users = static_cast<std::size_t>(dataset.n_users());
  stats.n_items = static_cast<std::size_t>(dataset.n_items());

  std::vector<double> ratings;
  ratings.reserve(dataset.size());
  double sum = 0.0;
  for (const auto& interaction : dataset.interactions()) {
    ratings.push_back(interaction.rating);
    sum += interaction.rating;
    ++stats.rating_counts[interaction.rating];
  }
  const double n = static_cast<double>(ratings.size());
  stats.mean = sum / n;

  double sq = 0.0;
  for (double r : ratings) sq += (r - stats.mean) * (r - stats.mean);
  stats.stddev = std::sqrt(sq / n);

  std::sort(ratings.begin(), ratings.end());
  const std::size_t mid = ratings.size() / 2;
  stats.median =
      ratings.size() % 2 == 1 ? ratings[mid] : 0.5 * (ratings[mid - 1] + ratings[mid]);

  stats.sparsity = 1.0 - n / (static_cast<double>(stats.n_users) *
                              static_cast<double>(stats.n_items));
  return stats;
}

}  // namespace reckit
