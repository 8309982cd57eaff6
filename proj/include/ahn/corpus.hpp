#pragma once

#include "ahn/rng.hpp"
#include "ahn/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

namespace ahn {

struct CorpusFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Interaction {
  std::string user_id;
  std::string item_id;
  double rating = 0;
  std::string review_text;
  std::optional<std::int64_t> timestamp;
};

struct ParseStats {
  std::size_t records = 0;
  std::size_t malformed = 0;
};

/// Parses one record of the Amazon review dump; nullopt when malformed.
inline std::optional<Interaction> parse_review_record(const std::string &line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto str = [&](const char *key) -> const nlohmann::json * {
    auto it = j.find(key);
    return it != j.end() && it->is_string() ? &*it : nullptr;
  };
  const auto *user = str("reviewerID");
  const auto *item = str("asin");
  const auto *text = str("reviewText");
  auto overall = j.find("overall");
  if (!user || !item || !text || overall == j.end() || !overall->is_number())
    return std::nullopt;
  Interaction rec;
  rec.user_id = user->get<std::string>();
  rec.item_id = item->get<std::string>();
  rec.review_text = text->get<std::string>();
  rec.rating = overall->get<double>();
  if (!std::isfinite(rec.rating) || rec.rating < 1 || rec.rating > 5) return std::nullopt;
  auto ts = j.find("unixReviewTime");
  if (ts != j.end() && ts->is_number_integer()) rec.timestamp = ts->get<std::int64_t>();
  return rec;
}

/// Reads newline-delimited review records, skipping (and counting) malformed
/// ones. Throws CorpusFormatError when more than half of the records are bad.
inline std::vector<Interaction> parse_reviews(std::istream &in, ParseStats *stats = nullptr) {
  std::vector<Interaction> out;
  ParseStats local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.records;
    if (auto rec = parse_review_record(line)) out.push_back(std::move(*rec));
    else ++local.malformed;
  }
  if (stats) *stats = local;
  if (local.records > 0 && 2 * local.malformed > local.records)
    throw CorpusFormatError(std::to_string(local.malformed) + " of " +
                            std::to_string(local.records) + " records are malformed");
  return out;
}

inline std::vector<Interaction> parse_reviews(const std::string &path,
                                              ParseStats *stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return parse_reviews(in, stats);
}

/// The t-core: the largest subset in which every remaining user and item has
/// at least t interactions. Computed by peeling to a fixpoint; input order is
/// preserved.
inline std::vector<Interaction> tcore_filter(const std::vector<Interaction> &in,
                                             std::size_t t) {
  if (t < 1) throw std::invalid_argument("t-core requires t >= 1");
  std::map<std::string, std::vector<std::size_t>> by_user, by_item;
  for (std::size_t i = 0; i < in.size(); ++i) {
    by_user[in[i].user_id].push_back(i);
    by_item[in[i].item_id].push_back(i);
  }
  std::map<std::string, std::size_t> user_deg, item_deg;
  for (const auto &[u, v] : by_user) user_deg[u] = v.size();
  for (const auto &[i, v] : by_item) item_deg[i] = v.size();
  std::vector<bool> alive(in.size(), true);
  std::queue<std::pair<bool, std::string>> pending; // (is_user, id)
  for (const auto &[u, d] : user_deg)
    if (d < t) pending.emplace(true, u);
  for (const auto &[i, d] : item_deg)
    if (d < t) pending.emplace(false, i);
  while (!pending.empty()) {
    auto [is_user, id] = pending.front();
    pending.pop();
    const auto &rows = is_user ? by_user[id] : by_item[id];
    for (std::size_t r : rows) {
      if (!alive[r]) continue;
      alive[r] = false;
      if (is_user) {
        auto &d = item_deg[in[r].item_id];
        if (d-- == t) pending.emplace(false, in[r].item_id);
      } else {
        auto &d = user_deg[in[r].user_id];
        if (d-- == t) pending.emplace(true, in[r].user_id);
      }
    }
  }
  std::vector<Interaction> out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (alive[i]) out.push_back(in[i]);
  if (out.empty() && !in.empty())
    std::cerr << "warning: " << t << "-core of " << in.size()
              << " interactions is empty\n";
  return out;
}

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train, val, test;
};

/// Seeded 80/10/10 split of interaction ids 0..count-1, with the train and
/// validation sizes rounded to nearest and test taking the remainder.
inline SplitManifest split(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = i;
  Rng rng(seed);
  rng.shuffle(ids);
  const std::size_t n_train = (count * 8 + 5) / 10;
  const std::size_t n_val = std::min((count + 5) / 10, count - n_train);
  SplitManifest m;
  m.seed = seed;
  m.train.assign(ids.begin(), ids.begin() + n_train);
  m.val.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
  m.test.assign(ids.begin() + n_train + n_val, ids.end());
  for (auto *part : {&m.train, &m.val, &m.test}) std::sort(part->begin(), part->end());
  return m;
}

} // namespace ahn
