#pragma once

#include "ahn/binary_io.hpp"
#include "ahn/corpus.hpp"
#include "ahn/tensor.hpp"
#include "ahn/text.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace ahn {

enum class ReviewOrder { Recent, FirstSeen };

inline std::string to_string(ReviewOrder o) {
  return o == ReviewOrder::Recent ? "recent" : "first";
}

inline ReviewOrder parse_review_order(const std::string &s) {
  if (s == "recent") return ReviewOrder::Recent;
  if (s == "first") return ReviewOrder::FirstSeen;
  throw std::invalid_argument("review order must be 'recent' or 'first', got '" + s + "'");
}

/// Truncation limits for encoded documents.
struct DocumentConfig {
  std::size_t user_reviews = 15; // n
  std::size_t item_reviews = 15; // m
  std::size_t sentences = 10;    // k
  std::size_t words = 20;        // l
  ReviewOrder order = ReviewOrder::Recent;
};

struct PreprocessConfig {
  std::size_t t_core = 5;
  std::uint64_t seed = 1;
  std::size_t vocab_size = 50000;
  DocumentConfig docs;
};

struct Rating {
  std::size_t user = 0;
  std::size_t item = 0;
  double rating = 0;
  std::optional<std::int64_t> timestamp;
};

/// A training review after sentence splitting, truncation and indexing.
struct EncodedReview {
  std::size_t interaction = 0;
  std::vector<std::vector<std::uint32_t>> sentences;
  std::string text;
  std::vector<std::pair<std::size_t, std::size_t>> spans; // per kept sentence
};

/// Padded reviews x sentences x words for one side of a user-item pair.
/// Real content always precedes padding along each axis, so every mask is a
/// prefix of trues.
struct DocumentSet {
  std::size_t max_reviews = 0;
  std::size_t max_sentences = 0;
  std::size_t max_words = 0;
  std::vector<std::uint32_t> words;         // reviews * sentences * words
  std::vector<std::size_t> sentence_counts; // per review slot
  std::vector<std::size_t> word_counts;     // per review * sentences slot
  std::vector<std::size_t> source;          // interaction id of each real review

  DocumentSet() = default;
  DocumentSet(std::size_t reviews, std::size_t sentences, std::size_t words_per)
      : max_reviews(reviews), max_sentences(sentences), max_words(words_per),
        words(reviews * sentences * words_per, Vocabulary::kPad),
        sentence_counts(reviews, 0), word_counts(reviews * sentences, 0) {}

  std::size_t num_reviews() const noexcept { return source.size(); }
  bool cold() const noexcept { return source.empty(); }

  std::uint32_t word(std::size_t r, std::size_t s, std::size_t w) const {
    return words[(r * max_sentences + s) * max_words + w];
  }
  std::uint32_t &word(std::size_t r, std::size_t s, std::size_t w) {
    return words[(r * max_sentences + s) * max_words + w];
  }

  std::vector<bool> review_mask() const {
    std::vector<bool> m(max_reviews, false);
    for (std::size_t r = 0; r < num_reviews(); ++r) m[r] = true;
    return m;
  }
  std::vector<bool> sentence_mask(std::size_t r) const {
    std::vector<bool> m(max_sentences, false);
    for (std::size_t s = 0; s < sentence_counts[r]; ++s) m[s] = true;
    return m;
  }
  std::vector<bool> word_mask(std::size_t r, std::size_t s) const {
    std::vector<bool> m(max_words, false);
    for (std::size_t w = 0; w < word_counts[r * max_sentences + s]; ++w) m[w] = true;
    return m;
  }

  /// Appends a review, truncating to the configured limits.
  void append(const EncodedReview &review) {
    const std::size_t r = num_reviews();
    if (r >= max_reviews) throw DimensionError("document set is full");
    const std::size_t ns = std::min(review.sentences.size(), max_sentences);
    sentence_counts[r] = ns;
    for (std::size_t s = 0; s < ns; ++s) {
      const auto &sent = review.sentences[s];
      const std::size_t nw = std::min(sent.size(), max_words);
      word_counts[r * max_sentences + s] = nw;
      for (std::size_t w = 0; w < nw; ++w) word(r, s, w) = sent[w];
    }
    source.push_back(review.interaction);
  }
};

/// Encoded reviews copied into document sets in this process.
inline std::atomic<std::size_t> &review_reads() {
  static std::atomic<std::size_t> reads{0};
  return reads;
}

struct CorpusStats {
  std::size_t records = 0;
  std::size_t malformed = 0;
  std::size_t interactions = 0;
  std::size_t after_tcore = 0;
};

/// A preprocessed corpus: entity tables, ratings, split, vocabulary and the
/// encoded training reviews from which per-pair documents are assembled.
struct Dataset {
  PreprocessConfig config;
  CorpusStats stats;
  std::string source_path;
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<Rating> ratings;
  SplitManifest splits;
  Vocabulary vocab;
  std::vector<EncodedReview> reviews;

  // Derived: review indices per entity, in selection priority order.
  std::vector<std::vector<std::size_t>> user_reviews;
  std::vector<std::vector<std::size_t>> item_reviews;
  std::vector<bool> user_in_train;
  std::vector<bool> item_in_train;

  /// ID-table row: entities without training interactions share the
  /// trailing cold-start row.
  std::size_t user_row(std::size_t u) const {
    return u < users.size() && user_in_train[u] ? u : users.size();
  }
  std::size_t item_row(std::size_t v) const {
    return v < items.size() && item_in_train[v] ? v : items.size();
  }
  std::size_t user_rows() const { return users.size() + 1; }
  std::size_t item_rows() const { return items.size() + 1; }

  std::optional<std::size_t> find_user(const std::string &id) const {
    auto it = std::find(users.begin(), users.end(), id);
    if (it == users.end()) return std::nullopt;
    return static_cast<std::size_t>(it - users.begin());
  }
  std::optional<std::size_t> find_item(const std::string &id) const {
    auto it = std::find(items.begin(), items.end(), id);
    if (it == items.end()) return std::nullopt;
    return static_cast<std::size_t>(it - items.begin());
  }

  /// Up to n of the user's training reviews, skipping any review the user
  /// wrote for `target_item`.
  DocumentSet user_documents(std::optional<std::size_t> user,
                             std::optional<std::size_t> target_item) const {
    const auto &d = config.docs;
    DocumentSet out(d.user_reviews, d.sentences, d.words);
    if (!user || *user >= users.size()) return out;
    for (std::size_t idx : user_reviews[*user]) {
      if (out.num_reviews() == d.user_reviews) break;
      const auto &rev = reviews[idx];
      if (target_item && ratings[rev.interaction].item == *target_item) continue;
      out.append(rev);
      ++review_reads();
    }
    return out;
  }

  /// Up to m of the item's training reviews, skipping any written by
  /// `target_user`.
  DocumentSet item_documents(std::optional<std::size_t> item,
                             std::optional<std::size_t> target_user) const {
    const auto &d = config.docs;
    DocumentSet out(d.item_reviews, d.sentences, d.words);
    if (!item || *item >= items.size()) return out;
    for (std::size_t idx : item_reviews[*item]) {
      if (out.num_reviews() == d.item_reviews) break;
      const auto &rev = reviews[idx];
      if (target_user && ratings[rev.interaction].user == *target_user) continue;
      out.append(rev);
      ++review_reads();
    }
    return out;
  }

  /// Documents for predicting (user, item); the review the user wrote for the
  /// item, if any, is excluded from both sides.
  std::pair<DocumentSet, DocumentSet> documents_for_pair(std::size_t user,
                                                         std::size_t item) const {
    return {user_documents(user, item), item_documents(item, user)};
  }

  std::vector<std::size_t> split_ids(const std::string &name) const {
    if (name == "train") return splits.train;
    if (name == "val") return splits.val;
    if (name == "test") return splits.test;
    throw std::invalid_argument("unknown split '" + name + "'");
  }

  double mean_train_rating() const {
    if (splits.train.empty()) return 3.0;
    double s = 0;
    for (std::size_t id : splits.train) s += ratings[id].rating;
    return s / static_cast<double>(splits.train.size());
  }

  /// Recomputes the per-entity review lists from `reviews`.
  void index_reviews() {
    user_reviews.assign(users.size(), {});
    item_reviews.assign(items.size(), {});
    user_in_train.assign(users.size(), false);
    item_in_train.assign(items.size(), false);
    for (std::size_t id : splits.train) {
      user_in_train[ratings[id].user] = true;
      item_in_train[ratings[id].item] = true;
    }
    for (std::size_t i = 0; i < reviews.size(); ++i) {
      const auto &r = ratings[reviews[i].interaction];
      user_reviews[r.user].push_back(i);
      item_reviews[r.item].push_back(i);
    }
    auto order = [&](std::vector<std::size_t> &list) {
      if (config.docs.order == ReviewOrder::FirstSeen) return;
      // Most recent first; missing timestamps sort as oldest, later file
      // position breaks ties.
      std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
        const auto &ra = ratings[reviews[a].interaction];
        const auto &rb = ratings[reviews[b].interaction];
        const auto ta = ra.timestamp.value_or(INT64_MIN);
        const auto tb = rb.timestamp.value_or(INT64_MIN);
        if (ta != tb) return ta > tb;
        return reviews[a].interaction > reviews[b].interaction;
      });
    };
    for (auto &l : user_reviews) order(l);
    for (auto &l : item_reviews) order(l);
  }
};

/// Runs the full preprocessing pipeline on parsed interactions: t-core
/// filtering, splitting, vocabulary construction from training text only,
/// and encoding of the training reviews.
inline Dataset build_dataset(const std::vector<Interaction> &parsed,
                             const PreprocessConfig &config) {
  Dataset ds;
  ds.config = config;
  ds.stats.interactions = parsed.size();
  const auto core = tcore_filter(parsed, config.t_core);
  ds.stats.after_tcore = core.size();

  std::unordered_map<std::string, std::size_t> uidx, iidx;
  for (const auto &rec : core) {
    auto [uit, unew] = uidx.emplace(rec.user_id, ds.users.size());
    if (unew) ds.users.push_back(rec.user_id);
    auto [iit, inew] = iidx.emplace(rec.item_id, ds.items.size());
    if (inew) ds.items.push_back(rec.item_id);
    ds.ratings.push_back({uit->second, iit->second, rec.rating, rec.timestamp});
  }
  ds.splits = split(core.size(), config.seed);

  std::vector<std::vector<Sentence>> sentences(core.size());
  std::map<std::string, std::size_t> counts;
  for (std::size_t id : ds.splits.train) {
    sentences[id] = split_sentences(core[id].review_text);
    for (const auto &s : sentences[id])
      for (const auto &tok : s.tokens) ++counts[tok];
  }
  ds.vocab = Vocabulary::build(counts, config.vocab_size);

  const auto &d = config.docs;
  for (std::size_t id : ds.splits.train) {
    if (sentences[id].empty()) continue;
    EncodedReview rev;
    rev.interaction = id;
    rev.text = core[id].review_text;
    for (std::size_t s = 0; s < sentences[id].size() && s < d.sentences; ++s) {
      const auto &sent = sentences[id][s];
      std::vector<std::uint32_t> idx;
      for (std::size_t w = 0; w < sent.tokens.size() && w < d.words; ++w)
        idx.push_back(ds.vocab.lookup(sent.tokens[w]));
      rev.sentences.push_back(std::move(idx));
      rev.spans.emplace_back(sent.begin, sent.end);
    }
    ds.reviews.push_back(std::move(rev));
  }
  ds.index_reviews();
  return ds;
}

// ---------------------------------------------------------------------------
// On-disk dataset directory: vocab.txt, manifest.json, documents.bin and
// reviews.jsonl (source text of training reviews, for explanations).

inline constexpr std::uint32_t kDocumentsVersion = 1;

inline nlohmann::json manifest_json(const Dataset &ds) {
  nlohmann::json j;
  j["format"] = "ahn-dataset";
  j["version"] = kDocumentsVersion;
  j["source"] = ds.source_path;
  j["config"] = {{"t_core", ds.config.t_core},
                 {"seed", ds.config.seed},
                 {"vocab_size", ds.config.vocab_size},
                 {"n", ds.config.docs.user_reviews},
                 {"m", ds.config.docs.item_reviews},
                 {"k", ds.config.docs.sentences},
                 {"l", ds.config.docs.words},
                 {"review_order", to_string(ds.config.docs.order)}};
  j["stats"] = {{"records", ds.stats.records},
                {"malformed", ds.stats.malformed},
                {"interactions", ds.stats.interactions},
                {"after_tcore", ds.stats.after_tcore},
                {"users", ds.users.size()},
                {"items", ds.items.size()},
                {"vocabulary", ds.vocab.size()},
                {"encoded_reviews", ds.reviews.size()}};
  j["users"] = ds.users;
  j["items"] = ds.items;
  j["splits"] = {{"seed", ds.splits.seed},
                 {"train", ds.splits.train},
                 {"val", ds.splits.val},
                 {"test", ds.splits.test}};
  j["vocab_sha256"] = ds.vocab.content_hash();
  return j;
}

inline void write_text_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_dataset(const Dataset &ds, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "vocab.txt", ds.vocab.serialize());
  write_text_file(dir / "manifest.json", manifest_json(ds).dump(2) + "\n");

  std::ofstream bin(dir / "documents.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + (dir / "documents.bin").string());
  binary::Writer w(bin);
  w.magic("AHNC");
  w.put<std::uint32_t>(kDocumentsVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.ratings.size()));
  for (const auto &r : ds.ratings) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.user));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(r.item));
    w.put<double>(r.rating);
    w.put<std::uint8_t>(r.timestamp ? 1 : 0);
    w.put<std::int64_t>(r.timestamp.value_or(0));
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.reviews.size()));
  for (const auto &rev : ds.reviews) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rev.interaction));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rev.sentences.size()));
    for (const auto &s : rev.sentences) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
      for (auto idx : s) w.put<std::uint32_t>(idx);
    }
  }
  if (!bin) throw IoError("write failed for documents.bin");

  std::string lines;
  for (const auto &rev : ds.reviews) {
    nlohmann::json j;
    j["interaction"] = rev.interaction;
    j["text"] = rev.text;
    j["spans"] = rev.spans;
    lines += j.dump() + "\n";
  }
  write_text_file(dir / "reviews.jsonl", lines);
}

inline Dataset load_dataset(const std::filesystem::path &dir) {
  Dataset ds;
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  if (manifest.value("format", "") != "ahn-dataset" ||
      manifest.value("version", 0u) != kDocumentsVersion)
    throw IoError("unsupported dataset manifest in " + dir.string());
  const auto &c = manifest.at("config");
  ds.config.t_core = c.at("t_core");
  ds.config.seed = c.at("seed");
  ds.config.vocab_size = c.at("vocab_size");
  ds.config.docs.user_reviews = c.at("n");
  ds.config.docs.item_reviews = c.at("m");
  ds.config.docs.sentences = c.at("k");
  ds.config.docs.words = c.at("l");
  ds.config.docs.order = parse_review_order(c.at("review_order"));
  const auto &st = manifest.at("stats");
  ds.stats.records = st.at("records");
  ds.stats.malformed = st.at("malformed");
  ds.stats.interactions = st.at("interactions");
  ds.stats.after_tcore = st.at("after_tcore");
  ds.source_path = manifest.value("source", "");
  ds.users = manifest.at("users").get<std::vector<std::string>>();
  ds.items = manifest.at("items").get<std::vector<std::string>>();
  const auto &sp = manifest.at("splits");
  ds.splits.seed = sp.at("seed");
  ds.splits.train = sp.at("train").get<std::vector<std::size_t>>();
  ds.splits.val = sp.at("val").get<std::vector<std::size_t>>();
  ds.splits.test = sp.at("test").get<std::vector<std::size_t>>();

  std::istringstream vocab_in(read_text_file(dir / "vocab.txt"));
  ds.vocab = Vocabulary::from_lines(vocab_in);
  if (ds.vocab.content_hash() != manifest.at("vocab_sha256").get<std::string>())
    throw IoError("vocab.txt does not match the manifest hash");

  std::ifstream bin(dir / "documents.bin", std::ios::binary);
  if (!bin) throw IoError("cannot read " + (dir / "documents.bin").string());
  binary::Reader r(bin);
  if (!r.magic("AHNC")) throw binary::FormatError("documents.bin: bad magic");
  if (r.get<std::uint32_t>() != kDocumentsVersion)
    throw binary::FormatError("documents.bin: unsupported version");
  const auto n_ratings = r.get<std::uint32_t>();
  ds.ratings.resize(n_ratings);
  for (auto &rt : ds.ratings) {
    rt.user = r.get<std::uint32_t>();
    rt.item = r.get<std::uint32_t>();
    rt.rating = r.get<double>();
    const bool has_ts = r.get<std::uint8_t>() != 0;
    const auto ts = r.get<std::int64_t>();
    if (has_ts) rt.timestamp = ts;
    if (rt.user >= ds.users.size() || rt.item >= ds.items.size())
      throw binary::FormatError("documents.bin: entity index out of range");
  }
  const auto n_reviews = r.get<std::uint32_t>();
  ds.reviews.resize(n_reviews);
  for (auto &rev : ds.reviews) {
    rev.interaction = r.get<std::uint32_t>();
    if (rev.interaction >= ds.ratings.size())
      throw binary::FormatError("documents.bin: interaction out of range");
    rev.sentences.resize(r.get<std::uint32_t>());
    for (auto &s : rev.sentences) {
      s.resize(r.get<std::uint32_t>());
      for (auto &idx : s) {
        idx = r.get<std::uint32_t>();
        if (idx >= ds.vocab.size())
          throw binary::FormatError("documents.bin: word index out of range");
      }
    }
  }

  const auto texts_path = dir / "reviews.jsonl";
  if (std::filesystem::exists(texts_path)) {
    std::istringstream lines(read_text_file(texts_path));
    std::string line;
    std::size_t i = 0;
    while (std::getline(lines, line) && i < ds.reviews.size()) {
      const auto j = nlohmann::json::parse(line);
      ds.reviews[i].text = j.at("text");
      ds.reviews[i].spans =
          j.at("spans").get<std::vector<std::pair<std::size_t, std::size_t>>>();
      ++i;
    }
  }
  ds.index_reviews();
  return ds;
}

} // namespace ahn
