#include "ahn/corpus.hpp"
#include "ahn/dataset.hpp"
#include "ahn/text.hpp"

#include "test_fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

namespace {

using ahn::Interaction;

Interaction rec(std::string u, std::string i, double r = 4, std::string text = "ok.") {
  return Interaction{std::move(u), std::move(i), r, std::move(text), std::nullopt};
}

using Pairs = std::multiset<std::pair<std::string, std::string>>;

Pairs pairs_of(const std::vector<Interaction> &xs) {
  Pairs p;
  for (const auto &x : xs) p.emplace(x.user_id, x.item_id);
  return p;
}

/// Largest subset (by count) in which every present user and item has at
/// least t interactions, by enumerating all 2^n subsets.
Pairs brute_force_core(const std::vector<Interaction> &xs, std::size_t t) {
  const std::size_t n = xs.size();
  std::uint32_t best = 0;
  int best_count = -1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::map<std::string, std::size_t> du, di;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) {
        ++du[xs[i].user_id];
        ++di[xs[i].item_id];
      }
    bool ok = true;
    for (auto &[k, d] : du) ok = ok && d >= t;
    for (auto &[k, d] : di) ok = ok && d >= t;
    const int count = __builtin_popcount(mask);
    if (ok && count > best_count) {
      best = mask;
      best_count = count;
    }
  }
  std::vector<Interaction> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (best >> i & 1) kept.push_back(xs[i]);
  return pairs_of(kept);
}

TEST(ParseReviews, ParsesAndSkipsMalformed) {
  std::istringstream in(
      R"({"reviewerID":"A","asin":"B","overall":5.0,"reviewText":"Great taste.","unixReviewTime":7})"
      "\n"
      R"({"reviewerID":"C","asin":"B","overall":3.0})"
      "\n"
      R"({"reviewerID":"D","asin":"E","overall":2.0,"reviewText":""})"
      "\n");
  ahn::ParseStats stats;
  const auto out = ahn::parse_reviews(in, &stats);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].user_id, "A");
  EXPECT_EQ(out[0].item_id, "B");
  EXPECT_EQ(out[0].rating, 5.0);
  EXPECT_EQ(out[0].review_text, "Great taste.");
  EXPECT_EQ(out[0].timestamp, 7);
  EXPECT_EQ(out[1].review_text, "");
  EXPECT_EQ(stats.records, 3u);
  EXPECT_EQ(stats.malformed, 1u);
}

TEST(ParseReviews, FixtureFileInOrder) {
  const auto path = ahn::testing::write_three_line_fixture();
  const auto out = ahn::parse_reviews(path.string());
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].user_id, "U1");
  EXPECT_EQ(out[1].user_id, "U2");
  EXPECT_EQ(out[2].user_id, "U3");
}

TEST(ParseReviews, Errors) {
  EXPECT_THROW(ahn::parse_reviews(std::string("/nonexistent/reviews.json")), ahn::IoError);
  std::istringstream bad("not json\n{\"x\":1}\n"
                         R"({"reviewerID":"A","asin":"B","overall":5.0,"reviewText":"x"})"
                         "\n");
  EXPECT_THROW(ahn::parse_reviews(bad), ahn::CorpusFormatError);
}

TEST(TCore, TOneIsIdentity) {
  const std::vector<Interaction> xs{rec("u1", "i1"), rec("u2", "i2"), rec("u1", "i2")};
  EXPECT_EQ(pairs_of(ahn::tcore_filter(xs, 1)), pairs_of(xs));
}

TEST(TCore, CascadingRemovalReachesEmpty) {
  const std::vector<Interaction> xs{rec("u1", "i1"), rec("u1", "i2"), rec("u2", "i1")};
  EXPECT_TRUE(ahn::tcore_filter(xs, 2).empty());
}

TEST(TCore, RejectsZero) {
  EXPECT_THROW(ahn::tcore_filter({}, 0), std::invalid_argument);
}

TEST(TCore, MatchesBruteForceOnFixture) {
  const auto xs = ahn::testing::twelve_interaction_fixture();
  ASSERT_EQ(xs.size(), 12u);
  for (std::size_t t : {1u, 2u, 3u}) {
    const auto core = ahn::tcore_filter(xs, t);
    EXPECT_EQ(pairs_of(core), brute_force_core(xs, t)) << "t=" << t;
  }
  EXPECT_FALSE(ahn::tcore_filter(xs, 2).empty());
}

TEST(TCore, OrderInvariantAndIdempotent) {
  auto xs = ahn::testing::twelve_interaction_fixture();
  ahn::Rng rng(5);
  const auto reference = pairs_of(ahn::tcore_filter(xs, 2));
  for (int trial = 0; trial < 20; ++trial) {
    rng.shuffle(xs);
    const auto core = ahn::tcore_filter(xs, 2);
    EXPECT_EQ(pairs_of(core), reference);
    EXPECT_EQ(pairs_of(ahn::tcore_filter(core, 2)), pairs_of(core));
  }
}

TEST(Split, ProportionsAndDeterminism) {
  const auto m = ahn::split(10, 3);
  EXPECT_EQ(m.train.size(), 8u);
  EXPECT_EQ(m.val.size(), 1u);
  EXPECT_EQ(m.test.size(), 1u);
  const auto again = ahn::split(10, 3);
  EXPECT_EQ(m.train, again.train);
  EXPECT_EQ(m.val, again.val);
  EXPECT_EQ(m.test, again.test);

  const auto big = ahn::split(100, 3);
  EXPECT_EQ(big.train.size(), 80u);
  EXPECT_EQ(big.val.size(), 10u);
  EXPECT_EQ(big.test.size(), 10u);
  std::set<std::size_t> all(big.train.begin(), big.train.end());
  all.insert(big.val.begin(), big.val.end());
  all.insert(big.test.begin(), big.test.end());
  EXPECT_EQ(all.size(), 100u);
}

TEST(Split, DifferentSeedsGiveDifferentPartitions) {
  const auto a = ahn::split(100, 1);
  const auto b = ahn::split(100, 2);
  EXPECT_NE(a.train, b.train);
}

TEST(Tokenize, SentencesAndTokens) {
  using S = std::vector<std::vector<std::string>>;
  EXPECT_EQ(ahn::tokenize("Great price! No after taste."),
            (S{{"great", "price"}, {"no", "after", "taste"}}));
  EXPECT_TRUE(ahn::tokenize("").empty());
  const auto one = ahn::tokenize("I take these in the morning and after every workout.");
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].size(), 10u);
  EXPECT_EQ(ahn::tokenize("Rated 4.5 stars... really?!  Yes"),
            (S{{"rated", "4", "5", "stars"}, {"really"}, {"yes"}}));
}

TEST(Tokenize, SpansPointAtSourceText) {
  const std::string text = "Easy to swallow.  No after taste.";
  const auto s = ahn::split_sentences(text);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(text.substr(s[0].begin, s[0].end - s[0].begin), "Easy to swallow.");
  EXPECT_EQ(text.substr(s[1].begin, s[1].end - s[1].begin), "No after taste.");
}

TEST(Vocabulary, ReservedIndicesAndFrequencyOrder) {
  const auto v = ahn::Vocabulary::build({{"b", 3}, {"a", 3}, {"c", 5}, {"d", 1}}, 3);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(1), "<unk>");
  EXPECT_EQ(v.lookup("c"), 2u);
  EXPECT_EQ(v.lookup("a"), 3u);
  EXPECT_EQ(v.lookup("b"), 4u);
  EXPECT_EQ(v.lookup("d"), ahn::Vocabulary::kUnknown);
  std::istringstream in(v.serialize());
  EXPECT_EQ(ahn::Vocabulary::from_lines(in), v);
}

ahn::PreprocessConfig small_config(std::size_t n = 3) {
  ahn::PreprocessConfig c;
  c.t_core = 1;
  c.seed = 4;
  c.docs.user_reviews = n;
  c.docs.item_reviews = n;
  c.docs.sentences = 3;
  c.docs.words = 4;
  return c;
}

TEST(Documents, SingleReviewIsPadded) {
  // One user, one training review, another review in the item's history.
  std::vector<Interaction> xs;
  for (int i = 0; i < 10; ++i)
    xs.push_back(rec("u" + std::to_string(i), "item", 4, "Easy to swallow. No after taste."));
  auto ds = ahn::build_dataset(xs, small_config());
  const std::size_t u = ds.ratings[ds.splits.train[0]].user;
  const auto doc = ds.user_documents(u, std::nullopt);
  EXPECT_EQ(doc.review_mask(), (std::vector<bool>{true, false, false}));
  EXPECT_EQ(doc.sentence_mask(0), (std::vector<bool>{true, true, false}));
  EXPECT_EQ(doc.word_mask(0, 0), (std::vector<bool>{true, true, true, false}));
  EXPECT_EQ(doc.word(0, 0, 3), ahn::Vocabulary::kPad);
  EXPECT_EQ(ds.vocab.token(doc.word(0, 1, 2)), "taste");
}

TEST(Documents, LeakageGuardExcludesTargetReview) {
  auto ds = ahn::build_dataset(ahn::testing::twelve_interaction_fixture(), small_config(4));
  for (std::size_t id : ds.splits.train) {
    const auto &r = ds.ratings[id];
    const auto [ud, vd] = ds.documents_for_pair(r.user, r.item);
    EXPECT_EQ(std::count(ud.source.begin(), ud.source.end(), id), 0);
    EXPECT_EQ(std::count(vd.source.begin(), vd.source.end(), id), 0);
  }
}

TEST(Documents, NoHeldOutReviewAppearsAndMasksArePrefixTrue) {
  auto xs = ahn::testing::twelve_interaction_fixture();
  auto ds = ahn::build_dataset(xs, small_config(4));
  std::set<std::size_t> held(ds.splits.val.begin(), ds.splits.val.end());
  held.insert(ds.splits.test.begin(), ds.splits.test.end());
  auto prefix_true = [](const std::vector<bool> &m) {
    return std::is_partitioned(m.begin(), m.end(), [](bool b) { return b; });
  };
  for (std::size_t u = 0; u < ds.users.size(); ++u)
    for (std::size_t v = 0; v < ds.items.size(); ++v) {
      for (const auto &doc : {ds.user_documents(u, v), ds.item_documents(v, u)}) {
        for (std::size_t src : doc.source) EXPECT_EQ(held.count(src), 0u);
        EXPECT_TRUE(prefix_true(doc.review_mask()));
        for (std::size_t r = 0; r < doc.max_reviews; ++r) {
          EXPECT_TRUE(prefix_true(doc.sentence_mask(r)));
          for (std::size_t s = 0; s < doc.max_sentences; ++s)
            EXPECT_TRUE(prefix_true(doc.word_mask(r, s)));
        }
        for (auto w : doc.words) EXPECT_LT(w, ds.vocab.size());
      }
    }
}

TEST(Documents, UnknownEntityIsColdStart) {
  auto ds = ahn::build_dataset(ahn::testing::twelve_interaction_fixture(), small_config());
  const auto doc = ds.user_documents(std::nullopt, std::nullopt);
  EXPECT_TRUE(doc.cold());
  for (auto w : doc.words) EXPECT_EQ(w, ahn::Vocabulary::kPad);
  EXPECT_EQ(ds.user_row(ds.users.size() + 5), ds.users.size());
}

TEST(Documents, RecentReviewsSelectedFirst) {
  std::vector<Interaction> xs;
  for (int i = 0; i < 10; ++i) {
    auto r = rec("u", "i" + std::to_string(i), 3, "Review number " + std::to_string(i) + ".");
    r.timestamp = (i * 7) % 10;
    xs.push_back(r);
  }
  auto cfg = small_config(2);
  auto ds = ahn::build_dataset(xs, cfg);
  const auto doc = ds.user_documents(0, std::nullopt);
  ASSERT_EQ(doc.num_reviews(), 2u);
  std::vector<std::int64_t> train_ts;
  for (std::size_t id : ds.splits.train) train_ts.push_back(*ds.ratings[id].timestamp);
  std::sort(train_ts.rbegin(), train_ts.rend());
  EXPECT_EQ(*ds.ratings[doc.source[0]].timestamp, train_ts[0]);
  EXPECT_EQ(*ds.ratings[doc.source[1]].timestamp, train_ts[1]);
}

TEST(Dataset, VocabularyDeterministicAndDirectoryRoundTrip) {
  const auto xs = ahn::testing::twelve_interaction_fixture();
  const auto a = ahn::build_dataset(xs, small_config());
  const auto b = ahn::build_dataset(xs, small_config());
  EXPECT_EQ(a.vocab, b.vocab);

  const auto dir = ahn::testing::temp_dir("dataset_roundtrip");
  ahn::save_dataset(a, dir);
  const auto loaded = ahn::load_dataset(dir);
  EXPECT_EQ(loaded.vocab, a.vocab);
  EXPECT_EQ(loaded.users, a.users);
  EXPECT_EQ(loaded.splits.train, a.splits.train);
  for (std::size_t u = 0; u < a.users.size(); ++u)
    for (std::size_t v = 0; v < a.items.size(); ++v) {
      EXPECT_EQ(loaded.user_documents(u, v).words, a.user_documents(u, v).words);
      EXPECT_EQ(loaded.item_documents(v, u).words, a.item_documents(v, u).words);
    }
  const auto dir2 = ahn::testing::temp_dir("dataset_roundtrip2");
  ahn::save_dataset(loaded, dir2);
  for (const char *file : {"documents.bin", "manifest.json", "vocab.txt", "reviews.jsonl"})
    EXPECT_EQ(ahn::read_text_file(dir / file), ahn::read_text_file(dir2 / file)) << file;
}

TEST(Dataset, RejectsBadMagic) {
  const auto dir = ahn::testing::temp_dir("dataset_badmagic");
  ahn::save_dataset(ahn::build_dataset(ahn::testing::twelve_interaction_fixture(),
                                       small_config()),
                    dir);
  ahn::write_text_file(dir / "documents.bin", "NOPE\x01\x00\x00\x00");
  EXPECT_THROW(ahn::load_dataset(dir), ahn::binary::FormatError);
}

} // namespace
