#pragma once

#include "ahn/train.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <set>

namespace ahn {

// ---------------------------------------------------------------------------
// variants

struct VariantSpec {
  Variant tag = Variant::Full;
  std::vector<std::pair<std::string, std::string>> overrides; // key=value on top of the base
};

/// Base config with the spec's overrides applied and the variant set.
/// Overrides may not change the variant itself.
inline TrainConfig build_variant(const VariantSpec &spec, TrainConfig base) {
  for (const auto &[k, v] : spec.overrides) {
    if (k == "variant") throw ConfigError("variant overrides may not set 'variant'");
    apply_setting(base, k, v);
  }
  base.variant = spec.tag;
  base.validate();
  return base;
}

inline std::vector<Variant> parse_variant_list(const std::string &csv) {
  std::vector<Variant> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_variant(item));
  if (out.empty()) throw ConfigError("no variants given");
  return out;
}

// ---------------------------------------------------------------------------
// planted-asymmetry synthetic corpus
//
// Items carry one of T topics. Users hold a preference in [-1, 1] per topic
// and shop in a few topics of interest. A review of item v by user u names
// two words of v's topic and one sentiment word that quantizes u's
// preference for that topic, next to a filler sentence. The rating is
// 3 + 1.5 * preference + N(0, sigma^2), clipped to [1, 5]. Only the user's
// reviews about the target item's topic say anything about the rating.

inline constexpr const char *kSyntheticVersion = "planted-asymmetry/2";

struct SyntheticConfig {
  std::size_t topics = 8;
  double noise = 0.3;
  std::size_t pairs = 2000;
  std::size_t users = 100;
  std::size_t items = 80;
  std::size_t topic_words = 4;
  std::size_t user_topics = 3; // topics each user buys from; 0 = all
};

inline const std::vector<std::string> &sentiment_words() {
  static const std::vector<std::string> words{"awful", "bad", "okay", "good", "excellent"};
  return words;
}

inline std::size_t sentiment_level(double preference) {
  const double x = std::clamp((preference + 1) / 2, 0.0, 1.0);
  return std::min<std::size_t>(4, static_cast<std::size_t>(x * 5));
}

struct SyntheticCorpus {
  std::vector<Interaction> interactions;
  std::vector<std::size_t> item_topic;
  std::vector<std::vector<double>> preference; // users x topics
};

inline SyntheticCorpus planted_asymmetry(const SyntheticConfig &cfg, std::uint64_t seed) {
  if (cfg.topics == 0 || cfg.items < cfg.topics || cfg.topic_words == 0)
    throw ConfigError("synthetic corpus needs at least one item per topic");
  if (cfg.user_topics > cfg.topics) throw ConfigError("user_topics exceeds topics");
  Rng rng(seed);
  SyntheticCorpus out;
  // every topic gets at least one item
  for (std::size_t v = 0; v < cfg.items; ++v)
    out.item_topic.push_back(v < cfg.topics ? v : rng.below(cfg.topics));
  rng.shuffle(out.item_topic);
  std::vector<std::vector<std::size_t>> by_topic(cfg.topics);
  for (std::size_t v = 0; v < cfg.items; ++v) by_topic[out.item_topic[v]].push_back(v);

  out.preference.assign(cfg.users, std::vector<double>(cfg.topics));
  for (auto &row : out.preference)
    for (auto &p : row) p = rng.uniform(-1, 1);
  std::vector<std::vector<std::size_t>> interests(cfg.users);
  std::size_t reachable = 0;
  for (auto &topics : interests) {
    std::vector<std::size_t> all(cfg.topics);
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    topics.assign(all.begin(), all.begin() + (cfg.user_topics ? cfg.user_topics : cfg.topics));
    for (std::size_t t : topics) reachable += by_topic[t].size();
  }
  if (cfg.pairs > reachable)
    throw ConfigError("more pairs requested than user-item combinations");

  static const std::vector<std::string> fillers{"yesterday", "online", "again", "recently",
                                                "cheaply", "quickly"};
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::int64_t clock = 0;
  while (out.interactions.size() < cfg.pairs) {
    const std::size_t u = rng.below(cfg.users);
    const auto &pool = by_topic[interests[u][rng.below(interests[u].size())]];
    const std::size_t v = pool[rng.below(pool.size())];
    if (!seen.insert({u, v}).second) continue;
    const std::size_t topic = out.item_topic[v];
    const double p = out.preference[u][topic];
    Interaction x;
    x.user_id = "user" + std::to_string(u);
    x.item_id = "item" + std::to_string(v);
    x.rating = std::clamp(3 + 1.5 * p + cfg.noise * rng.normal(), 1.0, 5.0);
    auto topic_word = [&] {
      return "topic" + std::to_string(topic) + "w" + std::to_string(rng.below(cfg.topic_words));
    };
    const std::string about = "the " + topic_word() + " " + topic_word() + " was " +
                              sentiment_words()[sentiment_level(p)] + ".";
    const std::string filler = "i bought it " + fillers[rng.below(fillers.size())] + ".";
    x.review_text = rng.bernoulli(0.5) ? about + " " + filler : filler + " " + about;
    x.timestamp = clock++;
    out.interactions.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ablation suite

struct AblationRun {
  Variant variant = Variant::Full;
  std::uint64_t seed = 0;
  double val_mse = NAN;
  double test_mse = NAN;
  std::size_t best_epoch = 0;
  std::string error; // empty on success
};

struct AblationSummary {
  Variant variant = Variant::Full;
  std::size_t runs = 0, failures = 0;
  double val_mean = NAN, val_std = NAN, test_mean = NAN, test_std = NAN;
};

struct AblationTable {
  std::vector<AblationRun> runs;
  std::vector<AblationSummary> summary;
};

template <typename Real>
AblationRun run_one_variant(const Dataset &ds, const TrainConfig &base, Variant variant,
                            std::uint64_t seed) {
  AblationRun run;
  run.variant = variant;
  run.seed = seed;
  try {
    TrainConfig cfg = build_variant({variant, {}}, base);
    cfg.seed = seed;
    cfg.threads = 1;
    const auto res = train_loop<Real>(ds, cfg);
    run.best_epoch = res.best_epoch;
    run.val_mse = res.best_val_mse;
    run.test_mse = evaluate(res.best, ds, "test").mse;
  } catch (const std::exception &e) {
    run.error = e.what();
  }
  return run;
}

inline std::vector<AblationSummary> summarize(const std::vector<AblationRun> &runs,
                                              const std::vector<Variant> &variants) {
  auto mean_std = [](const std::vector<double> &xs) {
    if (xs.empty()) return std::pair<double, double>{NAN, NAN};
    double m = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0;
    for (double x : xs) v += (x - m) * (x - m);
    return std::pair<double, double>{m, std::sqrt(v / static_cast<double>(xs.size()))};
  };
  std::vector<AblationSummary> out;
  for (Variant v : variants) {
    AblationSummary s;
    s.variant = v;
    std::vector<double> val, test;
    for (const auto &r : runs) {
      if (r.variant != v) continue;
      ++s.runs;
      if (!r.error.empty()) {
        ++s.failures;
        continue;
      }
      val.push_back(r.val_mse);
      test.push_back(r.test_mse);
    }
    std::tie(s.val_mean, s.val_std) = mean_std(val);
    std::tie(s.test_mean, s.test_std) = mean_std(test);
    out.push_back(s);
  }
  return out;
}

/// Trains every variant under every seed with otherwise identical config.
/// A failing run is recorded in its row and the suite carries on. Runs are
/// single-threaded each and spread over `workers` threads; results do not
/// depend on the worker count.
template <typename Real>
AblationTable run_ablation_suite(const Dataset &ds, const std::vector<Variant> &variants,
                                 const std::vector<std::uint64_t> &seeds, const TrainConfig &base,
                                 std::size_t workers = 1) {
  std::vector<std::pair<Variant, std::uint64_t>> jobs;
  for (Variant v : variants)
    for (std::uint64_t s : seeds) jobs.emplace_back(v, s);
  AblationTable table;
  table.runs.resize(jobs.size());
  parallel_chunks(jobs.size(), workers, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i)
      table.runs[i] = run_one_variant<Real>(ds, base, jobs[i].first, jobs[i].second);
  });
  table.summary = summarize(table.runs, variants);
  return table;
}

namespace detail {
inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}
inline std::string csv_number(double x) { return std::isfinite(x) ? format_double(x) : ""; }
} // namespace detail

/// One row per variant: variant,runs,failures,val_mse_mean,val_mse_std,test_mse_mean,test_mse_std
inline std::string ablation_csv(const AblationTable &t) {
  std::string out = "variant,runs,failures,val_mse_mean,val_mse_std,test_mse_mean,test_mse_std\n";
  for (const auto &s : t.summary)
    out += to_string(s.variant) + "," + std::to_string(s.runs) + "," +
           std::to_string(s.failures) + "," + detail::csv_number(s.val_mean) + "," +
           detail::csv_number(s.val_std) + "," + detail::csv_number(s.test_mean) + "," +
           detail::csv_number(s.test_std) + "\n";
  return out;
}

/// One JSON object per run, then one per variant summary.
inline std::string ablation_ndjson(const AblationTable &t) {
  std::string out;
  for (const auto &r : t.runs) {
    nlohmann::json j;
    j["kind"] = "run";
    j["variant"] = to_string(r.variant);
    j["seed"] = r.seed;
    j["val_mse"] = detail::finite_or_null(r.val_mse);
    j["test_mse"] = detail::finite_or_null(r.test_mse);
    j["best_epoch"] = r.best_epoch;
    if (!r.error.empty()) j["error"] = r.error;
    out += j.dump() + "\n";
  }
  for (const auto &s : t.summary) {
    nlohmann::json j;
    j["kind"] = "summary";
    j["variant"] = to_string(s.variant);
    j["runs"] = s.runs;
    j["failures"] = s.failures;
    j["val_mse_mean"] = detail::finite_or_null(s.val_mean);
    j["val_mse_std"] = detail::finite_or_null(s.val_std);
    j["test_mse_mean"] = detail::finite_or_null(s.test_mean);
    j["test_mse_std"] = detail::finite_or_null(s.test_std);
    out += j.dump() + "\n";
  }
  return out;
}

} // namespace ahn
