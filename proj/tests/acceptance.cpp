// Acceptance run: one PASS/FAIL line per criterion.
// usage: acceptance <path-to-ahn-cli> [criterion numbers...]

#include "ahn/baselines.hpp"
#include "ahn/model_check.hpp"
#include "reference_model.hpp"
#include "test_fixtures.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <set>

using namespace ahn;
namespace fs = std::filesystem;
using T = Tensor<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Model<double> scrambled(const ModelConfig &c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Model<double> m(c);
  scramble(m.params(), rng, scale);
  return m;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::string worst_name;
  std::size_t tensors = 0;
  for (const auto &c : check_model_gradients(tiny_config(), 1)) {
    ++tensors;
    if (!(c.max_error <= worst)) {
      worst = c.max_error;
      worst_name = c.name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 60,
          std::to_string(tensors) + " tensors, max rel err " + fmt("%.2e", worst) + " (" +
              worst_name + "), " + fmt("%.1f", secs) + " s"};
}

// every padded word slot, sentence slot and review slot rewritten
void scribble_padding(DocumentSet &d, Rng &rng, std::size_t vocab) {
  for (std::size_t r = 0; r < d.max_reviews; ++r)
    for (std::size_t s = 0; s < d.max_sentences; ++s) {
      const bool real_sentence = r < d.num_reviews() && s < d.sentence_counts[r];
      const std::size_t from = real_sentence ? d.word_counts[r * d.max_sentences + s] : 0;
      for (std::size_t w = from; w < d.max_words; ++w)
        d.word(r, s, w) = static_cast<std::uint32_t>(rng.below(vocab));
    }
}

Outcome attention_normalization() {
  const auto c = tiny_config();
  const auto shape = tiny_documents_config();
  Rng rng(2024);
  double worst_sum = 0;
  std::size_t nonzero_masked = 0, changed = 0, distributions = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = scrambled(c, 5000 + trial);
    auto ud = random_documents(rng, shape, true, rng.below(shape.user_reviews + 1), c.vocab_size);
    auto vd = random_documents(rng, shape, false, rng.below(shape.item_reviews + 1), c.vocab_size);
    const std::size_t urow = rng.below(c.user_rows), vrow = rng.below(c.item_rows);
    const auto tr = m.infer(ud, vd, urow, vrow);

    auto check_sentences = [&](const T &w, const DocumentSet &d) {
      for (std::size_t r = 0; r < d.max_reviews; ++r) {
        const std::size_t ns = r < d.num_reviews() ? d.sentence_counts[r] : 0;
        double s = 0;
        for (std::size_t i = 0; i < ns; ++i) s += w(r, i);
        if (ns) {
          worst_sum = std::max(worst_sum, std::abs(s - 1));
          ++distributions;
        }
        for (std::size_t i = ns; i < d.max_sentences; ++i) nonzero_masked += w(r, i) != 0.0;
      }
    };
    auto check_reviews = [&](const T &w, const DocumentSet &d) {
      double s = 0;
      for (std::size_t r = 0; r < d.num_reviews(); ++r) s += w[r];
      if (d.num_reviews()) {
        worst_sum = std::max(worst_sum, std::abs(s - 1));
        ++distributions;
      }
      for (std::size_t r = d.num_reviews(); r < d.max_reviews; ++r) nonzero_masked += w[r] != 0.0;
    };
    check_sentences(tr.user_sentence_weights, ud);
    check_sentences(tr.item_sentence_weights, vd);
    check_reviews(tr.user_review_weights, ud);
    check_reviews(tr.item_review_weights, vd);

    scribble_padding(ud, rng, c.vocab_size);
    scribble_padding(vd, rng, c.vocab_size);
    changed += m.infer(ud, vd, urow, vrow).prediction != tr.prediction;
  }
  return {worst_sum <= 1e-5 && nonzero_masked == 0 && changed == 0,
          std::to_string(distributions) + " distributions, max |sum-1| " +
              fmt("%.1e", worst_sum) + ", " + std::to_string(nonzero_masked) +
              " nonzero masked, " + std::to_string(changed) + "/1000 predictions moved by padding"};
}

/// False when relu clips every review-level affinity entry of the pair to
/// zero, which pins the user weights to uniform whatever the item.
bool affinity_alive(const Model<double> &m, const ForwardTrace<double> &tr, std::size_t n,
                    std::size_t q) {
  if (!n || !q) return false;
  Tape<double> t;
  const Var u = slice_rows(t, t.constant(tr.user_reviews), 0, n);
  const Var v = slice_rows(t, t.constant(tr.item_reviews), 0, q);
  const Var w = slice_cols(t, t.constant(tr.item_review_weights), 0, q);
  const Var g = coattention_affinity(t, u, v, std::optional<Var>(w), std::vector<bool>(q, true),
                                     t.constant(m.params()["review_affinity"]),
                                     [](Var x) { return x; });
  const auto &vals = t.value(g).values();
  return *std::max_element(vals.begin(), vals.end()) > 0;
}

Outcome asymmetry_contract() {
  const auto c = tiny_config();
  const auto shape = tiny_documents_config();
  Rng rng(77);
  std::size_t item_moved = 0, user_static = 0, pairs = 0, skipped = 0;
  for (std::size_t i = 0; pairs < 200; ++i) {
    const auto m = scrambled(c, 9000 + i);
    const auto ud = random_documents(rng, shape, true, 2, c.vocab_size);
    const auto ud2 = random_documents(rng, shape, true, 1 + rng.below(2), c.vocab_size);
    const auto vd = random_documents(rng, shape, false, 1 + rng.below(2), c.vocab_size);
    const auto vd2 = random_documents(rng, shape, false, 1 + rng.below(2), c.vocab_size);
    const std::size_t urow = rng.below(c.user_rows), vrow = rng.below(c.item_rows);
    const auto base = m.infer(ud, vd, urow, vrow);
    if (!affinity_alive(m, base, ud.num_reviews(), vd.num_reviews())) {
      ++skipped;
      continue;
    }
    ++pairs;
    const auto other_user = m.infer(ud2, vd, rng.below(c.user_rows), vrow);
    item_moved += !(base.item_sentence_weights == other_user.item_sentence_weights &&
                    base.item_review_weights == other_user.item_review_weights);
    const auto other_item = m.infer(ud, vd2, urow, rng.below(c.item_rows));
    user_static += base.user_sentence_weights == other_item.user_sentence_weights &&
                   base.user_review_weights == other_item.user_review_weights;
  }
  return {item_moved == 0 && user_static == 0,
          std::to_string(pairs) + " pairs (" + std::to_string(skipped) +
              " draws skipped with all-zero affinity): item weights moved by user change " +
              std::to_string(item_moved) + " times, user weights unmoved by item change " +
              std::to_string(user_static) + " times"};
}

Outcome fm_oracle() {
  Rng rng(4);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 1 + rng.below(32), kappa = 1 + rng.below(8);
    T x = T::matrix(1, dim), w = T::matrix(dim, 1), z = T::matrix(dim, kappa);
    for (auto *t : {&x, &w, &z})
      for (auto &v : t->values()) v = rng.uniform(-1, 1);
    const double b = rng.uniform(-3, 3);
    Tape<double> tape;
    const double fast = tape.value(fm_predict(tape, tape.constant(x), tape.constant(T::scalar(b)),
                                              tape.constant(w), tape.constant(z)))
                            .item();
    double brute = b;
    for (std::size_t i = 0; i < dim; ++i) brute += w[i] * x[i];
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = i + 1; j < dim; ++j) {
        double dot = 0;
        for (std::size_t f = 0; f < kappa; ++f) dot += z(i, f) * z(j, f);
        brute += dot * x[i] * x[j];
      }
    worst = std::max(worst, std::abs(fast - brute));
  }
  return {worst <= 1e-10, "1000 inputs, max |fast-brute| " + fmt("%.2e", worst)};
}

Outcome straight_line_oracle() {
  const auto c = tiny_config();
  const auto shape = tiny_documents_config();
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto m = scrambled(c, seed);
    Rng rng(seed + 500);
    const auto ud = random_documents(rng, shape, true, rng.below(3), c.vocab_size);
    const auto vd = random_documents(rng, shape, false, rng.below(3), c.vocab_size);
    const std::size_t urow = rng.below(c.user_rows), vrow = rng.below(c.item_rows);
    const auto tr = m.infer(ud, vd, urow, vrow);
    worst = std::max(worst, reference::trace_difference(
                                tr, reference::forward(m, ud, vd, urow, vrow)));
  }
  return {worst <= 1e-10, "50 pairs, max deviation " + fmt("%.2e", worst)};
}

struct StopTraining {};

Outcome overfit_sanity() {
  SyntheticConfig sc;
  sc.pairs = 80; // 64 land in train
  sc.users = 10;
  sc.items = 10;
  sc.user_topics = 0;
  PreprocessConfig pc;
  pc.t_core = 1;
  pc.seed = 6;
  pc.docs = {4, 4, 2, 6, ReviewOrder::Recent};
  const auto ds = build_dataset(planted_asymmetry(sc, 6).interactions, pc);
  TrainConfig cfg;
  cfg.word_dim = 32;
  cfg.hidden = 16;
  cfg.attention_dim = 8;
  cfg.id_dim = 64;
  cfg.fm_factors = 32;
  cfg.affinity_dim = 16;
  cfg.dropout = 0;
  cfg.batch_size = 1;
  cfg.learning_rate = 2e-4;
  cfg.max_epochs = 300;
  cfg.seed = 6;
  cfg.deterministic = true;
  const auto t0 = std::chrono::steady_clock::now();
  double last = NAN;
  std::size_t reached = 0;
  TrainCallbacks<float> cb;
  cb.on_epoch = [&](const EpochMetrics &m) {
    last = m.train_mse;
    if (m.train_mse < 0.05) {
      reached = m.epoch;
      throw StopTraining{};
    }
  };
  const auto model = Model<float>::initialize(
      cfg.model_config(ds.vocab.size(), ds.user_rows(), ds.item_rows()), cfg.seed,
      ds.mean_train_rating());
  const auto train = make_examples(ds, ds.splits.train);
  try {
    train_examples(model, train, {}, cfg, cb);
  } catch (const StopTraining &) {
  }
  const double secs = seconds_since(t0);
  return {reached > 0 && secs < 300 && train.size() == 64,
          std::to_string(train.size()) + " pairs, " +
              (reached ? "train mse " + fmt("%.4f", last) + " at epoch " + std::to_string(reached)
                       : "train mse " + fmt("%.4f", last) + " after 300 epochs") +
              ", " + fmt("%.1f", secs) + " s"};
}

/// Benchmark settings for the planted-asymmetry comparison.
Dataset benchmark_dataset(std::uint64_t seed) {
  SyntheticConfig sc; // 2000 pairs, 8 topics, sigma 0.3
  sc.user_topics = 4;
  sc.topic_words = 2;
  PreprocessConfig pc;
  pc.t_core = 1;
  pc.seed = seed;
  pc.docs = {16, 6, 2, 5, ReviewOrder::Recent};
  return build_dataset(planted_asymmetry(sc, seed).interactions, pc);
}

TrainConfig benchmark_config() {
  TrainConfig tc;
  tc.word_dim = 16;
  tc.hidden = 8;
  tc.attention_dim = 8;
  tc.id_dim = 4;
  tc.fm_factors = 4;
  tc.affinity_dim = 16;
  tc.learning_rate = 1e-2;
  tc.max_epochs = 40;
  tc.dropout = 0.3;
  tc.batch_size = 32;
  tc.deterministic = true;
  return tc;
}

Outcome planted_asymmetry_benchmark() {
  std::size_t wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = benchmark_dataset(seed);
    const auto full = run_one_variant<float>(ds, benchmark_config(), Variant::Full, seed);
    const auto sym = run_one_variant<float>(ds, benchmark_config(), Variant::SymmetricUser, seed);
    if (!full.error.empty() || !sym.error.empty())
      return {false, "seed " + std::to_string(seed) + " failed: " + full.error + sym.error};
    wins += full.test_mse <= sym.test_mse;
    detail += (detail.empty() ? "" : ", ") + fmt("%.3f", full.test_mse) + "/" +
              fmt("%.3f", sym.test_mse);
    std::fprintf(stderr, "  benchmark seed %d: full %.4f, symmetric %.4f\n",
                 static_cast<int>(seed), full.test_mse, sym.test_mse);
  }
  return {wins >= 4, "full <= symmetric in " + std::to_string(wins) +
                         "/5 seeds (test mse full/sym: " + detail + ")"};
}

using Pairs = std::multiset<std::pair<std::string, std::string>>;

Pairs pairs_of(const std::vector<Interaction> &xs) {
  Pairs p;
  for (const auto &x : xs) p.emplace(x.user_id, x.item_id);
  return p;
}

Pairs brute_force_core(const std::vector<Interaction> &xs, std::size_t t) {
  std::uint32_t best = 0;
  int best_count = -1;
  for (std::uint32_t mask = 0; mask < (1u << xs.size()); ++mask) {
    std::map<std::string, std::size_t> du, di;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (mask >> i & 1) {
        ++du[xs[i].user_id];
        ++di[xs[i].item_id];
      }
    bool ok = true;
    for (const auto &[k, d] : du) ok = ok && d >= t;
    for (const auto &[k, d] : di) ok = ok && d >= t;
    if (ok && __builtin_popcount(mask) > best_count) {
      best = mask;
      best_count = __builtin_popcount(mask);
    }
  }
  std::vector<Interaction> kept;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (best >> i & 1) kept.push_back(xs[i]);
  return pairs_of(kept);
}

Outcome pipeline_fidelity() {
  const auto xs = ahn::testing::twelve_interaction_fixture();
  std::size_t core_mismatch = 0;
  for (std::size_t t = 1; t <= 5; ++t) core_mismatch += pairs_of(tcore_filter(xs, t)) != brute_force_core(xs, t);

  bool splits_ok = true;
  for (std::size_t n : {9ul, 12ul, 100ul, 2000ul})
    for (std::uint64_t seed : {1ul, 2ul}) {
      const auto a = split(n, seed), b = split(n, seed);
      const std::size_t tr = (n * 8 + 5) / 10, va = (n + 5) / 10;
      std::set<std::size_t> all(a.train.begin(), a.train.end());
      all.insert(a.val.begin(), a.val.end());
      all.insert(a.test.begin(), a.test.end());
      splits_ok = splits_ok && a.train == b.train && a.val == b.val && a.test == b.test &&
                  a.train.size() == tr && a.val.size() == va &&
                  a.test.size() == n - tr - va && all.size() == n;
    }

  std::size_t leaks = 0, checked = 0;
  for (std::size_t t : {1ul, 2ul}) {
    PreprocessConfig pc;
    pc.t_core = t;
    pc.seed = 3;
    pc.docs = {4, 4, 3, 8, ReviewOrder::Recent};
    const auto ds = build_dataset(xs, pc);
    std::set<std::size_t> train(ds.splits.train.begin(), ds.splits.train.end());
    for (std::size_t id = 0; id < ds.ratings.size(); ++id) {
      const auto &r = ds.ratings[id];
      const auto [ud, vd] = ds.documents_for_pair(r.user, r.item);
      for (const auto *d : {&ud, &vd})
        for (std::size_t src : d->source) {
          ++checked;
          leaks += !train.count(src) || src == id;
        }
    }
  }
  return {core_mismatch == 0 && splits_ok && leaks == 0 && checked > 0,
          "t-core mismatches " + std::to_string(core_mismatch) + " (t=1..5), splits " +
              (splits_ok ? "80/10/10 and deterministic" : "WRONG") + ", " +
              std::to_string(leaks) + " leaks in " + std::to_string(checked) +
              " document reviews"};
}

int shell(const std::string &cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome reproducibility(const std::string &cli) {
  const auto root = ahn::testing::temp_dir("acceptance_repro");
  SyntheticConfig sc;
  sc.pairs = 300;
  sc.users = 25;
  sc.items = 20;
  sc.user_topics = 0;
  ahn::testing::write_jsonl(root / "reviews.jsonl", planted_asymmetry(sc, 9).interactions);
  auto q = [](const fs::path &p) { return "'" + p.string() + "'"; };
  if (shell("'" + cli + "' preprocess --input " + q(root / "reviews.jsonl") + " --out " +
            q(root / "ds") + " --t-core 1 --n 4 --m 4 --k 2 --l 6 > /dev/null") != 0)
    return {false, "preprocess failed"};
  const std::string train = "'" + cli + "' train --data " + q(root / "ds") +
                            " --seed 11 --deterministic --set max_epochs=3 --set word_dim=12"
                            " --set hidden=6 --set attention_dim=6 --set id_dim=6"
                            " --set fm_factors=3 --set affinity_dim=8 --set batch_size=16"
                            " --set learning_rate=0.003 > /dev/null --out ";
  for (const char *run : {"run1", "run2"})
    if (shell(train + q(root / run)) != 0) return {false, std::string(run) + " failed"};
  const bool logs = read_text_file(root / "run1" / "metrics.jsonl") ==
                    read_text_file(root / "run2" / "metrics.jsonl");
  const bool ckpt = read_text_file(root / "run1" / "checkpoint.ahnw") ==
                    read_text_file(root / "run2" / "checkpoint.ahnw");
  return {logs && ckpt, std::string("metric logs ") + (logs ? "identical" : "DIFFER") +
                            ", checkpoints " + (ckpt ? "identical" : "DIFFER") + " (" +
                            std::to_string(fs::file_size(root / "run1" / "checkpoint.ahnw")) +
                            " bytes)"};
}

} // namespace

int main(int argc, char **argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <ahn-cli> [criteria...]\n");
    return 2;
  }
  const std::string cli = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"attention normalization and masking", attention_normalization},
      {"asymmetry contract", asymmetry_contract},
      {"FM oracle equivalence", fm_oracle},
      {"straight-line oracle equivalence", straight_line_oracle},
      {"overfit sanity", overfit_sanity},
      {"planted-asymmetry benchmark", planted_asymmetry_benchmark},
      {"pipeline fidelity", pipeline_fidelity},
      {"reproducibility", [&] { return reproducibility(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
