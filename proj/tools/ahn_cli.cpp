#include "ahn/baselines.hpp"
#include "ahn/explain.hpp"
#include "ahn/gradcheck.hpp"
#include "ahn/model_check.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using namespace ahn;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::size_t env_thread_cap() {
  const char *v = std::getenv("AHN_THREADS");
  if (!v || !*v) return 0;
  try {
    return std::stoul(v);
  } catch (const std::exception &) {
    throw UsageError(std::string("AHN_THREADS must be a positive integer, got '") + v + "'");
  }
}

std::size_t worker_count(std::size_t requested) {
  std::size_t n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const auto cap = env_thread_cap()) n = std::min(n, cap);
  return std::max<std::size_t>(1, n);
}

// Config file first, then --seed, then --set in the order given.
TrainConfig resolve_config(const std::string &file, const std::optional<std::uint64_t> &seed,
                           const std::vector<std::string> &sets) {
  TrainConfig cfg;
  if (!file.empty()) cfg = parse_config(read_text_file(file));
  if (seed) cfg.seed = *seed;
  for (const auto &s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string input, out, order = "recent";
  std::size_t t_core = 5, n = 15, m = 15, k = 10, l = 20, vocab = 50000;
  std::uint64_t seed = 1;
};

int cmd_preprocess(const PreprocessArgs &a) {
  if (a.t_core < 1) throw UsageError("--t-core must be at least 1");
  if (!a.n || !a.m || !a.k || !a.l) throw UsageError("--n, --m, --k and --l must be positive");
  PreprocessConfig pc;
  pc.t_core = a.t_core;
  pc.seed = a.seed;
  pc.vocab_size = a.vocab;
  pc.docs = {a.n, a.m, a.k, a.l, parse_review_order(a.order)};
  ParseStats stats;
  const auto parsed = parse_reviews(a.input, &stats);
  Dataset ds = build_dataset(parsed, pc);
  ds.source_path = a.input;
  ds.stats.records = stats.records;
  ds.stats.malformed = stats.malformed;
  if (stats.malformed)
    std::cerr << "warning: skipped " << stats.malformed << " malformed record(s)\n";
  if (ds.ratings.empty())
    std::cerr << "warning: corpus is empty after " << a.t_core << "-core filtering\n";
  save_dataset(ds, a.out);
  std::cout << "users " << ds.users.size() << ", items " << ds.items.size() << ", interactions "
            << ds.ratings.size() << " (train " << ds.splits.train.size() << ", val "
            << ds.splits.val.size() << ", test " << ds.splits.test.size() << "), vocabulary "
            << ds.vocab.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data, config, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool deterministic = false;
  std::size_t threads = 0;
};

template <typename Real> int train_with(const Dataset &ds, TrainConfig cfg, const TrainArgs &a) {
  fs::create_directories(a.out);
  std::ofstream log(fs::path(a.out) / "metrics.jsonl", std::ios::binary);
  if (!log) throw IoError("cannot write metrics log in " + a.out);
  const bool zero_time = cfg.deterministic;
  TrainCallbacks<Real> cb;
  cb.on_epoch = [&](const EpochMetrics &m) {
    const auto line = metrics_line(m, zero_time);
    log << line << "\n";
    log.flush();
    std::cout << line << "\n";
  };
  const auto res = train_loop<Real>(ds, cfg, cb);
  Checkpoint<Real> ck{cfg, res.best.config(), ds.vocab.content_hash(), res.best};
  save_checkpoint(ck, fs::path(a.out) / "checkpoint.ahnw");
  write_text_file(fs::path(a.out) / "config.txt", serialize_config(cfg));
  std::cerr << "best epoch " << res.best_epoch << ", val mse "
            << nlohmann::json(res.best_val_mse).dump() << "\n";
  return 0;
}

int cmd_train(const TrainArgs &a) {
  TrainConfig cfg = resolve_config(a.config, a.seed, a.sets);
  cfg.deterministic = a.deterministic;
  cfg.threads = a.deterministic ? 1 : worker_count(a.threads);
  const Dataset ds = load_dataset(a.data);
  if (ds.splits.train.empty()) throw EmptyEvalError("dataset has no training pairs");
  return cfg.precision == Precision::F64 ? train_with<double>(ds, cfg, a)
                                         : train_with<float>(ds, cfg, a);
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint, data, split = "test";
};

template <typename Real> int eval_with(const EvalArgs &a) {
  const Dataset ds = load_dataset(a.data);
  const auto ck = load_checkpoint<Real>(a.checkpoint, ds.vocab.content_hash());
  const auto res = evaluate(ck.model, ds, a.split, worker_count(0));
  nlohmann::json j;
  j["split"] = a.split;
  j["pairs"] = res.predictions.size();
  j["mse"] = res.mse;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_eval(const EvalArgs &a) {
  return checkpoint_precision(a.checkpoint) == Precision::F64 ? eval_with<double>(a)
                                                              : eval_with<float>(a);
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  std::string data, config, out, variants = "full,a,b,c,d,e", seeds = "1";
  std::vector<std::string> sets;
  bool deterministic = false;
  std::size_t workers = 0;
};

std::vector<std::uint64_t> parse_seed_list(const std::string &csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception &) {
      throw UsageError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("no seeds given");
  return out;
}

int cmd_ablate(const AblateArgs &a) {
  const TrainConfig base = resolve_config(a.config, std::nullopt, a.sets);
  const auto variants = parse_variant_list(a.variants);
  const auto seeds = parse_seed_list(a.seeds);
  const Dataset ds = load_dataset(a.data);
  const std::size_t workers = a.deterministic ? 1 : worker_count(a.workers);
  const auto table = base.precision == Precision::F64
                         ? run_ablation_suite<double>(ds, variants, seeds, base, workers)
                         : run_ablation_suite<float>(ds, variants, seeds, base, workers);
  const std::string csv = ablation_csv(table);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text_file(fs::path(a.out) / "ablation.csv", csv);
    write_text_file(fs::path(a.out) / "ablation.ndjson", ablation_ndjson(table));
  }
  std::cout << csv;
  std::size_t failed = 0;
  for (const auto &r : table.runs)
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "run " << to_string(r.variant) << " seed " << r.seed << " failed: " << r.error
                << "\n";
    }
  return failed == table.runs.size() ? 1 : 0;
}

// ---------------------------------------------------------------------------

struct ExplainArgs {
  std::string checkpoint, data, user, item, out;
};

template <typename Real> int explain_with(const ExplainArgs &a) {
  const Dataset ds = load_dataset(a.data);
  const auto ck = load_checkpoint<Real>(a.checkpoint, ds.vocab.content_hash());
  const auto rec = explain(ck.model, ds, a.user, a.item);
  const std::string text = render_text(rec);
  if (!a.out.empty()) {
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    write_text_file(a.out, to_json(rec).dump(2) + "\n");
    write_text_file(a.out + ".txt", text);
  }
  std::cout << text;
  return 0;
}

int cmd_explain(const ExplainArgs &a) {
  return checkpoint_precision(a.checkpoint) == Precision::F64 ? explain_with<double>(a)
                                                              : explain_with<float>(a);
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string dims = "tiny", fault;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
};

int cmd_gradcheck(const GradcheckArgs &a) {
  if (a.dims != "tiny") throw UsageError("--dims supports only 'tiny'");
  debug::corrupted_backward() = a.fault;
  std::vector<std::string> failed_ops;
  std::printf("%-24s %s\n", "op", "max_rel_error");
  for (const auto &c : check_primitives(a.seed)) {
    const bool ok = c.max_error < a.tolerance;
    std::printf("%-24s %.3e%s\n", c.op.c_str(), c.max_error, ok ? "" : "  FAIL");
    if (!ok) failed_ops.push_back(c.op);
  }
  std::printf("\n%-24s %s\n", "parameter group", "max_rel_error");
  bool params_ok = true;
  for (const auto &[group, err] : group_errors(check_model_gradients(tiny_config(), a.seed))) {
    const bool ok = err < a.tolerance;
    params_ok = params_ok && ok;
    std::printf("%-24s %.3e%s\n", group.c_str(), err, ok ? "" : "  FAIL");
  }
  if (failed_ops.empty() && params_ok) {
    std::printf("\ngradcheck passed\n");
    return 0;
  }
  std::string names;
  for (const auto &op : failed_ops) names += (names.empty() ? "" : ", ") + op;
  if (names.empty()) names = "(composition only; every primitive passed)";
  std::printf("\ngradcheck FAILED: backward rule mismatch in op %s\n", names.c_str());
  return 1;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"ahn: review-based rating prediction with asymmetric hierarchical attention"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto *p = app.add_subcommand("preprocess", "parse, t-core filter, split and encode a corpus");
  p->add_option("--input", pre.input, "newline-delimited JSON reviews")->required();
  p->add_option("--out", pre.out, "dataset directory")->required();
  p->add_option("--t-core", pre.t_core, "minimum interactions per user and item");
  p->add_option("--seed", pre.seed, "split seed");
  p->add_option("--n", pre.n, "reviews per user document");
  p->add_option("--m", pre.m, "reviews per item document");
  p->add_option("--k", pre.k, "sentences per review");
  p->add_option("--l", pre.l, "words per sentence");
  p->add_option("--vocab-size", pre.vocab, "vocabulary cap");
  p->add_option("--order", pre.order, "review selection: recent or first");

  TrainArgs tr;
  auto *t = app.add_subcommand("train", "train a model and write checkpoint.ahnw + metrics.jsonl");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--config", tr.config, "key=value config file");
  t->add_option("--seed", tr.seed, "training seed");
  t->add_option("--set", tr.sets, "override a config key (key=value), repeatable");
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--threads", tr.threads, "worker threads (default: all cores, capped by AHN_THREADS)");
  t->add_flag("--deterministic", tr.deterministic, "single thread, zero wall-clock in logs");

  EvalArgs ev;
  auto *e = app.add_subcommand("eval", "MSE of a checkpoint on a split");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--data", ev.data, "dataset directory")->required();
  e->add_option("--split", ev.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));

  AblateArgs ab;
  auto *a = app.add_subcommand("ablate", "train every variant under every seed");
  a->add_option("--data", ab.data, "dataset directory")->required();
  a->add_option("--variants", ab.variants, "comma-separated variant tags");
  a->add_option("--seeds", ab.seeds, "comma-separated seeds");
  a->add_option("--config", ab.config, "key=value config file");
  a->add_option("--set", ab.sets, "override a config key (key=value), repeatable");
  a->add_option("--out", ab.out, "directory for ablation.csv and ablation.ndjson");
  a->add_option("--workers", ab.workers, "parallel runs (capped by AHN_THREADS)");
  a->add_flag("--deterministic", ab.deterministic, "one run at a time");

  ExplainArgs ex;
  auto *x = app.add_subcommand("explain", "attention weights for one user-item pair");
  x->add_option("--checkpoint", ex.checkpoint)->required();
  x->add_option("--data", ex.data, "dataset directory")->required();
  x->add_option("--user", ex.user)->required();
  x->add_option("--item", ex.item)->required();
  x->add_option("--out", ex.out, "JSON record path; the text rendering goes to <out>.txt");

  GradcheckArgs gc;
  auto *g = app.add_subcommand("gradcheck", "finite-difference check of every backward rule");
  g->add_option("--dims", gc.dims, "model size (tiny)");
  g->add_option("--seed", gc.seed);
  g->add_option("--tolerance", gc.tolerance);
  g->add_option("--inject-fault", gc.fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*p) return cmd_preprocess(pre);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*a) return cmd_ablate(ab);
    if (*x) return cmd_explain(ex);
    if (*g) return cmd_gradcheck(gc);
  } catch (const EmptyEvalError &err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::invalid_argument &err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
