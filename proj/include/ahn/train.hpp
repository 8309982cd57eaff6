#pragma once

#include "ahn/binary_io.hpp"
#include "ahn/dataset.hpp"
#include "ahn/model_check.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace ahn {

struct EmptyEvalError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Precision { F32, F64 };

inline std::string to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

struct TrainConfig {
  double learning_rate = 2e-4;
  std::size_t max_epochs = 10;
  std::size_t batch_size = 32;
  double dropout = 0.5;
  std::uint64_t seed = 1;
  Precision precision = Precision::F32;
  double grad_clip = 0; // global-norm cap; 0 disables
  std::size_t threads = 1;
  bool deterministic = false;

  // Model shape.
  std::size_t word_dim = 300;
  std::size_t hidden = 150;
  std::size_t attention_dim = 150;
  std::size_t id_dim = 300;
  std::size_t fm_factors = 10;
  AffinityMap affinity = AffinityMap::Identity;
  std::size_t affinity_dim = 300;
  Variant variant = Variant::Full;

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must be in [0, 1)");
    if (grad_clip < 0) throw ConfigError("grad_clip must be >= 0");
    if (word_dim < 1 || hidden < 1 || attention_dim < 1 || id_dim < 1 || fm_factors < 1 ||
        affinity_dim < 1)
      throw ConfigError("model dimensions must be >= 1");
  }

  ModelConfig model_config(std::size_t vocab_size, std::size_t user_rows,
                           std::size_t item_rows) const {
    ModelConfig c;
    c.vocab_size = vocab_size;
    c.user_rows = user_rows;
    c.item_rows = item_rows;
    c.word_dim = word_dim;
    c.hidden = hidden;
    c.attention_dim = attention_dim;
    c.id_dim = id_dim;
    c.fm_factors = fm_factors;
    c.affinity = affinity;
    c.affinity_dim = affinity_dim;
    c.dropout = dropout;
    c.variant = variant;
    return c;
  }
};

// ---------------------------------------------------------------------------
// key=value configuration

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

inline std::map<std::string, std::string> config_entries(const TrainConfig &c) {
  return {{"learning_rate", format_double(c.learning_rate)},
          {"max_epochs", std::to_string(c.max_epochs)},
          {"batch_size", std::to_string(c.batch_size)},
          {"dropout", format_double(c.dropout)},
          {"seed", std::to_string(c.seed)},
          {"precision", to_string(c.precision)},
          {"grad_clip", format_double(c.grad_clip)},
          {"word_dim", std::to_string(c.word_dim)},
          {"hidden", std::to_string(c.hidden)},
          {"attention_dim", std::to_string(c.attention_dim)},
          {"id_dim", std::to_string(c.id_dim)},
          {"fm_factors", std::to_string(c.fm_factors)},
          {"affinity", c.affinity == AffinityMap::Identity ? "identity" : "mlp"},
          {"affinity_dim", std::to_string(c.affinity_dim)},
          {"variant", to_string(c.variant)}};
}

namespace detail {
inline std::size_t parse_count(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    n = std::stoull(v, &pos);
  } catch (const std::exception &) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}
inline double parse_real(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception &) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}
} // namespace detail

/// Applies one key=value setting; unknown keys are an error.
inline void apply_setting(TrainConfig &c, const std::string &key, const std::string &value) {
  using detail::parse_count, detail::parse_real;
  if (key == "learning_rate") c.learning_rate = parse_real(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_count(key, value);
  else if (key == "batch_size") c.batch_size = parse_count(key, value);
  else if (key == "dropout") c.dropout = parse_real(key, value);
  else if (key == "seed") c.seed = parse_count(key, value);
  else if (key == "precision") {
    if (value == "f32") c.precision = Precision::F32;
    else if (value == "f64") c.precision = Precision::F64;
    else throw ConfigError("precision: expected f32 or f64, got '" + value + "'");
  } else if (key == "grad_clip") c.grad_clip = parse_real(key, value);
  else if (key == "word_dim") c.word_dim = parse_count(key, value);
  else if (key == "hidden") c.hidden = parse_count(key, value);
  else if (key == "attention_dim") c.attention_dim = parse_count(key, value);
  else if (key == "id_dim") c.id_dim = parse_count(key, value);
  else if (key == "fm_factors") c.fm_factors = parse_count(key, value);
  else if (key == "affinity") {
    if (value == "identity") c.affinity = AffinityMap::Identity;
    else if (value == "mlp") c.affinity = AffinityMap::Mlp;
    else throw ConfigError("affinity: expected identity or mlp, got '" + value + "'");
  } else if (key == "affinity_dim") c.affinity_dim = parse_count(key, value);
  else if (key == "variant") c.variant = parse_variant(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Parses flat key=value text. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string &text) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::string serialize_config(const TrainConfig &c) {
  std::string out;
  for (const auto &[k, v] : config_entries(c)) out += k + "=" + v + "\n";
  return out;
}

inline TrainConfig parse_config(const std::string &text, TrainConfig base = {}) {
  for (const auto &[k, v] : parse_config_text(text)) apply_setting(base, k, v);
  return base;
}

// ---------------------------------------------------------------------------
// loss and optimizer

inline double mse(const std::vector<double> &predictions, const std::vector<double> &targets) {
  if (predictions.empty()) throw EmptyEvalError("mse over an empty set");
  if (predictions.size() != targets.size())
    throw DimensionError("mse: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(targets.size()) + " targets");
  double s = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = targets[i] - predictions[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

template <typename Real> struct AdamState {
  ParamStore<Real> first, second;
  std::uint64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const ParamStore<Real> &params)
      : first(params.zeros_like()), second(params.zeros_like()) {}
};

struct NonFiniteGradient : DivergenceError {
  using DivergenceError::DivergenceError;
};

/// One bias-corrected Adam update in place. With `clip` > 0 the gradient is
/// first rescaled so its global L2 norm is at most `clip`.
template <typename Real>
void adam_step(ParamStore<Real> &params, const ParamStore<Real> &grads, AdamState<Real> &state,
               double lr, double clip = 0) {
  if (grads.size() != params.size() || state.first.size() != params.size())
    throw DimensionError("adam_step: parameter, gradient and state counts differ");
  double norm2 = 0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require_same_shape(params.at(i), grads.at(i), ("adam_step " + params.name(i)).c_str());
    for (Real g : grads.at(i).values()) {
      if (!std::isfinite(static_cast<double>(g)))
        throw NonFiniteGradient("non-finite gradient in parameter " + params.name(i));
      norm2 += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  const double factor =
      clip > 0 && std::sqrt(norm2) > clip ? clip / std::sqrt(norm2) : 1.0;
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &p = params.at(i).values();
    const auto &g = grads.at(i).values();
    auto &m = state.first.at(i).values();
    auto &v = state.second.at(i).values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = static_cast<double>(g[j]) * factor;
      const double mj = b1 * static_cast<double>(m[j]) + (1 - b1) * gj;
      const double vj = b2 * static_cast<double>(v[j]) + (1 - b2) * gj * gj;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = lr * (mj / c1) / (std::sqrt(vj / c2) + state.epsilon);
      p[j] = static_cast<Real>(static_cast<double>(p[j]) - update);
    }
  }
}

// ---------------------------------------------------------------------------
// examples from a dataset

/// Documents, ID rows and target for every interaction in `ids`. Without
/// `with_text` the document sets stay empty and no review is read.
inline std::vector<PairExample> make_examples(const Dataset &ds, const std::vector<std::size_t> &ids,
                                              bool with_text = true) {
  std::vector<PairExample> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    const auto &r = ds.ratings.at(id);
    PairExample ex;
    if (with_text) std::tie(ex.user_docs, ex.item_docs) = ds.documents_for_pair(r.user, r.item);
    ex.user_row = ds.user_row(r.user);
    ex.item_row = ds.item_row(r.item);
    ex.rating = r.rating;
    out.push_back(std::move(ex));
  }
  return out;
}

/// Runs `work(begin, end, worker)` over [0, n) split into contiguous chunks,
/// one per worker. Single-threaded when `threads` <= 1.
inline void parallel_chunks(std::size_t n, std::size_t threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)> &work) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    work(0, n, 0);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t b = n * w / threads, e = n * (w + 1) / threads;
    pool.emplace_back([&, b, e, w] {
      try {
        work(b, e, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

struct Prediction {
  std::size_t interaction;
  double predicted;
  double rating;
};

struct EvalResult {
  double mse = 0;
  std::vector<Prediction> predictions;
};

/// Dropout-free predictions over `examples`.
template <typename Real>
std::vector<double> predict_all(const Model<Real> &model, const std::vector<PairExample> &examples,
                                std::size_t threads = 1) {
  std::vector<double> out(examples.size());
  parallel_chunks(examples.size(), threads, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      const auto &ex = examples[i];
      out[i] = static_cast<double>(
          model.predict(ex.user_docs, ex.item_docs, ex.user_row, ex.item_row));
    }
  });
  return out;
}

template <typename Real>
EvalResult evaluate(const Model<Real> &model, const Dataset &ds, const std::string &split,
                    std::size_t threads = 1) {
  const auto ids = ds.split_ids(split);
  if (ids.empty()) throw EmptyEvalError("split '" + split + "' is empty");
  const auto examples = make_examples(ds, ids, model.config().uses_text());
  const auto preds = predict_all(model, examples, threads);
  EvalResult res;
  std::vector<double> targets;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    res.predictions.push_back({ids[i], preds[i], examples[i].rating});
    targets.push_back(examples[i].rating);
  }
  res.mse = mse(preds, targets);
  return res;
}

// ---------------------------------------------------------------------------
// training loop

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_mse = 0;
  double val_mse = 0;
  double seconds = 0;
};

/// One JSON object per line; `seconds` is written as 0 when `zero_time`.
inline std::string metrics_line(const EpochMetrics &m, bool zero_time) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  j["train_mse"] = m.train_mse;
  j["val_mse"] = m.val_mse;
  j["seconds"] = zero_time ? 0.0 : m.seconds;
  return j.dump();
}

template <typename Real> struct TrainResult {
  Model<Real> best;
  std::size_t best_epoch = 0;
  double best_val_mse = 0;
  std::vector<EpochMetrics> metrics;
};

template <typename Real> struct TrainCallbacks {
  std::function<void(const EpochMetrics &)> on_epoch;
  std::function<void(const Model<Real> &, const EpochMetrics &)> on_improvement;
};

namespace detail {
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e5ffULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
} // namespace detail

/// Trains on `train` examples, selecting the epoch with the lowest MSE on
/// `val`. Without validation examples the last epoch is kept.
template <typename Real>
TrainResult<Real> train_examples(Model<Real> model, const std::vector<PairExample> &train,
                                 const std::vector<PairExample> &val, const TrainConfig &cfg,
                                 const TrainCallbacks<Real> &callbacks = {}) {
  cfg.validate();
  if (train.empty()) throw EmptyEvalError("no training pairs");
  const std::size_t threads = cfg.deterministic ? 1 : std::max<std::size_t>(1, cfg.threads);
  AdamState<Real> adam(model.params());
  Rng shuffler(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult<Real> result;
  result.best = model;
  bool have_best = false;
  std::vector<ParamStore<Real>> worker_grads(threads, model.params().zeros_like());
  auto grads = model.params().zeros_like();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffler.shuffle(order);
    double loss_sum = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t bn = std::min(cfg.batch_size, order.size() - b0);
      std::vector<double> losses(bn);
      for (auto &g : worker_grads) g.zero();
      parallel_chunks(bn, threads, [&](std::size_t b, std::size_t e, std::size_t w) {
        for (std::size_t i = b; i < e; ++i) {
          const std::size_t idx = order[b0 + i];
          const auto &ex = train[idx];
          Rng drop(detail::mix_seed(cfg.seed, (epoch << 32) ^ idx));
          Tape<Real> t;
          const auto trace = model.forward(t, ex.user_docs, ex.item_docs, ex.user_row,
                                           ex.item_row, &worker_grads[w], {true, &drop});
          const Var err = squared_error(t, trace.prediction_var, static_cast<Real>(ex.rating));
          losses[i] = static_cast<double>(t.value(err).item());
          t.backward(scale(t, err, Real(1) / static_cast<Real>(bn)));
        }
      });
      grads.zero();
      for (const auto &g : worker_grads)
        for (std::size_t i = 0; i < grads.size(); ++i) grads.at(i) += g.at(i);
      for (double l : losses) {
        if (!std::isfinite(l))
          throw DivergenceError("training loss became non-finite in epoch " +
                                std::to_string(epoch));
        loss_sum += l;
      }
      adam_step(model.params(), grads, adam, cfg.learning_rate, cfg.grad_clip);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_mse = loss_sum / static_cast<double>(train.size());
    if (!val.empty()) {
      std::vector<double> targets;
      for (const auto &ex : val) targets.push_back(ex.rating);
      m.val_mse = mse(predict_all(model, val, threads), targets);
      if (!std::isfinite(m.val_mse))
        throw DivergenceError("validation MSE became non-finite in epoch " +
                              std::to_string(epoch));
    }
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.push_back(m);
    if (callbacks.on_epoch) callbacks.on_epoch(m);
    if (!have_best || val.empty() || m.val_mse < result.best_val_mse) {
      have_best = true;
      result.best = model;
      result.best_epoch = epoch;
      result.best_val_mse = m.val_mse;
      if (callbacks.on_improvement) callbacks.on_improvement(result.best, m);
    }
  }
  return result;
}

template <typename Real>
TrainResult<Real> train_loop(const Dataset &ds, const TrainConfig &cfg,
                             const TrainCallbacks<Real> &callbacks = {}) {
  cfg.validate();
  const auto model = Model<Real>::initialize(
      cfg.model_config(ds.vocab.size(), ds.user_rows(), ds.item_rows()), cfg.seed,
      ds.mean_train_rating());
  const bool text = model.config().uses_text();
  return train_examples(model, make_examples(ds, ds.splits.train, text),
                        make_examples(ds, ds.splits.val, text), cfg, callbacks);
}

// ---------------------------------------------------------------------------
// checkpoints

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Real> struct Checkpoint {
  TrainConfig train;
  ModelConfig model_config;
  std::string vocab_hash; // hex SHA-256
  Model<Real> model;
};

namespace detail {

inline std::string hex_to_bytes(const std::string &hex) {
  if (hex.size() != 64) throw CheckpointError("vocabulary hash must be 64 hex digits");
  std::string out(32, '\0');
  for (std::size_t i = 0; i < 32; ++i)
    out[i] = static_cast<char>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
  return out;
}

inline std::string bytes_to_hex(const std::string &bytes) {
  static const char *digits = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    out += digits[c >> 4];
    out += digits[c & 15];
  }
  return out;
}

inline std::string checkpoint_echo(const TrainConfig &t, const ModelConfig &m) {
  std::string s = serialize_config(t);
  s += "vocab_size=" + std::to_string(m.vocab_size) + "\n";
  s += "user_rows=" + std::to_string(m.user_rows) + "\n";
  s += "item_rows=" + std::to_string(m.item_rows) + "\n";
  return s;
}

} // namespace detail

template <typename Real> void save_checkpoint(const Checkpoint<Real> &ck, const std::filesystem::path &path) {
  std::ostringstream buf;
  binary::Writer w(buf);
  w.magic("AHNW");
  w.put<std::uint32_t>(kCheckpointVersion);
  w.string(detail::checkpoint_echo(ck.train, ck.model_config));
  const std::string hash = detail::hex_to_bytes(ck.vocab_hash);
  w.bytes(hash.data(), hash.size());
  const auto &p = ck.model.params();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    w.string(p.name(i));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(sizeof(Real)));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.at(i).shape().size()));
    for (auto d : p.at(i).shape()) w.put<std::uint64_t>(d);
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    for (Real v : p.at(i).values()) w.put<Real>(v);
  write_text_file(path, buf.str());
}

/// Precision recorded in a checkpoint header.
inline Precision checkpoint_precision(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    binary::Reader r(in);
    if (!r.magic("AHNW")) throw CheckpointError("not a checkpoint (bad magic)");
    if (r.get<std::uint32_t>() != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version");
    r.string();
    std::string hash(32, '\0');
    r.bytes(hash.data(), 32);
    if (r.get<std::uint32_t>() == 0) throw CheckpointError("checkpoint has no tensors");
    r.string();
    const auto width = r.get<std::uint8_t>();
    if (width == 4) return Precision::F32;
    if (width == 8) return Precision::F64;
    throw CheckpointError("unknown tensor dtype");
  } catch (const binary::FormatError &e) {
    throw CheckpointError(std::string("incompatible checkpoint: ") + e.what());
  }
}

/// Loads a checkpoint. When `expected_vocab_hash` is non-empty it must match
/// the stored hash.
template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path &path,
                                 const std::string &expected_vocab_hash = "") {
  const std::string bytes = read_text_file(path);
  std::istringstream in(bytes);
  binary::Reader r(in);
  Checkpoint<Real> ck;
  try {
    if (!r.magic("AHNW")) throw CheckpointError("incompatible checkpoint: bad magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
      throw CheckpointError("incompatible checkpoint: version " + std::to_string(version) +
                            ", expected " + std::to_string(kCheckpointVersion));
    const std::string echo = r.string(1u << 20);
    std::map<std::string, std::string> sizes;
    TrainConfig t;
    for (const auto &[k, v] : parse_config_text(echo)) {
      if (k == "vocab_size" || k == "user_rows" || k == "item_rows") sizes[k] = v;
      else apply_setting(t, k, v);
    }
    ck.train = t;
    ck.model_config =
        t.model_config(detail::parse_count("vocab_size", sizes["vocab_size"]),
                       detail::parse_count("user_rows", sizes["user_rows"]),
                       detail::parse_count("item_rows", sizes["item_rows"]));
    std::string hash(32, '\0');
    r.bytes(hash.data(), 32);
    ck.vocab_hash = detail::bytes_to_hex(hash);
    if (!expected_vocab_hash.empty() && expected_vocab_hash != ck.vocab_hash)
      throw CheckpointError("checkpoint vocabulary hash " + ck.vocab_hash +
                            " does not match dataset vocabulary " + expected_vocab_hash);

    ck.model = Model<Real>(ck.model_config);
    auto &p = ck.model.params();
    const auto count = r.get<std::uint32_t>();
    if (count != p.size())
      throw CheckpointError("incompatible checkpoint: " + std::to_string(count) +
                            " tensors, model expects " + std::to_string(p.size()));
    for (std::size_t i = 0; i < count; ++i) {
      const std::string name = r.string(4096);
      if (name != p.name(i))
        throw CheckpointError("incompatible checkpoint: tensor " + std::to_string(i) + " is '" +
                              name + "', expected '" + p.name(i) + "'");
      if (r.get<std::uint8_t>() != sizeof(Real))
        throw CheckpointError("incompatible checkpoint: dtype of " + name +
                              " differs from the requested precision");
      Shape shape(r.get<std::uint32_t>());
      for (auto &d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
      if (shape != p.at(i).shape())
        throw CheckpointError("incompatible checkpoint: " + name + " has shape " +
                              shape_str(shape) + ", expected " + shape_str(p.at(i).shape()));
    }
    for (std::size_t i = 0; i < count; ++i)
      for (auto &v : p.at(i).values()) v = r.get<Real>();
    if (!r.at_end()) throw CheckpointError("incompatible checkpoint: trailing bytes");
  } catch (const binary::FormatError &e) {
    throw CheckpointError(std::string("incompatible checkpoint: ") + e.what());
  } catch (const ConfigError &e) {
    throw CheckpointError(std::string("incompatible checkpoint: ") + e.what());
  }
  return ck;
}

} // namespace ahn
