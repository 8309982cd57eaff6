#pragma once

#include "ahn/dataset.hpp"
#include "ahn/lstm.hpp"
#include "ahn/params.hpp"
#include "ahn/rng.hpp"
#include "ahn/tape.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ahn {

/// Architecture variants: the full model and the ablations that remove one
/// component each, plus a rating-only FM over ID embeddings.
enum class Variant {
  Full,
  NoItemAttention,   // item attention replaced by average pooling
  SymmetricUser,     // user side uses item-style gated attention
  NoAdaptedAffinity, // affinity rows not scaled by item attention
  DotProductHead,    // <u, v> instead of the factorization machine
  NoGating,          // attention scores without the sigmoid gate
  FmOnly,            // FM over ID embeddings alone; never reads text
};

inline const std::vector<std::pair<Variant, std::string>> &variant_names() {
  static const std::vector<std::pair<Variant, std::string>> names{
      {Variant::Full, "full"},
      {Variant::NoItemAttention, "no_item_attention"},
      {Variant::SymmetricUser, "symmetric_user"},
      {Variant::NoAdaptedAffinity, "no_adapted_affinity"},
      {Variant::DotProductHead, "dot_product_head"},
      {Variant::NoGating, "no_gating"},
      {Variant::FmOnly, "fm_only"}};
  return names;
}

inline std::string to_string(Variant v) {
  for (const auto &[k, name] : variant_names())
    if (k == v) return name;
  return "unknown";
}

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Accepts the canonical names and the ablation letters a-e.
inline Variant parse_variant(const std::string &s) {
  for (const auto &[k, name] : variant_names())
    if (name == s) return k;
  if (s == "a") return Variant::NoItemAttention;
  if (s == "b") return Variant::SymmetricUser;
  if (s == "c") return Variant::NoAdaptedAffinity;
  if (s == "d") return Variant::DotProductHead;
  if (s == "e") return Variant::NoGating;
  throw ConfigError("unknown variant '" + s + "'");
}

enum class AffinityMap { Identity, Mlp };

struct ModelConfig {
  std::size_t vocab_size = 2;
  std::size_t user_rows = 1;
  std::size_t item_rows = 1;
  std::size_t word_dim = 300;      // d
  std::size_t hidden = 150;        // per LSTM direction; sentence embeddings are 2h
  std::size_t attention_dim = 150; // rows of the attention projections
  std::size_t id_dim = 300;
  std::size_t fm_factors = 10;
  AffinityMap affinity = AffinityMap::Identity;
  std::size_t affinity_dim = 300; // output of the affinity MLP when enabled
  double dropout = 0.5;
  Variant variant = Variant::Full;

  std::size_t text_dim() const { return 2 * hidden; }
  std::size_t affinity_width() const {
    return affinity == AffinityMap::Identity ? text_dim() : affinity_dim;
  }
  bool uses_text() const { return variant != Variant::FmOnly; }
  std::size_t side_dim() const { return (uses_text() ? text_dim() : 0) + id_dim; }
  std::size_t fm_input_dim() const { return 2 * side_dim(); }
};

struct ForwardOptions {
  bool training = false;
  Rng *dropout_rng = nullptr;
};

/// Values recorded during one forward pass. Weight tensors cover every slot,
/// padded ones included, so masked entries are visibly zero.
template <typename Real> struct ForwardTrace {
  Tensor<Real> item_sentence_weights; // m x k      (alpha^v per item review)
  Tensor<Real> user_sentence_weights; // n x k      (alpha_i^u per user review)
  Tensor<Real> item_review_weights;   // 1 x m      (beta^v)
  Tensor<Real> user_review_weights;   // 1 x n      (beta^u)
  Tensor<Real> item_sentences;        // (m k) x 2h, context-aware sentence embeddings
  Tensor<Real> user_sentences;        // (n k) x 2h
  Tensor<Real> item_reviews;          // m x 2h
  Tensor<Real> user_reviews;          // n x 2h
  Tensor<Real> user_text, item_text;  // 1 x 2h
  Tensor<Real> user_id, item_id;      // 1 x id_dim
  Tensor<Real> user, item;            // 1 x side_dim
  Real prediction = 0;
  Var prediction_var;
};

namespace detail {

template <typename Real> struct Bound {
  const ParamStore<Real> *params = nullptr;
  std::vector<Var> vars;
  Var operator()(const std::string &name) const { return vars[params->index(name)]; }
};

template <typename Real>
Bound<Real> bind(Tape<Real> &t, const ParamStore<Real> &params, ParamStore<Real> *grads) {
  Bound<Real> b{&params, {}};
  for (std::size_t i = 0; i < params.size(); ++i)
    b.vars.push_back(grads ? t.parameter(params.at(i), grads->at(i)) : t.view(params.at(i)));
  return b;
}

template <typename Real> LstmVars<Real> lstm_vars(const Bound<Real> &p, const std::string &prefix) {
  return {p(prefix + ".input"), p(prefix + ".recurrent"), p(prefix + ".bias")};
}

template <typename Real> Var zeros(Tape<Real> &t, std::size_t r, std::size_t c) {
  return t.constant(Tensor<Real>::matrix(r, c));
}

/// Uniform weights over the true entries of `mask`, as a 1 x |mask| row.
template <typename Real> Tensor<Real> uniform_weights(const std::vector<bool> &mask) {
  std::size_t count = 0;
  for (bool m : mask) count += m;
  if (count == 0) throw EmptySupportError("uniform weights over an empty support");
  Tensor<Real> w = Tensor<Real>::matrix(1, mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    w[i] = mask[i] ? Real(1) / Real(count) : Real(0);
  return w;
}

template <typename Real> void write_row(Tensor<Real> &dst, std::size_t row, const Tensor<Real> &src) {
  std::copy(src.values().begin(), src.values().end(), dst.data() + row * dst.cols());
}

} // namespace detail

/// Attention handles for one gated scorer: score vector v (a x 1), tanh
/// projection W and sigmoid gate W-hat, both stored as (input x a).
template <typename Real> struct AttentionVars {
  Var score;
  Var proj;
  Var gate;
};

/// Unnormalized scores v^T (tanh(W x_i) * sigmoid(W-hat x_i)) for every row
/// x_i of `x`, as a p x 1 column. Without gating the sigmoid factor is
/// dropped.
template <typename Real>
Var attention_scores(Tape<Real> &t, Var x, const AttentionVars<Real> &a, bool gating = true) {
  Var h = tanh(t, matmul(t, x, a.proj));
  if (gating) h = mul(t, h, sigmoid(t, matmul(t, x, a.gate)));
  return matmul(t, h, a.score);
}

/// Softmax of the gated scores over the unmasked rows of `x`. Returns a
/// 1 x p row of weights.
template <typename Real>
Var gated_attention(Tape<Real> &t, Var x, const std::vector<bool> &mask,
                    const AttentionVars<Real> &a, bool gating = true) {
  return softmax_masked(t, transpose(t, attention_scores(t, x, a, gating)), mask);
}

/// Weighted sum of the rows of `vectors` (p x c) under `weights` (1 x p).
template <typename Real> Var aggregate(Tape<Real> &t, Var vectors, Var weights) {
  return matmul(t, weights, vectors);
}

/// One-sided co-attention. Scores each user unit (row of `user`) by its
/// maximum affinity phi(f(U) M f(V)^T) against the item units (rows of
/// `item`), optionally scaling each column by the item's own attention
/// weight, then normalizes over the unmasked user units. Masked item units
/// never take part in the maximum. Returns the 1 x p max-affinity row; the
/// caller applies the softmax, since one affinity matrix can serve several
/// user reviews at once.
template <typename Real>
Var coattention_affinity(Tape<Real> &t, Var user, Var item,
                         std::optional<Var> item_weights,
                         const std::vector<bool> &item_mask, Var affinity,
                         const std::function<Var(Var)> &map) {
  const Var fu = map(user);
  const Var fv = map(item);
  const auto &M = t.value(affinity);
  if (M.rows() != M.cols() || t.value(fu).cols() != M.rows() ||
      t.value(fv).cols() != M.cols())
    throw DimensionError("coattention: affinity matrix " + shape_str(M.shape()) +
                         " vs mapped units " + shape_str(t.value(fu).shape()) + " and " +
                         shape_str(t.value(fv).shape()));
  Var g = relu(t, matmul(t, matmul(t, fu, affinity), transpose(t, fv)));
  if (item_weights) g = mul_rowwise(t, g, *item_weights);
  return max_over_axis(t, g, 1, item_mask).values;
}

/// Co-attention weights for a single group of user units.
template <typename Real>
Var coattention_weights(Tape<Real> &t, Var user, Var item, std::optional<Var> item_weights,
                        const std::vector<bool> &user_mask, const std::vector<bool> &item_mask,
                        Var affinity, const std::function<Var(Var)> &map) {
  return softmax_masked(
      t, coattention_affinity(t, user, item, item_weights, item_mask, affinity, map),
      user_mask);
}

/// b + <w, x> + sum_{i<j} <z_i, z_j> x_i x_j via the O(D k) identity
/// 1/2 sum_f [(sum_i z_if x_i)^2 - sum_i z_if^2 x_i^2]. x is 1 x D.
template <typename Real> Var fm_predict(Tape<Real> &t, Var x, Var bias, Var linear, Var factors) {
  const auto &X = t.value(x);
  const auto &Z = t.value(factors);
  if (X.rows() != 1 || X.cols() != Z.rows() || t.value(linear).rows() != X.cols())
    throw DimensionError("fm_predict: input " + shape_str(X.shape()) + " vs factors " +
                         shape_str(Z.shape()) + " and linear " +
                         shape_str(t.value(linear).shape()));
  const Var lin = matmul(t, x, linear);
  const Var xz = matmul(t, x, factors);
  const Var x2z2 = matmul(t, mul(t, x, x), mul(t, factors, factors));
  const Var pair = scale(t, sum(t, sub(t, mul(t, xz, xz), x2z2)), Real(0.5));
  return add(t, add(t, bias, lin), pair);
}

/// <u, v> for equal-width rows.
template <typename Real> Var dot_product_head(Tape<Real> &t, Var u, Var v) {
  require_same_shape(t.value(u), t.value(v), "dot_product_head");
  return sum(t, mul(t, u, v));
}

/// (prediction - target)^2 as a 1 x 1 node.
template <typename Real> Var squared_error(Tape<Real> &t, Var prediction, Real target) {
  const Var d = sub(t, prediction, t.constant(Tensor<Real>::scalar(target)));
  return mul(t, d, d);
}

/// The asymmetric hierarchical attention network.
template <typename Real> class Model {
public:
  Model() = default;
  explicit Model(ModelConfig config) : config_(std::move(config)) { declare(); }

  /// Randomly initialized parameters. `mean_rating` seeds the FM bias.
  static Model initialize(const ModelConfig &config, std::uint64_t seed, double mean_rating) {
    Model m(config);
    m.randomize(seed, mean_rating);
    return m;
  }

  const ModelConfig &config() const noexcept { return config_; }
  ParamStore<Real> &params() noexcept { return params_; }
  const ParamStore<Real> &params() const noexcept { return params_; }

  /// Runs the forward pass on `tape`. When `grads` is given, parameter
  /// gradients accumulate into it on backward.
  ForwardTrace<Real> forward(Tape<Real> &t, const DocumentSet &user_docs,
                             const DocumentSet &item_docs, std::size_t user_row,
                             std::size_t item_row, ParamStore<Real> *grads = nullptr,
                             const ForwardOptions &opts = {}) const {
    const auto p = detail::bind(t, params_, grads);
    ForwardTrace<Real> trace;

    std::optional<Var> user_text, item_text;
    if (config_.uses_text()) {
      const Side item = encode(t, p, item_docs);
      const Side user = encode(t, p, user_docs);
      const ItemSummary is = summarize_item(t, p, item, item_docs, trace);
      item_text = is.text;
      user_text = summarize_user(t, p, user, user_docs, item, item_docs, is, trace);
      trace.item_sentences = padded_sentences(t, item, item_docs);
      trace.user_sentences = padded_sentences(t, user, user_docs);
      trace.user_text = t.value(*user_text);
      trace.item_text = t.value(*item_text);
    }

    const Var uid = id_embed(t, p, "user", user_row);
    const Var vid = id_embed(t, p, "item", item_row);
    trace.user_id = t.value(uid);
    trace.item_id = t.value(vid);

    const Var u = user_text ? concat_cols(t, {*user_text, uid}) : uid;
    const Var v = item_text ? concat_cols(t, {*item_text, vid}) : vid;
    trace.user = t.value(u);
    trace.item = t.value(v);

    Var rating;
    if (config_.variant == Variant::DotProductHead) {
      rating = dot_product_head(t, u, v);
    } else {
      Var x = concat_cols(t, {u, v});
      if (opts.training && config_.dropout > 0 && opts.dropout_rng) x = dropout(t, x, *opts.dropout_rng);
      rating = fm_predict(t, x, p("fm.bias"), p("fm.linear"), p("fm.factors"));
    }
    trace.prediction_var = rating;
    trace.prediction = t.value(rating).item();
    return trace;
  }

  /// Forward pass without gradients.
  ForwardTrace<Real> infer(const DocumentSet &user_docs, const DocumentSet &item_docs,
                           std::size_t user_row, std::size_t item_row) const {
    Tape<Real> t;
    return forward(t, user_docs, item_docs, user_row, item_row);
  }

  Real predict(const DocumentSet &user_docs, const DocumentSet &item_docs,
               std::size_t user_row, std::size_t item_row) const {
    return infer(user_docs, item_docs, user_row, item_row).prediction;
  }

private:
  struct Side {
    std::size_t reviews = 0; // real reviews encoded
    std::optional<Var> sentences; // (reviews * k) x 2h
    std::vector<bool> sentence_mask; // flattened over reviews * k
  };

  struct ItemSummary {
    Var text;
    std::optional<Var> reviews;        // r x 2h
    std::optional<Var> sentence_weights; // 1 x (r k), alpha^v concatenated
    std::optional<Var> review_weights;   // 1 x r, beta^v
  };

  Tensor<Real> padded_sentences(const Tape<Real> &t, const Side &side,
                                const DocumentSet &docs) const {
    Tensor<Real> out =
        Tensor<Real>::matrix(docs.max_reviews * docs.max_sentences, config_.text_dim());
    if (side.sentences) {
      const auto &v = t.value(*side.sentences).values();
      std::copy(v.begin(), v.end(), out.data());
    }
    return out;
  }

  void declare() {
    const auto &c = config_;
    const std::size_t d = c.word_dim, h = c.hidden, td = c.text_dim(), a = c.attention_dim;
    auto lstm = [&](const std::string &prefix, std::size_t in) {
      params_.add(prefix + ".input", Tensor<Real>::matrix(4 * h, in));
      params_.add(prefix + ".recurrent", Tensor<Real>::matrix(4 * h, h));
      params_.add(prefix + ".bias", Tensor<Real>::matrix(1, 4 * h));
    };
    auto attention = [&](const std::string &prefix) {
      params_.add(prefix + ".score", Tensor<Real>::matrix(a, 1));
      params_.add(prefix + ".proj", Tensor<Real>::matrix(td, a));
      params_.add(prefix + ".gate", Tensor<Real>::matrix(td, a));
    };
    if (c.uses_text()) {
      params_.add("word_embedding", Tensor<Real>::matrix(d, c.vocab_size));
      lstm("word_lstm.fwd", d);
      lstm("word_lstm.bwd", d);
      lstm("sentence_lstm.fwd", td);
      lstm("sentence_lstm.bwd", td);
      if (c.variant != Variant::NoItemAttention) {
        attention("item_sentence_attention");
        attention("item_review_attention");
      }
      if (c.variant == Variant::SymmetricUser) {
        attention("user_sentence_attention");
        attention("user_review_attention");
      } else {
        const std::size_t w = c.affinity_width();
        params_.add("sentence_affinity", Tensor<Real>::matrix(w, w));
        params_.add("review_affinity", Tensor<Real>::matrix(w, w));
        if (c.affinity == AffinityMap::Mlp) {
          for (const char *prefix : {"sentence_affinity_map", "review_affinity_map"}) {
            params_.add(std::string(prefix) + ".weight", Tensor<Real>::matrix(td, w));
            params_.add(std::string(prefix) + ".bias", Tensor<Real>::matrix(1, w));
          }
        }
      }
    }
    params_.add("user_id_embedding", Tensor<Real>::matrix(c.user_rows, c.id_dim));
    params_.add("user_id_mlp.weight", Tensor<Real>::matrix(c.id_dim, c.id_dim));
    params_.add("user_id_mlp.bias", Tensor<Real>::matrix(1, c.id_dim));
    params_.add("item_id_embedding", Tensor<Real>::matrix(c.item_rows, c.id_dim));
    params_.add("item_id_mlp.weight", Tensor<Real>::matrix(c.id_dim, c.id_dim));
    params_.add("item_id_mlp.bias", Tensor<Real>::matrix(1, c.id_dim));
    if (c.variant != Variant::DotProductHead) {
      params_.add("fm.bias", Tensor<Real>::matrix(1, 1));
      params_.add("fm.linear", Tensor<Real>::matrix(c.fm_input_dim(), 1));
      params_.add("fm.factors", Tensor<Real>::matrix(c.fm_input_dim(), c.fm_factors));
    }
  }

  void randomize(std::uint64_t seed, double mean_rating) {
    Rng rng(seed);
    const Real lstm_scale = Real(1) / std::sqrt(Real(config_.hidden));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const std::string &name = params_.name(i);
      Tensor<Real> &x = params_.at(i);
      auto fill_uniform = [&](double r) {
        for (auto &v : x.values()) v = static_cast<Real>(rng.uniform(-r, r));
      };
      if (name.find("_lstm.") != std::string::npos) {
        if (name.ends_with(".bias")) {
          // Forget-gate block starts at row h.
          x.fill(Real(0));
          for (std::size_t j = config_.hidden; j < 2 * config_.hidden; ++j) x[j] = Real(1);
        } else {
          fill_uniform(lstm_scale);
        }
      } else if (name == "fm.bias") {
        x[0] = static_cast<Real>(mean_rating);
      } else if (name == "fm.linear") {
        x.fill(Real(0));
      } else if (name == "fm.factors") {
        for (auto &v : x.values()) v = static_cast<Real>(0.01 * rng.normal());
      } else if (name.ends_with("_map.bias") || name.ends_with("_mlp.bias")) {
        x.fill(Real(0));
      } else {
        fill_uniform(0.1);
      }
    }
  }

  /// Word BiLSTM, masked max-pool per sentence, then sentence BiLSTM, over
  /// the real reviews of one side.
  Side encode(Tape<Real> &t, const detail::Bound<Real> &p, const DocumentSet &docs) const {
    Side side;
    side.reviews = docs.num_reviews();
    if (side.reviews == 0) return side;
    const std::size_t k = docs.max_sentences, l = docs.max_words;
    const std::size_t slots = side.reviews * k;
    std::vector<std::size_t> indices(docs.words.begin(), docs.words.begin() + slots * l);
    std::vector<std::size_t> word_counts(docs.word_counts.begin(),
                                         docs.word_counts.begin() + slots);
    std::vector<std::size_t> sentence_counts(docs.sentence_counts.begin(),
                                             docs.sentence_counts.begin() + side.reviews);
    const Var words = embedding_lookup(t, p("word_embedding"), indices);
    const Var states = bilstm(t, words, l, word_counts, detail::lstm_vars(p, "word_lstm.fwd"),
                              detail::lstm_vars(p, "word_lstm.bwd"));
    const Var pooled = segment_max(t, states, l, word_counts);
    side.sentences = bilstm(t, pooled, k, sentence_counts,
                            detail::lstm_vars(p, "sentence_lstm.fwd"),
                            detail::lstm_vars(p, "sentence_lstm.bwd"));
    side.sentence_mask.resize(slots);
    for (std::size_t r = 0; r < side.reviews; ++r)
      for (std::size_t s = 0; s < k; ++s) side.sentence_mask[r * k + s] = s < sentence_counts[r];
    return side;
  }

  AttentionVars<Real> attention_vars(const detail::Bound<Real> &p, const std::string &prefix) const {
    return {p(prefix + ".score"), p(prefix + ".proj"), p(prefix + ".gate")};
  }

  bool gating() const { return config_.variant != Variant::NoGating; }

  /// Item path: sentence attention within each review, then review
  /// attention; neither reads anything from the user.
  ItemSummary summarize_item(Tape<Real> &t, const detail::Bound<Real> &p, const Side &item,
                             const DocumentSet &docs, ForwardTrace<Real> &trace) const {
    const std::size_t k = docs.max_sentences, td = config_.text_dim();
    trace.item_sentence_weights = Tensor<Real>::matrix(docs.max_reviews, k);
    trace.item_review_weights = Tensor<Real>::matrix(1, docs.max_reviews);
    trace.item_reviews = Tensor<Real>::matrix(docs.max_reviews, td);
    ItemSummary out;
    if (item.reviews == 0) {
      out.text = detail::zeros(t, 1, td);
      return out;
    }
    const bool average = config_.variant == Variant::NoItemAttention;
    std::optional<Var> scores;
    if (!average)
      scores = transpose(t, attention_scores(t, *item.sentences,
                                             attention_vars(p, "item_sentence_attention"),
                                             gating()));
    std::vector<Var> weights, reviews;
    for (std::size_t r = 0; r < item.reviews; ++r) {
      const std::vector<bool> mask(item.sentence_mask.begin() + r * k,
                                   item.sentence_mask.begin() + (r + 1) * k);
      const Var w = average ? t.constant(detail::uniform_weights<Real>(mask))
                            : softmax_masked(t, slice_cols(t, *scores, r * k, k), mask);
      const Var rv = aggregate(t, slice_rows(t, *item.sentences, r * k, k), w);
      weights.push_back(w);
      reviews.push_back(rv);
      detail::write_row(trace.item_sentence_weights, r, t.value(w));
      detail::write_row(trace.item_reviews, r, t.value(rv));
    }
    out.reviews = concat_rows(t, reviews);
    out.sentence_weights = concat_cols(t, weights);
    const std::vector<bool> all(item.reviews, true);
    const Var beta = average ? t.constant(detail::uniform_weights<Real>(all))
                             : gated_attention(t, *out.reviews, all,
                                               attention_vars(p, "item_review_attention"),
                                               gating());
    out.review_weights = beta;
    for (std::size_t r = 0; r < item.reviews; ++r) trace.item_review_weights[r] = t.value(beta)[r];
    out.text = aggregate(t, *out.reviews, beta);
    return out;
  }

  std::function<Var(Var)> affinity_map(Tape<Real> &t, const detail::Bound<Real> &p,
                                       const std::string &prefix) const {
    if (config_.affinity == AffinityMap::Identity) return [](Var x) { return x; };
    const Var w = p(prefix + ".weight"), b = p(prefix + ".bias");
    return [&t, w, b](Var x) {
      const Var xw = matmul(t, x, w);
      // Bias added per row: ones (rows x 1) * b (1 x width).
      const Var ones = t.constant(Tensor<Real>(Shape{t.value(x).rows(), 1}, Real(1)));
      return tanh(t, add(t, xw, matmul(t, ones, b)));
    };
  }

  /// User path: co-attention against the target item at sentence and review
  /// level (or item-style attention in the symmetric variant).
  Var summarize_user(Tape<Real> &t, const detail::Bound<Real> &p, const Side &user,
                     const DocumentSet &docs, const Side &item, const DocumentSet &item_docs,
                     const ItemSummary &is, ForwardTrace<Real> &trace) const {
    const std::size_t k = docs.max_sentences, td = config_.text_dim();
    trace.user_sentence_weights = Tensor<Real>::matrix(docs.max_reviews, k);
    trace.user_review_weights = Tensor<Real>::matrix(1, docs.max_reviews);
    trace.user_reviews = Tensor<Real>::matrix(docs.max_reviews, td);
    if (user.reviews == 0) return detail::zeros(t, 1, td);
    (void)item_docs;

    const bool symmetric = config_.variant == Variant::SymmetricUser;
    const bool adapted = config_.variant != Variant::NoAdaptedAffinity;
    const bool item_has_text = item.reviews > 0;

    // Sentence level: one affinity matrix between all user sentences and all
    // item sentences, sliced per user review.
    Var sentence_scores;
    if (symmetric) {
      sentence_scores = transpose(
          t, attention_scores(t, *user.sentences, attention_vars(p, "user_sentence_attention")));
    } else if (item_has_text) {
      sentence_scores = coattention_affinity(
          t, *user.sentences, *item.sentences,
          adapted ? is.sentence_weights : std::nullopt, item.sentence_mask,
          p("sentence_affinity"), affinity_map(t, p, "sentence_affinity_map"));
    } else {
      sentence_scores = detail::zeros(t, 1, user.reviews * k);
    }
    std::vector<Var> reviews;
    for (std::size_t r = 0; r < user.reviews; ++r) {
      const std::vector<bool> mask(user.sentence_mask.begin() + r * k,
                                   user.sentence_mask.begin() + (r + 1) * k);
      const Var w = softmax_masked(t, slice_cols(t, sentence_scores, r * k, k), mask);
      const Var ru = aggregate(t, slice_rows(t, *user.sentences, r * k, k), w);
      reviews.push_back(ru);
      detail::write_row(trace.user_sentence_weights, r, t.value(w));
      detail::write_row(trace.user_reviews, r, t.value(ru));
    }
    const Var user_reviews = concat_rows(t, reviews);
    const std::vector<bool> all(user.reviews, true);
    Var beta;
    if (symmetric) {
      beta = gated_attention(t, user_reviews, all, attention_vars(p, "user_review_attention"));
    } else if (item_has_text) {
      const std::vector<bool> item_all(item.reviews, true);
      beta = coattention_weights(t, user_reviews, *is.reviews,
                                 adapted ? is.review_weights : std::nullopt, all, item_all,
                                 p("review_affinity"),
                                 affinity_map(t, p, "review_affinity_map"));
    } else {
      beta = t.constant(detail::uniform_weights<Real>(all));
    }
    for (std::size_t r = 0; r < user.reviews; ++r) trace.user_review_weights[r] = t.value(beta)[r];
    return aggregate(t, user_reviews, beta);
  }

  /// Table row followed by one affine + tanh layer.
  Var id_embed(Tape<Real> &t, const detail::Bound<Real> &p, const std::string &side,
               std::size_t row) const {
    const Var e = row_lookup(t, p(side + "_id_embedding"), row);
    return tanh(t, add(t, matmul(t, e, p(side + "_id_mlp.weight")), p(side + "_id_mlp.bias")));
  }

  Var dropout(Tape<Real> &t, Var x, Rng &rng) const {
    const Real keep = Real(1) - static_cast<Real>(config_.dropout);
    Tensor<Real> mask(t.value(x).shape());
    for (auto &m : mask.values()) m = rng.bernoulli(config_.dropout) ? Real(0) : Real(1) / keep;
    return mul(t, x, t.constant(std::move(mask)));
  }

  ModelConfig config_;
  ParamStore<Real> params_;
};

/// Standalone ID embedding: lookup of `row` in `table`, then tanh(e W + b).
template <typename Real>
Var id_embed(Tape<Real> &t, Var table, std::size_t row, Var weight, Var bias) {
  const Var e = row_lookup(t, table, row);
  return tanh(t, add(t, matmul(t, e, weight), bias));
}

} // namespace ahn
