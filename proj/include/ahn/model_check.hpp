#pragma once

#include "ahn/gradcheck.hpp"
#include "ahn/model.hpp"

#include <algorithm>
#include <map>

namespace ahn {

/// d=8, h=4, k=2, l=3, n=m=2, kappa=2 with small ID and attention widths.
inline ModelConfig tiny_config(Variant variant = Variant::Full) {
  ModelConfig c;
  c.vocab_size = 12;
  c.user_rows = 4;
  c.item_rows = 4;
  c.word_dim = 8;
  c.hidden = 4;
  c.attention_dim = 4;
  c.id_dim = 4;
  c.fm_factors = 2;
  c.affinity_dim = 6;
  c.dropout = 0;
  c.variant = variant;
  return c;
}

inline DocumentConfig tiny_documents_config() {
  DocumentConfig d;
  d.user_reviews = 2;
  d.item_reviews = 2;
  d.sentences = 2;
  d.words = 3;
  return d;
}

/// Random document set with `reviews` real reviews of 1..k sentences of
/// 1..l words drawn from indices [2, vocab).
inline DocumentSet random_documents(Rng &rng, const DocumentConfig &shape, bool user_side,
                                    std::size_t reviews, std::size_t vocab) {
  DocumentSet docs(user_side ? shape.user_reviews : shape.item_reviews, shape.sentences,
                   shape.words);
  for (std::size_t r = 0; r < reviews; ++r) {
    EncodedReview rev;
    rev.interaction = r;
    const std::size_t ns = 1 + rng.below(shape.sentences);
    for (std::size_t s = 0; s < ns; ++s) {
      std::vector<std::uint32_t> sent(1 + rng.below(shape.words));
      for (auto &w : sent) w = static_cast<std::uint32_t>(2 + rng.below(vocab - 2));
      rev.sentences.push_back(sent);
    }
    docs.append(rev);
  }
  return docs;
}

/// Overwrites every parameter with uniform(-scale, scale) draws, so that no
/// path through the network is numerically negligible.
template <typename Real> void scramble(ParamStore<Real> &params, Rng &rng, double scale = 0.5) {
  for (std::size_t i = 0; i < params.size(); ++i)
    for (auto &v : params.at(i).values()) v = static_cast<Real>(rng.uniform(-scale, scale));
}

struct PairExample {
  DocumentSet user_docs, item_docs;
  std::size_t user_row = 0, item_row = 0;
  double rating = 3;
};

/// Mean squared error over `batch` on one tape. Gradients flow into `grads`
/// when given.
template <typename Real>
Var batch_loss(Tape<Real> &t, const Model<Real> &model, const std::vector<PairExample> &batch,
               ParamStore<Real> *grads, const ForwardOptions &opts = {}) {
  std::optional<Var> total;
  for (const auto &ex : batch) {
    const auto trace =
        model.forward(t, ex.user_docs, ex.item_docs, ex.user_row, ex.item_row, grads, opts);
    const Var e = squared_error(t, trace.prediction_var, static_cast<Real>(ex.rating));
    total = total ? add(t, *total, e) : e;
  }
  return scale(t, *total, Real(1) / static_cast<Real>(batch.size()));
}

struct ParamCheck {
  std::string name;
  double max_error;
};

/// Compares backprop through the whole model with central differences for
/// every parameter tensor, on a small random batch. Parameters are drawn
/// from uniform(-2, 2): at the training init the attention gradients sit
/// near 1e-8, where the central difference is mostly roundoff.
inline std::vector<ParamCheck> check_model_gradients(const ModelConfig &config,
                                                     std::uint64_t seed, double eps = 1e-5) {
  Rng rng(seed);
  Model<double> model(config);
  scramble(model.params(), rng, 2.0);
  const auto shape = tiny_documents_config();
  std::vector<PairExample> batch;
  for (std::size_t i = 0; i < 2; ++i) {
    PairExample ex;
    ex.user_docs = random_documents(rng, shape, true, 1 + i, config.vocab_size);
    ex.item_docs = random_documents(rng, shape, false, 2 - i, config.vocab_size);
    ex.user_row = rng.below(config.user_rows);
    ex.item_row = rng.below(config.item_rows);
    ex.rating = 1 + 4 * rng.uniform();
    batch.push_back(std::move(ex));
  }

  auto grads = model.params().zeros_like();
  {
    Tape<double> t;
    t.backward(batch_loss(t, model, batch, &grads));
  }
  auto loss = [&]() {
    Tape<double> t;
    return t.value(batch_loss<double>(t, model, batch, nullptr)).item();
  };
  std::vector<ParamCheck> out;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const auto numeric = numeric_gradient(model.params().at(i).values(), loss, eps);
    out.push_back({model.params().name(i),
                   gradient_relative_error(grads.at(i).values(), numeric)});
  }
  return out;
}

/// Worst error per parameter group, the group being the name up to the
/// first dot.
inline std::map<std::string, double> group_errors(const std::vector<ParamCheck> &checks) {
  std::map<std::string, double> out;
  for (const auto &c : checks) {
    const std::string group = c.name.substr(0, c.name.find('.'));
    out[group] = std::max(out[group], c.max_error);
  }
  return out;
}

} // namespace ahn
