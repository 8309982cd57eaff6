#pragma once

// Plain-loop re-implementation of the full model (identity affinity map),
// written without the tape or any tensor op, for cross-checking forward().

#include "ahn/model.hpp"

#include <cmath>
#include <vector>

namespace ahn::reference {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>; // row-major: Mat[r][c]

inline Mat to_mat(const Tensor<double> &t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Lstm {
  Mat wx, wh;
  Vec b;
};

inline Lstm lstm_params(const ParamStore<double> &p, const std::string &prefix) {
  return {to_mat(p[prefix + ".input"]), to_mat(p[prefix + ".recurrent"]),
          to_mat(p[prefix + ".bias"])[0]};
}

/// Hidden state at every input position; `reverse` walks last to first.
inline std::vector<Vec> run_lstm(const Lstm &w, const std::vector<Vec> &xs, bool reverse) {
  const std::size_t h = w.wh[0].size();
  std::vector<Vec> out(xs.size(), Vec(h, 0.0));
  Vec hp(h, 0.0), cp(h, 0.0);
  for (std::size_t step = 0; step < xs.size(); ++step) {
    const std::size_t pos = reverse ? xs.size() - 1 - step : step;
    Vec z(4 * h);
    for (std::size_t j = 0; j < 4 * h; ++j) {
      double acc = w.b[j];
      for (std::size_t k = 0; k < xs[pos].size(); ++k) acc += w.wx[j][k] * xs[pos][k];
      for (std::size_t k = 0; k < h; ++k) acc += w.wh[j][k] * hp[k];
      z[j] = acc;
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sigm(z[j]), f = sigm(z[h + j]), g = std::tanh(z[2 * h + j]),
                   o = sigm(z[3 * h + j]);
      cp[j] = f * cp[j] + i * g;
      hp[j] = o * std::tanh(cp[j]);
    }
    out[pos] = hp;
  }
  return out;
}

inline std::vector<Vec> run_bilstm(const Lstm &f, const Lstm &b, const std::vector<Vec> &xs) {
  const auto hf = run_lstm(f, xs, false);
  const auto hb = run_lstm(b, xs, true);
  std::vector<Vec> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Vec v = hf[i];
    v.insert(v.end(), hb[i].begin(), hb[i].end());
    out.push_back(v);
  }
  return out;
}

struct Attention {
  Vec score;
  Mat proj, gate; // in x a
};

inline Attention attention_params(const ParamStore<double> &p, const std::string &prefix) {
  Attention a;
  for (const auto &row : to_mat(p[prefix + ".score"])) a.score.push_back(row[0]);
  a.proj = to_mat(p[prefix + ".proj"]);
  a.gate = to_mat(p[prefix + ".gate"]);
  return a;
}

inline double gated_score(const Attention &a, const Vec &x) {
  double s = 0;
  for (std::size_t j = 0; j < a.score.size(); ++j) {
    double p = 0, g = 0;
    for (std::size_t c = 0; c < x.size(); ++c) {
      p += x[c] * a.proj[c][j];
      g += x[c] * a.gate[c][j];
    }
    s += a.score[j] * std::tanh(p) * sigm(g);
  }
  return s;
}

inline Vec softmax(const Vec &x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  Vec e(x.size());
  double total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (e[i] = std::exp(x[i] - mx));
  for (double &v : e) v /= total;
  return e;
}

inline Vec weighted_sum(const std::vector<Vec> &xs, const Vec &w) {
  Vec out(xs[0].size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[i] * xs[i][c];
  return out;
}

inline double bilinear(const Vec &u, const Mat &m, const Vec &v) {
  double s = 0;
  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = 0; b < v.size(); ++b) s += u[a] * m[a][b] * v[b];
  return s;
}

/// Per review, the context-aware embeddings of its real sentences.
inline std::vector<std::vector<Vec>> encode(const ParamStore<double> &p, const DocumentSet &d) {
  const Mat E = to_mat(p["word_embedding"]);
  const auto wf = lstm_params(p, "word_lstm.fwd"), wb = lstm_params(p, "word_lstm.bwd");
  const auto sf = lstm_params(p, "sentence_lstm.fwd"), sb = lstm_params(p, "sentence_lstm.bwd");
  std::vector<std::vector<Vec>> out;
  for (std::size_t r = 0; r < d.num_reviews(); ++r) {
    std::vector<Vec> pooled;
    for (std::size_t s = 0; s < d.sentence_counts[r]; ++s) {
      std::vector<Vec> words;
      for (std::size_t w = 0; w < d.word_counts[r * d.max_sentences + s]; ++w) {
        Vec e(E.size());
        for (std::size_t i = 0; i < E.size(); ++i) e[i] = E[i][d.word(r, s, w)];
        words.push_back(e);
      }
      const auto states = run_bilstm(wf, wb, words);
      Vec mx = states[0];
      for (const auto &st : states)
        for (std::size_t c = 0; c < mx.size(); ++c) mx[c] = std::max(mx[c], st[c]);
      pooled.push_back(mx);
    }
    out.push_back(run_bilstm(sf, sb, pooled));
  }
  return out;
}

struct Result {
  std::vector<Vec> item_sentence_weights, user_sentence_weights;
  Vec item_review_weights, user_review_weights;
  Vec user_text, item_text, user_id, item_id;
  double prediction = 0;
};

inline Vec id_embedding(const ParamStore<double> &p, const std::string &side, std::size_t row) {
  const Vec e = to_mat(p[side + "_id_embedding"])[row];
  const Mat w = to_mat(p[side + "_id_mlp.weight"]);
  const Vec b = to_mat(p[side + "_id_mlp.bias"])[0];
  Vec out(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    double acc = b[j];
    for (std::size_t i = 0; i < e.size(); ++i) acc += e[i] * w[i][j];
    out[j] = std::tanh(acc);
  }
  return out;
}

/// Pairwise definition: b + sum w_i x_i + sum_{i<j} <z_i, z_j> x_i x_j.
inline double fm_pairwise(double b, const Vec &w, const Mat &z, const Vec &x) {
  double g = b;
  for (std::size_t i = 0; i < x.size(); ++i) g += w[i] * x[i];
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double dot = 0;
      for (std::size_t f = 0; f < z[i].size(); ++f) dot += z[i][f] * z[j][f];
      g += dot * x[i] * x[j];
    }
  return g;
}

inline Result forward(const Model<double> &model, const DocumentSet &ud, const DocumentSet &vd,
                      std::size_t user_row, std::size_t item_row) {
  const auto &p = model.params();
  const std::size_t td = model.config().text_dim();
  Result res;
  const auto item = encode(p, vd);
  const auto user = encode(p, ud);

  // Item side.
  const auto as = attention_params(p, "item_sentence_attention");
  const auto ar = attention_params(p, "item_review_attention");
  std::vector<Vec> item_reviews;
  for (const auto &sents : item) {
    Vec scores;
    for (const auto &s : sents) scores.push_back(gated_score(as, s));
    res.item_sentence_weights.push_back(softmax(scores));
    item_reviews.push_back(weighted_sum(sents, res.item_sentence_weights.back()));
  }
  res.item_text = Vec(td, 0.0);
  if (!item.empty()) {
    Vec scores;
    for (const auto &r : item_reviews) scores.push_back(gated_score(ar, r));
    res.item_review_weights = softmax(scores);
    res.item_text = weighted_sum(item_reviews, res.item_review_weights);
  }

  // User side.
  const Mat Ms = to_mat(p["sentence_affinity"]), Mr = to_mat(p["review_affinity"]);
  std::vector<Vec> user_reviews;
  for (const auto &sents : user) {
    Vec scores;
    for (const auto &s : sents) {
      double best = 0;
      bool first = true;
      for (std::size_t r = 0; r < item.size(); ++r)
        for (std::size_t j = 0; j < item[r].size(); ++j) {
          const double g = std::max(0.0, bilinear(s, Ms, item[r][j])) *
                           res.item_sentence_weights[r][j];
          if (first || g > best) best = g;
          first = false;
        }
      scores.push_back(best);
    }
    res.user_sentence_weights.push_back(softmax(scores));
    user_reviews.push_back(weighted_sum(sents, res.user_sentence_weights.back()));
  }
  res.user_text = Vec(td, 0.0);
  if (!user.empty()) {
    Vec scores;
    for (const auto &u : user_reviews) {
      double best = 0;
      bool first = true;
      for (std::size_t r = 0; r < item_reviews.size(); ++r) {
        const double g =
            std::max(0.0, bilinear(u, Mr, item_reviews[r])) * res.item_review_weights[r];
        if (first || g > best) best = g;
        first = false;
      }
      scores.push_back(best);
    }
    res.user_review_weights = softmax(scores);
    res.user_text = weighted_sum(user_reviews, res.user_review_weights);
  }

  res.user_id = id_embedding(p, "user", user_row);
  res.item_id = id_embedding(p, "item", item_row);
  Vec x = res.user_text;
  x.insert(x.end(), res.user_id.begin(), res.user_id.end());
  x.insert(x.end(), res.item_text.begin(), res.item_text.end());
  x.insert(x.end(), res.item_id.begin(), res.item_id.end());
  Vec w;
  for (const auto &row : to_mat(p["fm.linear"])) w.push_back(row[0]);
  res.prediction = fm_pairwise(p["fm.bias"][0], w, to_mat(p["fm.factors"]), x);
  return res;
}

/// Largest absolute difference between a forward trace and the reference,
/// over every attention weight, embedding and the prediction.
inline double trace_difference(const ForwardTrace<double> &t, const Result &r) {
  double worst = std::abs(t.prediction - r.prediction);
  auto cmp = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  auto cmp_vec = [&](const Tensor<double> &a, const Vec &b) {
    for (std::size_t i = 0; i < b.size(); ++i) cmp(a[i], b[i]);
  };
  auto cmp_rows = [&](const Tensor<double> &a, const std::vector<Vec> &b) {
    for (std::size_t row = 0; row < b.size(); ++row)
      for (std::size_t i = 0; i < b[row].size(); ++i) cmp(a(row, i), b[row][i]);
  };
  cmp_rows(t.item_sentence_weights, r.item_sentence_weights);
  cmp_rows(t.user_sentence_weights, r.user_sentence_weights);
  cmp_vec(t.item_review_weights, r.item_review_weights);
  cmp_vec(t.user_review_weights, r.user_review_weights);
  cmp_vec(t.user_text, r.user_text);
  cmp_vec(t.item_text, r.item_text);
  cmp_vec(t.user_id, r.user_id);
  cmp_vec(t.item_id, r.item_id);
  return worst;
}

} // namespace ahn::reference
