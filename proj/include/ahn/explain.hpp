#pragma once

#include "ahn/model.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace ahn {

struct ExplainSentence {
  double weight = 0;
  std::string text;
  std::size_t begin = 0, end = 0; // byte offsets into the review text
};

struct ExplainReview {
  std::size_t slot = 0;
  std::size_t interaction = 0;
  std::string user_id, item_id; // who wrote it, about what
  double weight = 0;
  std::string text;
  std::vector<ExplainSentence> sentences;
};

struct ExplainRecord {
  std::string user_id, item_id;
  double predicted = 0;
  std::optional<double> true_rating;
  std::vector<std::string> notes;
  std::vector<ExplainReview> user_reviews, item_reviews;
};

namespace detail {

template <typename Real>
std::vector<ExplainReview> explain_side(const Dataset &ds, const DocumentSet &docs,
                                        const Tensor<Real> &review_weights,
                                        const Tensor<Real> &sentence_weights) {
  std::unordered_map<std::size_t, const EncodedReview *> by_interaction;
  for (const auto &r : ds.reviews) by_interaction[r.interaction] = &r;
  std::vector<ExplainReview> out;
  for (std::size_t slot = 0; slot < docs.num_reviews(); ++slot) {
    const EncodedReview &rev = *by_interaction.at(docs.source[slot]);
    const auto &rating = ds.ratings.at(rev.interaction);
    ExplainReview er;
    er.slot = slot;
    er.interaction = rev.interaction;
    er.user_id = ds.users.at(rating.user);
    er.item_id = ds.items.at(rating.item);
    er.weight = static_cast<double>(review_weights[slot]);
    er.text = rev.text;
    for (std::size_t s = 0; s < docs.sentence_counts[slot]; ++s) {
      const auto [b, e] = rev.spans.at(s);
      er.sentences.push_back({static_cast<double>(sentence_weights(slot, s)),
                              rev.text.substr(b, e - b), b, e});
    }
    out.push_back(std::move(er));
  }
  return out;
}

inline nlohmann::json reviews_json(const std::vector<ExplainReview> &reviews) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &r : reviews) {
    nlohmann::json j;
    j["slot"] = r.slot;
    j["interaction"] = r.interaction;
    j["user_id"] = r.user_id;
    j["item_id"] = r.item_id;
    j["weight"] = r.weight;
    j["text"] = r.text;
    j["sentences"] = nlohmann::json::array();
    for (const auto &s : r.sentences)
      j["sentences"].push_back(
          {{"weight", s.weight}, {"text", s.text}, {"begin", s.begin}, {"end", s.end}});
    arr.push_back(j);
  }
  return arr;
}

} // namespace detail

/// Runs one forward pass for (user, item) and collects every review and
/// sentence weight with its source text. Unknown IDs are treated as cold
/// start and noted in the record.
template <typename Real>
ExplainRecord explain(const Model<Real> &model, const Dataset &ds, const std::string &user_id,
                      const std::string &item_id, ForwardTrace<Real> *trace_out = nullptr) {
  ExplainRecord rec;
  rec.user_id = user_id;
  rec.item_id = item_id;
  const auto u = ds.find_user(user_id);
  const auto v = ds.find_item(item_id);
  if (!u || !ds.user_in_train[*u])
    rec.notes.push_back("user '" + user_id + "' has no training reviews; cold start");
  if (!v || !ds.item_in_train[*v])
    rec.notes.push_back("item '" + item_id + "' has no training reviews; cold start");
  if (u && v)
    for (const auto &r : ds.ratings)
      if (r.user == *u && r.item == *v) rec.true_rating = r.rating;

  DocumentSet ud, vd;
  if (model.config().uses_text()) {
    ud = ds.user_documents(u, v);
    vd = ds.item_documents(v, u);
  } else {
    rec.notes.push_back("variant " + to_string(model.config().variant) + " reads no review text");
  }
  const std::size_t urow = u ? ds.user_row(*u) : ds.users.size();
  const std::size_t vrow = v ? ds.item_row(*v) : ds.items.size();
  const auto trace = model.infer(ud, vd, urow, vrow);
  rec.predicted = static_cast<double>(trace.prediction);
  if (model.config().uses_text()) {
    rec.user_reviews = detail::explain_side(ds, ud, trace.user_review_weights,
                                            trace.user_sentence_weights);
    rec.item_reviews = detail::explain_side(ds, vd, trace.item_review_weights,
                                            trace.item_sentence_weights);
  }
  if (trace_out) *trace_out = trace;
  return rec;
}

inline nlohmann::json to_json(const ExplainRecord &r) {
  nlohmann::json j;
  j["user_id"] = r.user_id;
  j["item_id"] = r.item_id;
  j["predicted_rating"] = r.predicted;
  j["true_rating"] = r.true_rating ? nlohmann::json(*r.true_rating) : nlohmann::json(nullptr);
  j["notes"] = r.notes;
  j["user_reviews"] = detail::reviews_json(r.user_reviews);
  j["item_reviews"] = detail::reviews_json(r.item_reviews);
  return j;
}

/// Reviews by descending weight (ties by slot); the top three carry a '*'.
inline std::string render_text(const ExplainRecord &r) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "user " << r.user_id << " / item " << r.item_id << "\n";
  out << "predicted rating " << r.predicted;
  if (r.true_rating) out << " (actual " << *r.true_rating << ")";
  out << "\n";
  for (const auto &n : r.notes) out << "note: " << n << "\n";
  auto side = [&](const std::string &title, std::vector<ExplainReview> reviews) {
    std::stable_sort(reviews.begin(), reviews.end(),
                     [](const auto &a, const auto &b) { return a.weight > b.weight; });
    out << "\n" << title << "\n";
    if (reviews.empty()) out << "  (none)\n";
    for (std::size_t i = 0; i < reviews.size(); ++i) {
      const auto &rv = reviews[i];
      out << (i < 3 ? "* " : "  ") << std::fixed << std::setprecision(4) << rv.weight
          << std::defaultfloat << std::setprecision(6) << "  [" << rv.user_id << " on "
          << rv.item_id << "]\n";
      for (const auto &s : rv.sentences)
        out << "      " << std::fixed << std::setprecision(4) << s.weight << std::defaultfloat
            << std::setprecision(6) << "  " << s.text << "\n";
    }
  };
  side("user reviews (by weight)", r.user_reviews);
  side("item reviews (by weight)", r.item_reviews);
  return out.str();
}

} // namespace ahn
