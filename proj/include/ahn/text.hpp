#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

namespace ahn {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sentence of lowercased tokens plus its byte span [begin, end) in the
/// source text.
struct Sentence {
  std::vector<std::string> tokens;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Number of tokenizer invocations in this process.
inline std::atomic<std::size_t> &tokenizer_calls() {
  static std::atomic<std::size_t> calls{0};
  return calls;
}

namespace detail {
// Bytes >= 0x80 belong to tokens so UTF-8 words survive intact.
inline bool is_token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }
} // namespace detail

/// Splits on '.', '!' or '?' followed by whitespace or end of text, then
/// tokenizes each sentence on non-alphanumeric boundaries. Sentences without
/// tokens are dropped.
inline std::vector<Sentence> split_sentences(std::string_view text) {
  ++tokenizer_calls();
  std::vector<Sentence> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t stop) {
    Sentence s;
    std::size_t i = start;
    while (i < stop) {
      while (i < stop && !detail::is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
      const std::size_t b = i;
      while (i < stop && detail::is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
      if (i > b) {
        std::string tok(text.substr(b, i - b));
        for (auto &c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        s.tokens.push_back(std::move(tok));
      }
    }
    if (!s.tokens.empty()) {
      std::size_t b = start;
      while (b < stop && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
      s.begin = b;
      s.end = stop;
      out.push_back(std::move(s));
    }
    start = stop;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool boundary = i + 1 == text.size() ||
                          std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (boundary) flush(i + 1);
  }
  if (start < text.size()) flush(text.size());
  return out;
}

inline std::vector<std::vector<std::string>> tokenize(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  for (auto &s : split_sentences(text)) out.push_back(std::move(s.tokens));
  return out;
}

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

/// Token <-> index map. Index 0 is padding, 1 is unknown.
class Vocabulary {
public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnknown = 1;

  Vocabulary() : tokens_{"<pad>", "<unk>"} {}

  /// Keeps the `max_size` most frequent tokens (ties broken alphabetically)
  /// after the two reserved entries.
  static Vocabulary build(const std::map<std::string, std::size_t> &counts,
                          std::size_t max_size) {
    std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(), counts.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto &a, const auto &b) { return a.second > b.second; });
    Vocabulary v;
    for (std::size_t i = 0; i < sorted.size() && i < max_size; ++i)
      v.add(sorted[i].first);
    return v;
  }

  static Vocabulary from_lines(std::istream &in) {
    Vocabulary v;
    v.tokens_.clear();
    v.index_.clear();
    std::string line;
    while (std::getline(in, line)) {
      v.index_.emplace(line, static_cast<std::uint32_t>(v.tokens_.size()));
      v.tokens_.push_back(line);
    }
    if (v.tokens_.size() < 2 || v.tokens_[0] != "<pad>" || v.tokens_[1] != "<unk>")
      throw IoError("vocabulary must start with <pad> and <unk>");
    v.index_.erase("<pad>");
    v.index_.erase("<unk>");
    return v;
  }

  std::uint32_t lookup(const std::string &token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnknown : it->second;
  }
  const std::string &token(std::uint32_t index) const { return tokens_.at(index); }
  std::size_t size() const noexcept { return tokens_.size(); }

  /// One token per line; the line number is the index.
  std::string serialize() const {
    std::string out;
    for (const auto &t : tokens_) {
      out += t;
      out += '\n';
    }
    return out;
  }

  std::string content_hash() const { return sha256_hex(serialize()); }

  friend bool operator==(const Vocabulary &a, const Vocabulary &b) {
    return a.tokens_ == b.tokens_;
  }

private:
  void add(const std::string &token) {
    index_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
    tokens_.push_back(token);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

} // namespace ahn
