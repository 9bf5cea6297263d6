#pragma once

#include <bsattack/errors.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <ranges>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bsattack {

using TokenId = std::uint32_t;

struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
  friend auto operator<=>(const TokenSequence&, const TokenSequence&) = default;
};

/// Lowercased word tokenization: runs of alphanumeric (or non-ASCII) bytes
/// form words, every ASCII punctuation character is its own token, and
/// whitespace separates.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return words;
}

class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kPad = 1;
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kPadToken = "<pad>";

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  /// Word tokens in id order, excluding the two special tokens which always
  /// occupy ids 0 and 1.
  explicit Vocabulary(const std::vector<std::string>& words) {
    add(std::string(kUnkToken));
    add(std::string(kPadToken));
    for (const std::string& w : words) {
      if (index_.contains(w)) throw InvalidArgument("vocabulary: duplicate token '" + w + "'");
      add(w);
    }
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size()) throw InvalidArgument("vocabulary: id out of range");
    return tokens_[id];
  }

  TokenId id(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(std::string_view word) const { return index_.contains(std::string(word)); }

  static bool is_special(TokenId id) { return id == kUnk || id == kPad; }

  /// FNV-1a over the newline-joined token list; identifies a vocabulary in
  /// checkpoints.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const std::string& t : tokens_) {
      for (unsigned char c : t) {
        h ^= c;
        h *= 1099511628211ull;
      }
      h ^= static_cast<unsigned char>('\n');
      h *= 1099511628211ull;
    }
    return h;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write vocabulary file " + path);
    for (const std::string& t : tokens_) out << t << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read vocabulary file " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    if (lines.size() < 2 || lines[0] != kUnkToken || lines[1] != kPadToken) {
      throw FormatError(path + ": vocabulary must start with " + std::string(kUnkToken) +
                        " and " + std::string(kPadToken));
    }
    return Vocabulary(std::vector<std::string>(lines.begin() + 2, lines.end()));
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void add(std::string w) {
    index_.emplace(w, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(w));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Builds a vocabulary from every word occurring at least `min_count` times.
/// Words are ordered by descending frequency, then lexicographically.
template <std::ranges::input_range Corpus>
Vocabulary build_vocab(const Corpus& corpus, std::size_t min_count = 1) {
  std::map<std::string, std::size_t> counts;
  std::size_t texts = 0;
  for (const auto& text : corpus) {
    ++texts;
    for (std::string& w : split_words(text)) ++counts[std::move(w)];
  }
  if (texts == 0) throw InvalidArgument("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [word, count] : counts) {
    if (count >= min_count && word != Vocabulary::kUnkToken && word != Vocabulary::kPadToken) {
      ranked.emplace_back(word, count);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& entry : ranked) words.push_back(std::move(entry.first));
  return Vocabulary(words);
}

inline TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSequence seq;
  for (const std::string& w : split_words(text)) seq.ids.push_back(vocab.id(w));
  return seq;
}

inline std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out.push_back(' ');
    out += vocab.token(seq.ids[i]);
  }
  return out;
}

}  // namespace bsattack
