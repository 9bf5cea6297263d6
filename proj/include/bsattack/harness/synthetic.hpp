#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/harness/dataset.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bsattack {

// Synthetic keyword-sentiment task: every sentence is filler words plus one
// sentiment keyword, and the keyword's polarity is the label.

struct SyntheticConfig {
  std::size_t train_size = 1000;
  std::size_t test_size = 200;
  std::size_t min_length = 5;
  std::size_t max_length = 20;
  std::size_t filler_words = 420;
  std::uint64_t seed = 7;
};

inline const std::vector<std::string>& negative_keywords() {
  static const std::vector<std::string> words = {
      "awful",    "terrible", "horrible",  "dreadful",    "bad",       "poor",
      "worst",    "boring",   "dull",      "broken",      "ugly",      "nasty",
      "rude",     "slow",     "bland",     "mediocre",    "annoying",  "disgusting",
      "painful",  "useless",  "weak",      "sad",         "angry",     "failed",
      "hate",     "cheap",    "dirty",     "disappointing", "inferior", "lousy",
      "miserable", "pathetic", "rotten",   "shoddy",      "stale",     "tedious",
      "unpleasant", "wasteful", "wretched", "gloomy"};
  return words;
}

inline const std::vector<std::string>& positive_keywords() {
  static const std::vector<std::string> words = {
      "great",     "excellent", "wonderful", "superb",     "good",      "fine",
      "best",      "exciting",  "lively",    "perfect",    "lovely",    "pleasant",
      "kind",      "fast",      "tasty",     "outstanding", "charming", "delicious",
      "soothing",  "useful",    "strong",    "happy",      "calm",      "succeeded",
      "love",      "valuable",  "clean",     "impressive", "superior",  "brilliant",
      "joyful",    "admirable", "fresh",     "sturdy",     "crisp",     "engaging",
      "delightful", "efficient", "splendid", "cheerful"};
  return words;
}

/// Deterministic pseudo-words built from consonant-vowel syllables.
inline std::vector<std::string> filler_vocabulary(std::size_t count) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::vector<std::string> syllables;
  for (char c : consonants)
    for (char v : vowels) syllables.push_back(std::string{c, v});
  std::vector<std::string> words;
  const std::size_t s = syllables.size();
  if (count > s * s) throw InvalidArgument("filler_vocabulary: too many words requested");
  // Stride through syllable pairs so neighbouring words differ in both halves.
  for (std::size_t k = 0; words.size() < count; ++k) {
    const std::size_t idx = (k * 37) % (s * s);
    words.push_back(syllables[idx / s] + syllables[idx % s] + "n");
  }
  return words;
}

struct SyntheticCorpus {
  LabeledDataset train;
  LabeledDataset test;
};

inline LabeledDataset generate_keyword_split(std::size_t size, const SyntheticConfig& cfg,
                                             const std::vector<std::string>& fillers,
                                             std::mt19937_64& rng, std::string split) {
  const std::array<const std::vector<std::string>*, 2> keywords = {&negative_keywords(),
                                                                   &positive_keywords()};
  std::uniform_int_distribution<std::size_t> length(cfg.min_length, cfg.max_length);
  std::uniform_int_distribution<std::size_t> cls(0, 1);
  std::uniform_int_distribution<std::size_t> filler(0, fillers.size() - 1);
  LabeledDataset ds;
  ds.class_names = {"negative", "positive"};
  ds.split = std::move(split);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t n = length(rng);
    const std::size_t label = cls(rng);
    const auto& words = *keywords[label];
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<std::size_t> where(0, n - 1);
    const std::size_t pos = where(rng);
    const std::string& keyword = words[pick(rng)];
    std::string text;
    for (std::size_t t = 0; t < n; ++t) {
      if (t) text.push_back(' ');
      text += t == pos ? keyword : fillers[filler(rng)];
    }
    ds.records.push_back({std::move(text), label});
  }
  return ds;
}

inline SyntheticCorpus generate_keyword_corpus(const SyntheticConfig& cfg) {
  if (cfg.min_length < 1 || cfg.max_length < cfg.min_length || cfg.filler_words == 0) {
    throw InvalidArgument("synthetic corpus: invalid length range or filler count");
  }
  const auto fillers = filler_vocabulary(cfg.filler_words);
  std::mt19937_64 rng(cfg.seed);
  SyntheticCorpus corpus;
  corpus.train = generate_keyword_split(cfg.train_size, cfg, fillers, rng, "train");
  corpus.test = generate_keyword_split(cfg.test_size, cfg, fillers, rng, "test");
  return corpus;
}

}  // namespace bsattack
