#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/vocab/embedding_table.hpp>
#include <bsattack/vocab/vocabulary.hpp>

#include <cmath>
#include <string_view>
#include <vector>

namespace bsattack {

/// Name recorded in reports for the similarity function below.
inline constexpr std::string_view kSimilarityFunction = "mean-embedding-cosine/v1";

/// Cosine similarity between the mean input embeddings of two equal-length
/// sequences. Stands in for a sentence-encoder similarity.
template <class T>
double similarity_proxy(const TokenSequence& original, const TokenSequence& adversarial,
                        const EmbeddingTable<T>& table) {
  if (original.size() != adversarial.size()) {
    throw InvalidArgument("similarity_proxy: sequences differ in length");
  }
  if (original.empty()) throw InvalidArgument("similarity_proxy: empty sequences");
  const std::size_t d = table.dim();
  std::vector<double> a(d, 0.0), b(d, 0.0);
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto ra = table.row(original.ids[i]);
    const auto rb = table.row(adversarial.ids[i]);
    for (std::size_t c = 0; c < d; ++c) {
      a[c] += static_cast<double>(ra[c]);
      b[c] += static_cast<double>(rb[c]);
    }
  }
  const double n = static_cast<double>(original.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    a[c] /= n;
    b[c] /= n;
    dot += a[c] * b[c];
    na += a[c] * a[c];
    nb += b[c] * b[c];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(na > 1e-12) || !(nb > 1e-12)) {
    throw InvalidArgument("similarity_proxy: zero-norm mean embedding");
  }
  return dot / (na * nb);
}

/// Fraction of positions whose token differs.
inline double token_error_rate(const TokenSequence& original, const TokenSequence& adversarial) {
  if (original.size() != adversarial.size()) {
    throw InvalidArgument("token_error_rate: sequences differ in length");
  }
  if (original.empty()) throw InvalidArgument("token_error_rate: empty sequences");
  std::size_t diff = 0;
  for (std::size_t i = 0; i < original.size(); ++i) diff += original.ids[i] != adversarial.ids[i];
  return static_cast<double>(diff) / static_cast<double>(original.size());
}

}  // namespace bsattack
