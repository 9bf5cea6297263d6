#pragma once

#include <bsattack/bsattack.hpp>

#include <random>

namespace bsattack::testing {

template <class T = double>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

inline TransformerConfig tiny_config(std::size_t vocab_size = 12) {
  TransformerConfig c;
  c.vocab_size = vocab_size;
  c.dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.ffn_dim = 16;
  c.max_length = 8;
  c.classes = 2;
  return c;
}

/// Random model with weights large enough that every path carries signal.
template <class T = double>
TransformerClassifier<T> random_model(const TransformerConfig& c, std::uint64_t seed) {
  InitConfig init;
  init.weight_std = 0.3;
  init.embedding_std = 1.0;
  init.seed = seed;
  auto model = TransformerClassifier<T>::initialize(c, init);
  // Perturb gains and biases away from 1 and 0.
  std::mt19937_64 rng(seed + 1000);
  ParameterSet<T> params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rank() != 1) continue;
    std::normal_distribution<double> d(0.0, 0.2);
    for (T& v : params[i].data()) v += static_cast<T>(d(rng));
  }
  return TransformerClassifier<T>(c, std::move(params));
}

inline TokenSequence seq(std::initializer_list<TokenId> ids) { return TokenSequence{std::vector<TokenId>(ids)}; }

}  // namespace bsattack::testing
