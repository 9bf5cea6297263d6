#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/model/transformer.hpp>
#include <bsattack/numerics/adam.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/vocab/vocabulary.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bsattack {

struct LabeledSequence {
  TokenSequence tokens;
  std::size_t label = 0;
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 5e-3;
  /// Mass moved from the label to a uniform target. Keeps the trained model
  /// from saturating its softmax.
  double label_smoothing = 0.2;
  std::uint64_t seed = 1;
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

template <class T>
struct TrainResult {
  TransformerClassifier<T> model;
  TrainHistory history;
};

/// Mini-batch Adam training on cross-entropy. Examples are processed one at a
/// time (no padding) and their gradients summed per batch; batch order is
/// drawn from `cfg.seed`, so a run is bit-reproducible.
template <class T>
TrainResult<T> train(const TransformerClassifier<T>& model,
                     std::span<const LabeledSequence> dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  if (cfg.batch_size == 0 || !(cfg.learning_rate > 0.0)) {
    throw InvalidArgument("train: batch size and learning rate must be positive");
  }
  if (!(cfg.label_smoothing >= 0.0 && cfg.label_smoothing < 1.0)) {
    throw InvalidArgument("train: label smoothing must lie in [0, 1)");
  }
  const TransformerConfig& config = model.config();
  for (const LabeledSequence& ex : dataset) {
    if (ex.label >= config.classes) {
      throw InvalidArgument("train: label " + std::to_string(ex.label) + " out of range");
    }
    for (TokenId id : ex.tokens.ids) {
      if (id >= config.vocab_size) throw InvalidArgument("train: token id out of range");
    }
  }

  ParameterSet<T> params = model.parameters();
  std::vector<AdamState<T>> adam;
  ParameterSet<T> grads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam.emplace_back(params[i].shape());
    grads.add(params.name(i), Tensor<T>(params[i].shape()));
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainHistory history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = 0; i < grads.size(); ++i) grads[i].fill(T{0});
      std::size_t batch_count = 0;
      for (std::size_t j = start; j < end; ++j) {
        const LabeledSequence& ex = dataset[order[j]];
        if (ex.tokens.empty()) continue;
        const std::size_t n = std::min<std::size_t>(ex.tokens.size(), config.max_length);
        std::span<const std::uint32_t> ids(ex.tokens.ids.data(), n);

        Tape<T> tape;
        std::vector<Var> vars;
        vars.reserve(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(tape.ref(params[i], true));
        const Var logits = model.logits_from_ids(tape, vars, ids);
        Var ce = tape.cross_entropy(logits, ex.label);
        if (cfg.label_smoothing > 0.0) {
          // (1 - eps) CE(y) + eps/C sum_c CE(c)
          const T eps = static_cast<T>(cfg.label_smoothing);
          Var spread = tape.cross_entropy(logits, 0);
          for (std::size_t c = 1; c < config.classes; ++c) {
            spread = tape.add(spread, tape.cross_entropy(logits, c));
          }
          ce = tape.add(tape.scale(ce, T{1} - eps),
                        tape.scale(spread, eps / static_cast<T>(config.classes)));
        }
        tape.backward(ce);

        loss_sum += static_cast<double>(tape.value(ce).item());
        correct += argmax_class(tape.value(logits).data()) == ex.label ? 1 : 0;
        ++seen;
        ++batch_count;
        for (std::size_t i = 0; i < params.size(); ++i) {
          const Tensor<T> g = tape.grad(vars[i]);
          auto dst = grads[i].data();
          const auto src = g.data();
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
      }
      if (batch_count == 0) continue;
      const T inv = T{1} / static_cast<T>(batch_count);
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (T& g : grads[i].data()) g *= inv;
        adam_step(params[i], grads[i], adam[i], cfg.learning_rate);
      }
    }
    history.epochs.push_back({seen ? loss_sum / static_cast<double>(seen) : 0.0,
                              seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0});
  }
  return {TransformerClassifier<T>(config, std::move(params)), std::move(history)};
}

/// Fraction of examples whose predicted class equals the label.
template <class T>
double accuracy(const TransformerClassifier<T>& model, std::span<const LabeledSequence> dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledSequence& ex : dataset) {
    const std::size_t n = std::min<std::size_t>(ex.tokens.size(), model.max_length());
    if (n == 0) continue;
    TokenSequence seq{std::vector<TokenId>(ex.tokens.ids.begin(), ex.tokens.ids.begin() + n)};
    correct += predict(model, embed_sequence(seq, model.embedding_table())) == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace bsattack
