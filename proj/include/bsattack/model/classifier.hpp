#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>
#include <bsattack/vocab/embedding_table.hpp>

#include <concepts>
#include <cstddef>
#include <span>
#include <string>

namespace bsattack {

/// A text classifier that consumes an n x d sequence of input embeddings and
/// whose discrete input space is its own embedding table.
template <class M>
concept Classifier = requires(const M& m, Tape<typename M::scalar_type>& tape, Var v) {
  typename M::scalar_type;
  { m.logits(tape, v) } -> std::same_as<Var>;
  { m.embedding_table() } -> std::same_as<const EmbeddingTable<typename M::scalar_type>&>;
  { m.num_classes() } -> std::convertible_to<std::size_t>;
  { m.max_length() } -> std::convertible_to<std::size_t>;
};

template <class T>
std::size_t argmax_class(std::span<const T> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

template <Classifier M>
void check_sequence_length(const M& model, std::size_t n) {
  if (n == 0) throw InvalidArgument("classifier: empty input sequence");
  if (n > model.max_length()) {
    throw InvalidArgument("classifier: sequence length " + std::to_string(n) +
                          " exceeds maximum " + std::to_string(model.max_length()));
  }
}

template <Classifier M>
Tensor<typename M::scalar_type> forward_logits(
    const M& model, const Tensor<typename M::scalar_type>& embeddings) {
  check_sequence_length(model, embeddings.rows());
  Tape<typename M::scalar_type> tape;
  const Var out = model.logits(tape, tape.ref(embeddings));
  return tape.value(out);
}

/// Predicted class; ties resolve to the lowest class id.
template <Classifier M>
std::size_t predict(const M& model, const Tensor<typename M::scalar_type>& embeddings) {
  const auto logits = forward_logits(model, embeddings);
  return argmax_class(logits.data());
}

template <Classifier M>
void check_label(const M& model, std::size_t y) {
  if (y >= model.num_classes()) {
    throw InvalidArgument("classifier: label " + std::to_string(y) + " outside 0.." +
                          std::to_string(model.num_classes() - 1));
  }
}

/// Cross-entropy of the model's prediction against class `y`.
template <Classifier M>
typename M::scalar_type loss(const M& model,
                             const Tensor<typename M::scalar_type>& embeddings,
                             std::size_t y) {
  check_label(model, y);
  check_sequence_length(model, embeddings.rows());
  Tape<typename M::scalar_type> tape;
  const Var ce = tape.cross_entropy(model.logits(tape, tape.ref(embeddings)), y);
  return tape.value(ce).item();
}

/// Gradient of the cross-entropy loss with respect to the input embeddings
/// only (n x d). Model weights are treated as constants.
template <Classifier M>
Tensor<typename M::scalar_type> input_gradient(
    const M& model, const Tensor<typename M::scalar_type>& embeddings, std::size_t y) {
  check_label(model, y);
  check_sequence_length(model, embeddings.rows());
  Tape<typename M::scalar_type> tape;
  const Var input = tape.ref(embeddings, true);
  const Var ce = tape.cross_entropy(model.logits(tape, input), y);
  tape.backward(ce);
  return tape.grad(input);
}

}  // namespace bsattack
