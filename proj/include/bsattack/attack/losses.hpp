#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/model/classifier.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>

#include <cmath>

namespace bsattack {

// Tape builders: these record the terms so the attack can differentiate them
// with respect to the perturbed embeddings.

/// Negative cross-entropy of the model at `perturbed` against class `y`.
template <Classifier M>
Var adv_loss(Tape<typename M::scalar_type>& tape, const M& model, Var perturbed, std::size_t y) {
  check_label(model, y);
  return tape.neg(tape.cross_entropy(model.logits(tape, perturbed), y));
}

/// Sum of row l2 norms of a perturbation matrix.
template <class T>
Var block_sparse_loss(Tape<T>& tape, Var perturbation) {
  return tape.sum(tape.row_norms(perturbation));
}

/// adv_loss(perturbed) + alpha * block_sparse_loss(perturbed - original).
template <Classifier M>
Var objective(Tape<typename M::scalar_type>& tape, const M& model, Var original, Var perturbed,
              std::size_t y, double alpha) {
  using T = typename M::scalar_type;
  if (!(alpha >= 0.0)) throw InvalidArgument("objective: alpha must be non-negative");
  if (tape.value(original).shape() != tape.value(perturbed).shape()) {
    throw ShapeError("objective: original " + shape_string(tape.value(original).shape()) +
                     " and perturbed " + shape_string(tape.value(perturbed).shape()) +
                     " differ in shape");
  }
  const Var adv = adv_loss(tape, model, perturbed, y);
  const Var sparse = block_sparse_loss(tape, tape.sub(perturbed, original));
  return tape.add(adv, tape.scale(sparse, static_cast<T>(alpha)));
}

// Value-level wrappers.

template <Classifier M>
typename M::scalar_type adv_loss(const M& model, const Tensor<typename M::scalar_type>& perturbed,
                                 std::size_t y) {
  check_sequence_length(model, perturbed.rows());
  Tape<typename M::scalar_type> tape;
  return tape.value(adv_loss(tape, model, tape.ref(perturbed), y)).item();
}

template <class T>
T block_sparse_loss(const Tensor<T>& perturbation) {
  Tape<T> tape;
  return tape.value(block_sparse_loss(tape, tape.ref(perturbation))).item();
}

template <Classifier M>
typename M::scalar_type objective(const M& model, const Tensor<typename M::scalar_type>& original,
                                  const Tensor<typename M::scalar_type>& perturbed, std::size_t y,
                                  double alpha) {
  check_sequence_length(model, perturbed.rows());
  Tape<typename M::scalar_type> tape;
  return tape
      .value(objective(tape, model, tape.ref(original), tape.ref(perturbed), y, alpha))
      .item();
}

}  // namespace bsattack
