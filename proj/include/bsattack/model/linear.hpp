#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>
#include <bsattack/vocab/embedding_table.hpp>

#include <memory>
#include <string>

namespace bsattack {

/// Bag-of-embeddings linear classifier: logits = mean_i(e_i) W + b.
/// Small enough that its decision over short sentences can be enumerated.
template <class T>
class LinearClassifier {
 public:
  using scalar_type = T;

  LinearClassifier(Tensor<T> embeddings, Tensor<T> weights, Tensor<T> bias,
                   std::size_t max_length = 64)
      : table_(std::make_shared<const Tensor<T>>(std::move(embeddings))),
        weights_(std::move(weights)),
        bias_(std::move(bias)),
        max_length_(max_length) {
    if (weights_.rank() != 2 || weights_.rows() != table_.dim() || weights_.cols() < 2) {
      throw ShapeError("linear classifier: weights " + shape_string(weights_.shape()) +
                       " must be d x C with C >= 2");
    }
    if (bias_.size() != weights_.cols()) {
      throw ShapeError("linear classifier: bias must have C entries");
    }
    table_.verify_self_projection();
  }

  const EmbeddingTable<T>& embedding_table() const { return table_; }
  std::size_t num_classes() const { return weights_.cols(); }
  std::size_t max_length() const { return max_length_; }
  const Tensor<T>& weights() const { return weights_; }
  const Tensor<T>& bias() const { return bias_; }

  Var logits(Tape<T>& tape, Var embeddings) const {
    const Tensor<T>& e = tape.value(embeddings);
    if (e.rank() != 2 || e.cols() != table_.dim() || e.rows() == 0) {
      throw ShapeError("linear classifier: bad embeddings " + shape_string(e.shape()));
    }
    const std::size_t n = e.rows();
    Tensor<T> pool(Shape{1, n}, T{1} / static_cast<T>(n));
    const Var pooled = tape.matmul(tape.constant(std::move(pool)), embeddings);
    return tape.add_row(tape.matmul(pooled, tape.ref(weights_)), tape.ref(bias_));
  }

 private:
  EmbeddingTable<T> table_;
  Tensor<T> weights_;
  Tensor<T> bias_;
  std::size_t max_length_;
};

}  // namespace bsattack
