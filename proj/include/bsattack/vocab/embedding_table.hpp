#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tensor.hpp>
#include <bsattack/vocab/vocabulary.hpp>

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace bsattack {

/// Read-only view of a |V| x d embedding matrix: the discrete set of points
/// the attack projects onto. Row norms are cached at construction.
///
/// The matrix is held through a shared pointer to const, so a table built
/// from a model's parameters aliases (and keeps alive) the model's own
/// storage rather than a copy.
template <class T>
class EmbeddingTable {
 public:
  static constexpr double kMinNorm = 1e-8;

  explicit EmbeddingTable(std::shared_ptr<const Tensor<T>> matrix,
                          std::vector<TokenId> specials = {Vocabulary::kUnk, Vocabulary::kPad})
      : matrix_(std::move(matrix)) {
    if (!matrix_ || matrix_->rank() != 2 || matrix_->rows() == 0) {
      throw ShapeError("embedding table: expected a non-empty |V| x d matrix");
    }
    candidate_.assign(matrix_->rows(), true);
    for (TokenId s : specials) {
      if (s < candidate_.size()) candidate_[s] = false;
    }
    norms_.resize(matrix_->rows());
    for (std::size_t r = 0; r < matrix_->rows(); ++r) {
      norms_[r] = norm(matrix_->row(r));
      if (candidate_[r] && !(norms_[r] > kMinNorm)) {
        throw InvalidArgument("embedding table: row " + std::to_string(r) +
                              " has zero norm");
      }
    }
  }

  const Tensor<T>& matrix() const { return *matrix_; }
  const std::shared_ptr<const Tensor<T>>& shared_matrix() const { return matrix_; }
  std::size_t size() const { return matrix_->rows(); }
  std::size_t dim() const { return matrix_->cols(); }
  double row_norm(TokenId id) const { return norms_.at(id); }
  bool is_candidate(TokenId id) const { return candidate_.at(id); }
  std::span<const T> row(TokenId id) const { return matrix_->row(id); }

  /// Token whose embedding has the largest cosine similarity with `query`,
  /// among non-special tokens not in `exclude`. Ties go to the lowest id.
  TokenId project_nearest(std::span<const T> query,
                          const std::unordered_set<TokenId>& exclude = {}) const {
    if (query.size() != dim()) {
      throw ShapeError("project_nearest: query has " + std::to_string(query.size()) +
                       " entries, table dim is " + std::to_string(dim()));
    }
    const double qnorm = norm(query);
    if (!(qnorm > kMinNorm)) throw InvalidArgument("project_nearest: zero-norm query");
    bool found = false;
    TokenId best = 0;
    double best_score = 0.0;
    for (std::size_t r = 0; r < size(); ++r) {
      if (!candidate_[r] || exclude.contains(static_cast<TokenId>(r))) continue;
      const auto row = matrix_->row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) {
        dot += static_cast<double>(row[c]) * static_cast<double>(query[c]);
      }
      const double score = dot / (norms_[r] * qnorm);
      if (!found || score > best_score) {
        found = true;
        best = static_cast<TokenId>(r);
        best_score = score;
      }
    }
    if (!found) throw InvalidArgument("project_nearest: empty candidate set");
    return best;
  }

  /// Candidate tokens that do not project onto themselves. Empty for a
  /// well-formed table.
  std::vector<TokenId> self_projection_violations() const {
    std::vector<TokenId> bad;
    for (std::size_t r = 0; r < size(); ++r) {
      if (!candidate_[r]) continue;
      if (project_nearest(matrix_->row(r)) != r) bad.push_back(static_cast<TokenId>(r));
    }
    return bad;
  }

  void verify_self_projection() const {
    const auto bad = self_projection_violations();
    if (!bad.empty()) {
      throw InvalidArgument("embedding table: " + std::to_string(bad.size()) +
                            " rows are not their own nearest neighbour (first: " +
                            std::to_string(bad.front()) + ")");
    }
  }

 private:
  static double norm(std::span<const T> v) {
    double ss = 0.0;
    for (T x : v) ss += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(ss);
  }

  std::shared_ptr<const Tensor<T>> matrix_;
  std::vector<double> norms_;
  std::vector<bool> candidate_;
};

/// n x d matrix whose row i is the embedding of seq[i].
template <class T>
Tensor<T> embed_sequence(const TokenSequence& seq, const EmbeddingTable<T>& table) {
  Tensor<T> out(Shape{seq.size(), table.dim()});
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.ids[i] >= table.size()) {
      throw InvalidArgument("embed_sequence: token id " + std::to_string(seq.ids[i]) +
                            " out of range");
    }
    const auto src = table.row(seq.ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Row-wise projection of an n x d matrix.
template <class T>
TokenSequence project_rows(const Tensor<T>& embeddings, const EmbeddingTable<T>& table) {
  TokenSequence seq;
  seq.ids.reserve(embeddings.rows());
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    seq.ids.push_back(table.project_nearest(embeddings.row(r)));
  }
  return seq;
}

}  // namespace bsattack
