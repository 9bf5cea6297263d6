#pragma once

#include <bsattack/attack/losses.hpp>
#include <bsattack/errors.hpp>
#include <bsattack/harness/metrics.hpp>
#include <bsattack/model/classifier.hpp>
#include <bsattack/numerics/adam.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>
#include <bsattack/vocab/embedding_table.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace bsattack {

struct AttackConfig {
  /// Base sparsity weights, tried in order; each is divided by the sentence
  /// length when used.
  std::vector<double> alpha_schedule{10.0, 8.0, 5.0, 2.0};
  std::vector<double> lr_schedule{0.15, 0.3};
  /// Total gradient-projection steps for one input. Each schedule point
  /// gets an even share of what is left when it starts.
  std::size_t max_iterations = 500;
  double similarity_threshold = 0.8;
  std::uint64_t seed = 0;

  void validate() const {
    if (alpha_schedule.empty()) throw InvalidArgument("attack config: empty alpha schedule");
    for (std::size_t i = 0; i < alpha_schedule.size(); ++i) {
      if (!(alpha_schedule[i] > 0.0)) throw InvalidArgument("attack config: alpha must be positive");
      if (i > 0 && !(alpha_schedule[i] < alpha_schedule[i - 1])) {
        throw InvalidArgument("attack config: alpha schedule must be strictly decreasing");
      }
    }
    if (lr_schedule.empty()) throw InvalidArgument("attack config: empty learning-rate schedule");
    for (double lr : lr_schedule) {
      if (!(lr > 0.0)) throw InvalidArgument("attack config: learning rates must be positive");
    }
    if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0)) {
      throw InvalidArgument("attack config: similarity threshold must lie in [0, 1]");
    }
  }
};

enum class AttackStatus {
  kSucceeded,
  kExhaustedBudget,
  kBelowSimilarityThreshold,
  kSkippedMisclassified,
};

inline std::string_view status_name(AttackStatus s) {
  switch (s) {
    case AttackStatus::kSucceeded: return "succeeded";
    case AttackStatus::kExhaustedBudget: return "exhausted-budget";
    case AttackStatus::kBelowSimilarityThreshold: return "below-similarity-threshold";
    case AttackStatus::kSkippedMisclassified: return "skipped-already-misclassified";
  }
  return "unknown";
}

inline AttackStatus parse_status(std::string_view s) {
  for (auto st : {AttackStatus::kSucceeded, AttackStatus::kExhaustedBudget,
                  AttackStatus::kBelowSimilarityThreshold, AttackStatus::kSkippedMisclassified}) {
    if (status_name(st) == s) return st;
  }
  throw FormatError("unknown attack status '" + std::string(s) + "'");
}

struct AttackResult {
  AttackStatus status = AttackStatus::kExhaustedBudget;
  bool success = false;
  TokenSequence original;
  TokenSequence adversarial;
  std::size_t label = 0;
  std::size_t adversarial_prediction = 0;
  std::size_t iterations = 0;
  std::size_t accepted = 0;     // steps whose projection was new
  std::size_t buffer_size = 0;  // distinct projected sentences seen
  double alpha = 0.0;           // effective weight (base / n)
  double lr = 0.0;
  double adversarial_loss = 0.0;
  double similarity = 1.0;
  double token_error_rate = 0.0;
};

/// Iterate of the gradient-projection loop.
template <class T>
struct AttackState {
  Tensor<T> continuous;     // current point in embedding space
  TokenSequence projected;  // last accepted projection
  std::set<std::vector<TokenId>> buffer;
  std::size_t iterations = 0;
  std::size_t max_iterations = 0;
  std::size_t accepted = 0;
  AdamState<T> adam;

  /// Starts at the original sentence, which is pre-seeded into the buffer.
  static AttackState start(const TokenSequence& original, const Tensor<T>& original_embeddings,
                           std::size_t max_iterations) {
    AttackState s;
    s.continuous = original_embeddings;
    s.projected = original;
    s.buffer.insert(original.ids);
    s.max_iterations = max_iterations;
    s.adam = AdamState<T>(original_embeddings.shape());
    return s;
  }
};

/// One gradient step on the objective followed by projection onto the
/// vocabulary. Returns true if the projected sentence was new, in which case
/// the iterate jumps to its embeddings; otherwise the continuous iterate is
/// kept so the next step can move further.
template <Classifier M>
bool attack_step(AttackState<typename M::scalar_type>& state, const M& model,
                 const Tensor<typename M::scalar_type>& original, std::size_t y, double alpha,
                 double lr) {
  using T = typename M::scalar_type;
  if (state.iterations >= state.max_iterations) {
    throw InvalidArgument("attack_step: iteration budget exhausted");
  }
  Tensor<T> grad;
  {
    Tape<T> tape;
    const Var current = tape.ref(state.continuous, true);
    const Var obj = objective(tape, model, tape.ref(original), current, y, alpha);
    tape.backward(obj);
    grad = tape.grad(current);
  }
  if (!grad.all_finite()) {
    throw NonFiniteError("attack_step: non-finite objective gradient at iteration " +
                         std::to_string(state.iterations));
  }
  adam_step(state.continuous, grad, state.adam, lr);
  ++state.iterations;

  const EmbeddingTable<T>& table = model.embedding_table();
  TokenSequence candidate = project_rows(state.continuous, table);
  if (!state.buffer.insert(candidate.ids).second) return false;
  state.continuous = embed_sequence(candidate, table);
  state.projected = std::move(candidate);
  ++state.accepted;
  return true;
}

namespace detail {

template <Classifier M>
void fill_outcome(AttackResult& r, const M& model, const TokenSequence& adversarial) {
  const auto& table = model.embedding_table();
  const auto emb = embed_sequence(adversarial, table);
  r.adversarial = adversarial;
  r.adversarial_prediction = predict(model, emb);
  r.adversarial_loss = static_cast<double>(adv_loss(model, emb, r.label));
  r.similarity = similarity_proxy(r.original, adversarial, table);
  r.token_error_rate = token_error_rate(r.original, adversarial);
}

}  // namespace detail

/// Untargeted block-sparse attack on `x` with true class `y`.
///
/// Schedule points run learning rates in the given order (outer) and alpha
/// values in decreasing order (inner). At each point the Adam state is reset
/// and steps continue until the projected sentence is misclassified or the
/// point's share of the budget runs out. A point's share is the remaining
/// budget divided by the number of points left, so the total never exceeds
/// `max_iterations`. A misclassified sentence below the similarity
/// threshold counts as a failure; the iterate then restarts from `x` at the
/// next schedule point.
template <Classifier M>
AttackResult run_attack(const M& model, const TokenSequence& x, std::size_t y,
                        const AttackConfig& cfg) {
  using T = typename M::scalar_type;
  cfg.validate();
  if (x.empty()) throw InvalidArgument("run_attack: empty token sequence");
  check_sequence_length(model, x.size());
  check_label(model, y);

  const EmbeddingTable<T>& table = model.embedding_table();
  const Tensor<T> original = embed_sequence(x, table);
  const double n = static_cast<double>(x.size());

  AttackResult result;
  result.original = x;
  result.label = y;
  result.alpha = cfg.alpha_schedule.front() / n;
  result.lr = cfg.lr_schedule.front();

  if (predict(model, original) != y) {
    result.status = AttackStatus::kSkippedMisclassified;
    detail::fill_outcome(result, model, x);
    result.buffer_size = 1;
    return result;
  }

  AttackState<T> state = AttackState<T>::start(x, original, cfg.max_iterations);
  std::optional<AttackResult> best_failure;
  bool restart = false;

  std::size_t points_left = cfg.lr_schedule.size() * cfg.alpha_schedule.size();
  for (double lr : cfg.lr_schedule) {
    for (double base : cfg.alpha_schedule) {
      if (state.iterations >= state.max_iterations) break;
      // Fair share of what is left; unused iterations carry forward.
      const std::size_t share = (state.max_iterations - state.iterations) / points_left--;
      const std::size_t point_end = state.iterations + std::max<std::size_t>(share, 1);
      const double alpha = base / n;
      if (restart) {
        state.continuous = original;
        state.projected = x;
        restart = false;
      }
      state.adam.reset();
      result.alpha = alpha;
      result.lr = lr;

      std::size_t prediction = predict(model, embed_sequence(state.projected, table));
      while (prediction == y && state.iterations < point_end) {
        if (attack_step(state, model, original, y, alpha, lr)) {
          prediction = predict(model, embed_sequence(state.projected, table));
        }
      }
      if (prediction == y) continue;

      AttackResult found = result;
      detail::fill_outcome(found, model, state.projected);
      found.iterations = state.iterations;
      found.accepted = state.accepted;
      found.buffer_size = state.buffer.size();
      // A fresh forward pass must agree before success is reported.
      if (found.adversarial_prediction != y &&
          found.similarity >= cfg.similarity_threshold) {
        found.status = AttackStatus::kSucceeded;
        found.success = true;
        return found;
      }
      found.status = AttackStatus::kBelowSimilarityThreshold;
      if (!best_failure || found.similarity > best_failure->similarity) best_failure = found;
      restart = true;
    }
  }

  if (best_failure) {
    best_failure->iterations = state.iterations;
    best_failure->accepted = state.accepted;
    best_failure->buffer_size = state.buffer.size();
    return *best_failure;
  }
  result.status = AttackStatus::kExhaustedBudget;
  detail::fill_outcome(result, model, state.projected);
  result.iterations = state.iterations;
  result.accepted = state.accepted;
  result.buffer_size = state.buffer.size();
  return result;
}

}  // namespace bsattack
