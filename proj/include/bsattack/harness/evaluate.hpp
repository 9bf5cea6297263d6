#pragma once

#include <bsattack/attack/attack.hpp>
#include <bsattack/errors.hpp>
#include <bsattack/harness/dataset.hpp>
#include <bsattack/harness/metrics.hpp>
#include <bsattack/model/classifier.hpp>
#include <bsattack/vocab/vocabulary.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bsattack {

struct ReportRow {
  std::size_t index = 0;  // position in the dataset
  AttackResult result;
};

struct ReportAggregates {
  std::size_t examples = 0;       // attackable examples in the dataset
  std::size_t evaluated = 0;      // initially classified correctly
  std::size_t succeeded = 0;
  double clean_accuracy = 0.0;
  double after_attack_accuracy = 0.0;
  double success_rate = 0.0;
  double mean_similarity = 0.0;        // over successful rows
  double mean_token_error_rate = 0.0;  // over successful rows
  double mean_iterations = 0.0;        // over evaluated rows
  bool degenerate = false;             // nothing to evaluate

  friend bool operator==(const ReportAggregates&, const ReportAggregates&) = default;
};

struct AttackReport {
  std::vector<ReportRow> rows;
  std::size_t unattackable = 0;  // empty after tokenization
  AttackConfig config;
  std::string similarity_function = std::string(kSimilarityFunction);
  ReportAggregates aggregates;
};

/// Recomputes aggregates from per-row records. Skipped rows count toward the
/// clean-accuracy denominator only.
inline ReportAggregates compute_aggregates(const std::vector<ReportRow>& rows) {
  ReportAggregates a;
  a.examples = rows.size();
  double sim = 0.0, ter = 0.0, iters = 0.0;
  for (const auto& row : rows) {
    const AttackResult& r = row.result;
    if (r.status == AttackStatus::kSkippedMisclassified) continue;
    ++a.evaluated;
    iters += static_cast<double>(r.iterations);
    if (r.success) {
      ++a.succeeded;
      sim += r.similarity;
      ter += r.token_error_rate;
    }
  }
  a.degenerate = a.evaluated == 0;
  if (a.examples > 0) {
    a.clean_accuracy = static_cast<double>(a.evaluated) / static_cast<double>(a.examples);
  }
  if (a.evaluated > 0) {
    const double ev = static_cast<double>(a.evaluated);
    a.after_attack_accuracy = static_cast<double>(a.evaluated - a.succeeded) / ev;
    a.success_rate = static_cast<double>(a.succeeded) / ev;
    a.mean_iterations = iters / ev;
  }
  if (a.succeeded > 0) {
    a.mean_similarity = sim / static_cast<double>(a.succeeded);
    a.mean_token_error_rate = ter / static_cast<double>(a.succeeded);
  }
  return a;
}

/// Attacks every example of `dataset`. Examples the model already
/// misclassifies are recorded as skipped. Work is spread over `threads`
/// workers; rows are always ordered by example index.
template <Classifier M>
AttackReport evaluate_attack(const M& model, const Vocabulary& vocab, const LabeledDataset& dataset,
                             const AttackConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  if (dataset.empty()) throw InvalidArgument("evaluate_attack: empty dataset");
  const auto sequences = tokenize_dataset(dataset, vocab, model.max_length());

  std::vector<std::size_t> todo;
  AttackReport report;
  report.config = cfg;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].tokens.empty()) {
      ++report.unattackable;
    } else {
      if (sequences[i].label >= model.num_classes()) {
        throw InvalidArgument("evaluate_attack: label out of range at example " + std::to_string(i));
      }
      todo.push_back(i);
    }
  }

  std::vector<ReportRow> rows(todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      try {
        const auto& ex = sequences[todo[k]];
        rows[k] = {todo[k], run_attack(model, ex.tokens, ex.label, cfg)};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = todo.size();
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  report.rows = std::move(rows);
  report.aggregates = compute_aggregates(report.rows);
  return report;
}

struct SweepRow {
  double alpha = 0.0;  // base value; divided by sentence length at use
  double adv_accuracy = 0.0;
  double mean_similarity = 0.0;
  double mean_token_error_rate = 0.0;
  ReportAggregates aggregates;
};

/// One single-point evaluation per alpha at a fixed learning rate.
template <Classifier M>
std::vector<SweepRow> sweep_alpha(const M& model, const Vocabulary& vocab, const LabeledDataset& dataset,
                                  const std::vector<double>& alphas, double lr,
                                  AttackConfig base = {}, unsigned threads = 1) {
  if (alphas.empty()) throw InvalidArgument("sweep_alpha: no alpha values");
  std::vector<SweepRow> out;
  for (double alpha : alphas) {
    AttackConfig cfg = base;
    cfg.alpha_schedule = {alpha};
    cfg.lr_schedule = {lr};
    const AttackReport report = evaluate_attack(model, vocab, dataset, cfg, threads);
    const auto& a = report.aggregates;
    out.push_back({alpha, a.after_attack_accuracy, a.mean_similarity, a.mean_token_error_rate, a});
  }
  return out;
}

}  // namespace bsattack
