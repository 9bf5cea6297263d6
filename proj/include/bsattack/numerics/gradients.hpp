#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bsattack {

/// A computation over tape variables: receives one leaf per input and
/// returns the output variable.
template <class Fn, class T>
concept TapeFunction = requires(Fn fn, Tape<T>& tape, std::span<const Var> in) {
  { fn(tape, in) } -> std::convertible_to<Var>;
};

template <class T>
struct Evaluation {
  Tensor<T> value;
  std::vector<Tensor<T>> gradients;  // one per input, same shapes
};

/// Runs `fn` once on a fresh tape and returns its value together with the
/// gradient of the (scalar) output with respect to every input.
template <class T, TapeFunction<T> Fn>
Evaluation<T> evaluate_with_gradients(Fn&& fn, std::span<const Tensor<T>> inputs) {
  Tape<T> tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor<T>& in : inputs) vars.push_back(tape.ref(in, true));
  const Var out = fn(tape, std::span<const Var>(vars));
  tape.backward(out);
  Evaluation<T> result{tape.value(out), {}};
  result.gradients.reserve(vars.size());
  for (Var v : vars) result.gradients.push_back(tape.grad(v));
  return result;
}

/// Scalar value of `fn` without recording gradients.
template <class T, TapeFunction<T> Fn>
T evaluate_scalar(Fn&& fn, std::span<const Tensor<T>> inputs) {
  Tape<T> tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor<T>& in : inputs) vars.push_back(tape.ref(in, false));
  return tape.value(fn(tape, std::span<const Var>(vars))).item();
}

struct GradCheckResult {
  bool valid = true;          // false if fn was not deterministic
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string message;

  bool passed(double tolerance) const { return valid && max_rel_error < tolerance; }
};

/// Compares reverse-mode gradients of a scalar `fn` against central
/// differences on `samples` coordinates drawn uniformly (without
/// replacement) from all inputs. Error per coordinate is
/// |analytic - numeric| / max(1, |numeric|).
template <TapeFunction<double> Fn>
GradCheckResult grad_check(Fn&& fn, std::vector<Tensor<double>> inputs,
                           std::size_t samples, double h, std::uint64_t seed = 0) {
  if (!(h >= 1e-6 && h <= 1e-2)) {
    throw InvalidArgument("grad_check: step h must lie in [1e-6, 1e-2], got " +
                          std::to_string(h));
  }
  GradCheckResult result;

  const auto base = evaluate_with_gradients<double>(fn, std::span<const Tensor<double>>(inputs));
  if (base.value.size() != 1) {
    throw ShapeError("grad_check: function must return a scalar, got " +
                     shape_string(base.value.shape()));
  }
  const double repeat = evaluate_scalar<double>(fn, std::span<const Tensor<double>>(inputs));
  if (repeat != base.value.item()) {
    result.valid = false;
    result.message = "function is not deterministic across evaluations";
    return result;
  }

  struct Coord {
    std::size_t input, offset;
  };
  std::vector<Coord> all;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = 0; j < inputs[i].size(); ++j) all.push_back({i, j});

  std::mt19937_64 rng(seed);
  if (samples < all.size()) {
    // partial Fisher-Yates
    for (std::size_t i = 0; i < samples; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(samples);
  }

  for (const Coord& c : all) {
    double& x = inputs[c.input][c.offset];
    const double saved = x;
    x = saved + h;
    const double plus = evaluate_scalar<double>(fn, std::span<const Tensor<double>>(inputs));
    x = saved - h;
    const double minus = evaluate_scalar<double>(fn, std::span<const Tensor<double>>(inputs));
    x = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double analytic = base.gradients[c.input][c.offset];
    const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
    result.max_rel_error = std::max(result.max_rel_error, err);
  }
  result.coordinates = all.size();
  return result;
}

}  // namespace bsattack
