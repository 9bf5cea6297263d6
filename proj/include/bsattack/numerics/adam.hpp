#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tensor.hpp>

#include <cmath>
#include <cstdint>
#include <string>

namespace bsattack {

template <class T>
struct AdamState {
  Tensor<T> first_moment;
  Tensor<T> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const Shape& shape) : first_moment(shape), second_moment(shape) {}

  void reset() {
    first_moment.fill(T{0});
    second_moment.fill(T{0});
    step = 0;
  }
};

/// One bias-corrected Adam update of `params` in place. A gradient with any
/// non-finite entry is rejected with NonFiniteError before anything changes.
template <class T>
void adam_step(Tensor<T>& params, const Tensor<T>& grads, AdamState<T>& state,
               double lr) {
  if (params.shape() != grads.shape() ||
      params.shape() != state.first_moment.shape() ||
      params.shape() != state.second_moment.shape()) {
    throw ShapeError("adam_step: params " + shape_string(params.shape()) +
                     ", grads " + shape_string(grads.shape()) + ", moments " +
                     shape_string(state.first_moment.shape()));
  }
  if (!(lr > 0.0)) throw InvalidArgument("adam_step: lr must be positive");
  if (!grads.all_finite()) throw NonFiniteError("adam_step: non-finite gradient");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto p = params.data();
  const auto g = grads.data();
  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    const double mi = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
    const double vi = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / correction1;
    const double v_hat = vi / correction2;
    p[i] = static_cast<T>(p[i] - lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
  }
}

}  // namespace bsattack
