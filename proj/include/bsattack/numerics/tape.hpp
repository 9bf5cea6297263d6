#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tensor.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bsattack {

/// Handle to a value recorded on a Tape. Only meaningful for the tape that
/// produced it.
struct Var {
  std::uint32_t index = 0;
};

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRow,
  kMatMul,
  kMatMulNT,
  kSliceRows,
  kSliceCols,
  kConcatCols,
  kSoftmaxRows,
  kLayerNormRows,
  kGelu,
  kRelu,
  kGather,
  kCrossEntropy,
  kRowNorms,
  kSum,
  kCount
};

inline const char* op_name(Op op) {
  static constexpr std::array<const char*, static_cast<std::size_t>(Op::kCount)>
      kNames = {"leaf",       "add",          "sub",         "mul",
                "scale",      "add_row",      "matmul",      "matmul_nt",
                "slice_rows", "slice_cols",   "concat_cols", "softmax_rows",
                "layer_norm", "gelu",         "relu",        "gather_rows",
                "cross_entropy", "row_norms", "sum"};
  return kNames[static_cast<std::size_t>(op)];
}

/// Reverse-mode gradient tape over a fixed set of primitives.
///
/// Every primitive evaluates eagerly, so `value()` of any node is exactly the
/// plain forward result. Gradients are accumulated by `backward()` into
/// every node that (transitively) depends on a leaf marked differentiable.
/// A tape is single-use and confined to one thread.
template <class T>
class Tape {
 public:
  Tape() { backward_scale_.fill(T{1}); }

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ---- leaves ------------------------------------------------------------

  Var leaf(Tensor<T> value, bool requires_grad = true) {
    Node node;
    node.op = Op::kLeaf;
    node.owned = std::move(value);
    node.requires_grad = requires_grad;
    return push(std::move(node));
  }

  Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Non-owning leaf; `value` must outlive the tape.
  Var ref(const Tensor<T>& value, bool requires_grad = false) {
    Node node;
    node.op = Op::kLeaf;
    node.external = &value;
    node.requires_grad = requires_grad;
    return push(std::move(node));
  }

  const Tensor<T>& value(Var v) const { return nodes_.at(v.index).value(); }

  bool requires_grad(Var v) const { return nodes_.at(v.index).requires_grad; }

  /// Gradient accumulated by the last backward(); zeros if `v` was not
  /// reached.
  Tensor<T> grad(Var v) const {
    const Node& node = nodes_.at(v.index);
    if (node.has_grad) return node.grad;
    return Tensor<T>(node.value().shape());
  }

  std::size_t size() const { return nodes_.size(); }

  /// Multiplies the backward contribution of every node of kind `op`.
  /// Used by tests to inject a known fault into one primitive.
  void set_backward_scale(Op op, T scale) {
    backward_scale_[static_cast<std::size_t>(op)] = scale;
  }

  void backward(Var root) {
    Node& top = nodes_.at(root.index);
    if (top.value().size() != 1) {
      throw ShapeError("backward: root must be a scalar, got " +
                       shape_string(top.value().shape()));
    }
    for (Node& node : nodes_) {
      node.has_grad = false;
      node.grad = Tensor<T>();
    }
    top.grad = Tensor<T>(top.value().shape(), T{1});
    top.has_grad = true;
    for (std::size_t i = root.index + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.has_grad || !node.backward) continue;
      const T scale = backward_scale_[static_cast<std::size_t>(node.op)];
      if (scale != T{1}) {
        Tensor<T> scaled = node.grad;
        for (T& g : scaled.data()) g *= scale;
        node.backward(*this, scaled);
      } else {
        node.backward(*this, node.grad);
      }
    }
  }

  // ---- elementwise -------------------------------------------------------

  Var add(Var a, Var b) {
    same_shape(Op::kAdd, a, b);
    Tensor<T> out = value(a);
    const auto& vb = value(b).data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] += vb[i];
    return record(Op::kAdd, std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor<T>& g) {
                    t.accumulate(a, g, T{1});
                    t.accumulate(b, g, T{1});
                  });
  }

  Var sub(Var a, Var b) {
    same_shape(Op::kSub, a, b);
    Tensor<T> out = value(a);
    const auto& vb = value(b).data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] -= vb[i];
    return record(Op::kSub, std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor<T>& g) {
                    t.accumulate(a, g, T{1});
                    t.accumulate(b, g, T{-1});
                  });
  }

  Var mul(Var a, Var b) {
    same_shape(Op::kMul, a, b);
    Tensor<T> out = value(a);
    const auto& vb = value(b).data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] *= vb[i];
    return record(Op::kMul, std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor<T>& g) {
                    const auto va = t.value(a).data();
                    const auto vb = t.value(b).data();
                    const auto gd = g.data();
                    if (t.requires_grad(a)) {
                      auto ga = t.grad_buffer(a).data();
                      for (std::size_t i = 0; i < gd.size(); ++i) ga[i] += gd[i] * vb[i];
                    }
                    if (t.requires_grad(b)) {
                      auto gb = t.grad_buffer(b).data();
                      for (std::size_t i = 0; i < gd.size(); ++i) gb[i] += gd[i] * va[i];
                    }
                  });
  }

  Var scale(Var a, T factor) {
    Tensor<T> out = value(a);
    for (T& v : out.data()) v *= factor;
    return record(Op::kScale, std::move(out), {a},
                  [a, factor](Tape& t, const Tensor<T>& g) {
                    t.accumulate(a, g, factor);
                  });
  }

  Var neg(Var a) { return scale(a, T{-1}); }

  Var gelu(Var a) {
    Tensor<T> out = value(a);
    for (T& v : out.data()) v = gelu_value(v);
    return record(Op::kGelu, std::move(out), {a},
                  [a](Tape& t, const Tensor<T>& g) {
                    const auto x = t.value(a).data();
                    auto ga = t.grad_buffer(a).data();
                    const auto gd = g.data();
                    for (std::size_t i = 0; i < gd.size(); ++i) {
                      ga[i] += gd[i] * gelu_derivative(x[i]);
                    }
                  });
  }

  Var relu(Var a) {
    Tensor<T> out = value(a);
    for (T& v : out.data()) v = v > T{0} ? v : T{0};
    return record(Op::kRelu, std::move(out), {a},
                  [a](Tape& t, const Tensor<T>& g) {
                    const auto x = t.value(a).data();
                    auto ga = t.grad_buffer(a).data();
                    const auto gd = g.data();
                    for (std::size_t i = 0; i < gd.size(); ++i) {
                      if (x[i] > T{0}) ga[i] += gd[i];
                    }
                  });
  }

  // ---- matrix ------------------------------------------------------------

  /// a (n x m) plus row vector b ([m] or [1 x m]) broadcast over rows.
  Var add_row(Var a, Var b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    require_rank2(Op::kAddRow, va);
    if (vb.size() != va.cols() || vb.rank() > 2 ||
        (vb.rank() == 2 && vb.shape()[0] != 1)) {
      throw shape_error(Op::kAddRow, va, vb);
    }
    Tensor<T> out = va;
    const std::size_t rows = va.rows(), cols = va.cols();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) += vb[c];
    return record(Op::kAddRow, std::move(out), {a, b},
                  [a, b, rows, cols](Tape& t, const Tensor<T>& g) {
                    t.accumulate(a, g, T{1});
                    if (t.requires_grad(b)) {
                      auto gb = t.grad_buffer(b).data();
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < cols; ++c) gb[c] += g(r, c);
                    }
                  });
  }

  /// a (n x k) times b (k x m).
  Var matmul(Var a, Var b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    require_rank2(Op::kMatMul, va);
    require_rank2(Op::kMatMul, vb);
    if (va.cols() != vb.rows()) throw shape_error(Op::kMatMul, va, vb);
    Tensor<T> out(Shape{va.rows(), vb.cols()});
    gemm_nn(va, vb, out);
    return record(Op::kMatMul, std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor<T>& g) {
                    if (t.requires_grad(a)) gemm_nt(g, t.value(b), t.grad_buffer(a));
                    if (t.requires_grad(b)) gemm_tn(t.value(a), g, t.grad_buffer(b));
                  });
  }

  /// a (n x k) times transpose of b (m x k).
  Var matmul_nt(Var a, Var b) {
    const Tensor<T>& va = value(a);
    const Tensor<T>& vb = value(b);
    require_rank2(Op::kMatMulNT, va);
    require_rank2(Op::kMatMulNT, vb);
    if (va.cols() != vb.cols()) throw shape_error(Op::kMatMulNT, va, vb);
    Tensor<T> out(Shape{va.rows(), vb.rows()});
    gemm_nt(va, vb, out);
    return record(Op::kMatMulNT, std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor<T>& g) {
                    if (t.requires_grad(a)) gemm_nn(g, t.value(b), t.grad_buffer(a));
                    if (t.requires_grad(b)) gemm_tn(g, t.value(a), t.grad_buffer(b));
                  });
  }

  Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Tensor<T>& va = value(a);
    require_rank2(Op::kSliceRows, va);
    if (begin + count > va.rows() || count == 0) {
      throw ShapeError(std::string(op_name(Op::kSliceRows)) + ": rows [" +
                       std::to_string(begin) + ", " + std::to_string(begin + count) +
                       ") out of " + shape_string(va.shape()));
    }
    const std::size_t cols = va.cols();
    Tensor<T> out(Shape{count, cols});
    std::copy_n(va.data().begin() + begin * cols, count * cols, out.data().begin());
    return record(Op::kSliceRows, std::move(out), {a},
                  [a, begin, count, cols](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(a)) return;
                    auto ga = t.grad_buffer(a).data();
                    const auto gd = g.data();
                    for (std::size_t i = 0; i < count * cols; ++i) ga[begin * cols + i] += gd[i];
                  });
  }

  Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    const Tensor<T>& va = value(a);
    require_rank2(Op::kSliceCols, va);
    if (begin + count > va.cols() || count == 0) {
      throw ShapeError(std::string(op_name(Op::kSliceCols)) + ": cols [" +
                       std::to_string(begin) + ", " + std::to_string(begin + count) +
                       ") out of " + shape_string(va.shape()));
    }
    const std::size_t rows = va.rows();
    Tensor<T> out(Shape{rows, count});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) out(r, c) = va(r, begin + c);
    return record(Op::kSliceCols, std::move(out), {a},
                  [a, begin, count, rows](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(a)) return;
                    Tensor<T>& ga = t.grad_buffer(a);
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
                  });
  }

  Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t total = 0;
    for (Var p : parts) {
      const Tensor<T>& vp = value(p);
      require_rank2(Op::kConcatCols, vp);
      if (vp.rows() != rows) throw shape_error(Op::kConcatCols, value(parts[0]), vp);
      total += vp.cols();
    }
    Tensor<T> out(Shape{rows, total});
    std::size_t offset = 0;
    for (Var p : parts) {
      const Tensor<T>& vp = value(p);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < vp.cols(); ++c) out(r, offset + c) = vp(r, c);
      offset += vp.cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return record(Op::kConcatCols, std::move(out), inputs,
                  [inputs, rows](Tape& t, const Tensor<T>& g) {
                    std::size_t off = 0;
                    for (Var p : inputs) {
                      const std::size_t cols = t.value(p).cols();
                      if (t.requires_grad(p)) {
                        Tensor<T>& gp = t.grad_buffer(p);
                        for (std::size_t r = 0; r < rows; ++r)
                          for (std::size_t c = 0; c < cols; ++c) gp(r, c) += g(r, off + c);
                      }
                      off += cols;
                    }
                  });
  }

  Var softmax_rows(Var a) {
    const Tensor<T>& va = value(a);
    require_rank2(Op::kSoftmaxRows, va);
    const std::size_t rows = va.rows(), cols = va.cols();
    Tensor<T> out(va.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto in = va.row(r);
      auto o = out.row(r);
      const T mx = *std::max_element(in.begin(), in.end());
      T total{0};
      for (std::size_t c = 0; c < cols; ++c) {
        o[c] = std::exp(in[c] - mx);
        total += o[c];
      }
      for (T& v : o) v /= total;
    }
    Tensor<T> probs = out;
    return record(Op::kSoftmaxRows, std::move(out), {a},
                  [a, probs = std::move(probs), rows, cols](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(a)) return;
                    Tensor<T>& ga = t.grad_buffer(a);
                    for (std::size_t r = 0; r < rows; ++r) {
                      T dot{0};
                      for (std::size_t c = 0; c < cols; ++c) dot += g(r, c) * probs(r, c);
                      for (std::size_t c = 0; c < cols; ++c)
                        ga(r, c) += probs(r, c) * (g(r, c) - dot);
                    }
                  });
  }

  /// Per-row layer normalization with learned gain and bias (both [m]).
  Var layer_norm_rows(Var x, Var gain, Var bias, T eps = T(1e-5)) {
    const Tensor<T>& vx = value(x);
    const Tensor<T>& vg = value(gain);
    const Tensor<T>& vb = value(bias);
    require_rank2(Op::kLayerNormRows, vx);
    const std::size_t rows = vx.rows(), cols = vx.cols();
    if (vg.size() != cols) throw shape_error(Op::kLayerNormRows, vx, vg);
    if (vb.size() != cols) throw shape_error(Op::kLayerNormRows, vx, vb);
    Tensor<T> xhat(vx.shape());
    std::vector<T> inv_std(rows);
    Tensor<T> out(vx.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto in = vx.row(r);
      T mean{0};
      for (T v : in) mean += v;
      mean /= static_cast<T>(cols);
      T var{0};
      for (T v : in) var += (v - mean) * (v - mean);
      var /= static_cast<T>(cols);
      inv_std[r] = T{1} / std::sqrt(var + eps);
      for (std::size_t c = 0; c < cols; ++c) {
        xhat(r, c) = (in[c] - mean) * inv_std[r];
        out(r, c) = xhat(r, c) * vg[c] + vb[c];
      }
    }
    return record(
        Op::kLayerNormRows, std::move(out), {x, gain, bias},
        [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
         cols](Tape& t, const Tensor<T>& g) {
          const Tensor<T>& vg = t.value(gain);
          if (t.requires_grad(gain)) {
            auto gg = t.grad_buffer(gain).data();
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < cols; ++c) gg[c] += g(r, c) * xhat(r, c);
          }
          if (t.requires_grad(bias)) {
            auto gb = t.grad_buffer(bias).data();
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < cols; ++c) gb[c] += g(r, c);
          }
          if (t.requires_grad(x)) {
            Tensor<T>& gx = t.grad_buffer(x);
            const T m = static_cast<T>(cols);
            for (std::size_t r = 0; r < rows; ++r) {
              T mean_d{0}, mean_dx{0};
              for (std::size_t c = 0; c < cols; ++c) {
                const T d = g(r, c) * vg[c];
                mean_d += d;
                mean_dx += d * xhat(r, c);
              }
              mean_d /= m;
              mean_dx /= m;
              for (std::size_t c = 0; c < cols; ++c) {
                const T d = g(r, c) * vg[c];
                gx(r, c) += inv_std[r] * (d - mean_d - xhat(r, c) * mean_dx);
              }
            }
          }
        });
  }

  /// Rows of `table` selected by `ids`.
  Var gather_rows(Var table, std::span<const std::uint32_t> ids) {
    const Tensor<T>& vt = value(table);
    require_rank2(Op::kGather, vt);
    const std::size_t cols = vt.cols();
    Tensor<T> out(Shape{ids.size(), cols});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= vt.rows()) {
        throw ShapeError(std::string(op_name(Op::kGather)) + ": id " +
                         std::to_string(ids[i]) + " out of " +
                         shape_string(vt.shape()));
      }
      const auto src = vt.row(ids[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    std::vector<std::uint32_t> idx(ids.begin(), ids.end());
    return record(Op::kGather, std::move(out), {table},
                  [table, idx = std::move(idx), cols](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(table)) return;
                    Tensor<T>& gt = t.grad_buffer(table);
                    for (std::size_t i = 0; i < idx.size(); ++i)
                      for (std::size_t c = 0; c < cols; ++c) gt(idx[i], c) += g(i, c);
                  });
  }

  // ---- reductions and losses ----------------------------------------------

  /// Cross-entropy of softmax(logits) against `label`. Logits hold C values
  /// ([C] or [1 x C]); the result is a scalar.
  Var cross_entropy(Var logits, std::size_t label) {
    const Tensor<T>& vl = value(logits);
    if (vl.size() < 1 || label >= vl.size() ||
        (vl.rank() == 2 && vl.shape()[0] != 1) || vl.rank() > 2) {
      throw ShapeError(std::string(op_name(Op::kCrossEntropy)) + ": label " +
                       std::to_string(label) + " for logits " +
                       shape_string(vl.shape()));
    }
    const auto z = vl.data();
    const T mx = *std::max_element(z.begin(), z.end());
    T total{0};
    for (T v : z) total += std::exp(v - mx);
    const T lse = mx + std::log(total);
    std::vector<T> probs(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) probs[c] = std::exp(z[c] - lse);
    return record(Op::kCrossEntropy, Tensor<T>::scalar(lse - z[label]), {logits},
                  [logits, label, probs = std::move(probs)](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(logits)) return;
                    auto gl = t.grad_buffer(logits).data();
                    const T s = g[0];
                    for (std::size_t c = 0; c < probs.size(); ++c) {
                      gl[c] += s * (probs[c] - (c == label ? T{1} : T{0}));
                    }
                  });
  }

  /// l2 norm of every row of an n x m matrix, shape [n]. The subgradient at
  /// a zero row is taken as zero.
  Var row_norms(Var a) {
    const Tensor<T>& va = value(a);
    require_rank2(Op::kRowNorms, va);
    const std::size_t rows = va.rows(), cols = va.cols();
    Tensor<T> out(Shape{rows});
    for (std::size_t r = 0; r < rows; ++r) {
      T ss{0};
      for (T v : va.row(r)) ss += v * v;
      out[r] = std::sqrt(ss);
    }
    Tensor<T> norms = out;
    return record(Op::kRowNorms, std::move(out), {a},
                  [a, norms = std::move(norms), rows, cols](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(a)) return;
                    const Tensor<T>& va = t.value(a);
                    Tensor<T>& ga = t.grad_buffer(a);
                    for (std::size_t r = 0; r < rows; ++r) {
                      if (norms[r] == T{0}) continue;
                      const T s = g[r] / norms[r];
                      for (std::size_t c = 0; c < cols; ++c) ga(r, c) += s * va(r, c);
                    }
                  });
  }

  Var sum(Var a) {
    T total{0};
    for (T v : value(a).data()) total += v;
    return record(Op::kSum, Tensor<T>::scalar(total), {a},
                  [a](Tape& t, const Tensor<T>& g) {
                    if (!t.requires_grad(a)) return;
                    const T s = g[0];
                    for (T& v : t.grad_buffer(a).data()) v += s;
                  });
  }

  static T gelu_value(T x) {
    const T k = std::sqrt(T{2} / std::numbers::pi_v<T>);
    const T inner = k * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T{1} + std::tanh(inner));
  }

  static T gelu_derivative(T x) {
    const T k = std::sqrt(T{2} / std::numbers::pi_v<T>);
    const T inner = k * (x + T(0.044715) * x * x * x);
    const T th = std::tanh(inner);
    const T dinner = k * (T{1} + T(3 * 0.044715) * x * x);
    return T(0.5) * (T{1} + th) + T(0.5) * x * (T{1} - th * th) * dinner;
  }

 private:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  struct Node {
    Op op = Op::kLeaf;
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
    Tensor<T> grad;
    bool has_grad = false;

    const Tensor<T>& value() const { return external ? *external : owned; }
  };

  Var push(Node node) {
    if (!node.value().all_finite()) {
      throw NonFiniteError(std::string(op_name(node.op)) +
                           ": non-finite value " + shape_string(node.value().shape()));
    }
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var record(Op op, Tensor<T> out, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(op, std::move(out), std::vector<Var>(inputs), std::move(fn));
  }

  Var record(Op op, Tensor<T> out, const std::vector<Var>& inputs, BackwardFn fn) {
    Node node;
    node.op = op;
    node.owned = std::move(out);
    for (Var v : inputs) node.requires_grad = node.requires_grad || requires_grad(v);
    if (node.requires_grad) node.backward = std::move(fn);
    return push(std::move(node));
  }

  Tensor<T>& grad_buffer(Var v) {
    Node& node = nodes_[v.index];
    if (!node.has_grad) {
      node.grad = Tensor<T>(node.value().shape());
      node.has_grad = true;
    }
    return node.grad;
  }

  void accumulate(Var v, const Tensor<T>& g, T factor) {
    if (!requires_grad(v)) return;
    auto dst = grad_buffer(v).data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
  }

  void same_shape(Op op, Var a, Var b) const {
    if (value(a).shape() != value(b).shape()) throw shape_error(op, value(a), value(b));
  }

  static void require_rank2(Op op, const Tensor<T>& t) {
    if (t.rank() != 2) {
      throw ShapeError(std::string(op_name(op)) + ": expected a matrix, got " +
                       shape_string(t.shape()));
    }
  }

  static ShapeError shape_error(Op op, const Tensor<T>& a, const Tensor<T>& b) {
    return ShapeError(std::string(op_name(op)) + ": incompatible shapes " +
                      shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }

  // out += a * b
  static void gemm_nn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
      T* o = out.data().data() + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a(i, p);
        const T* brow = b.data().data() + p * m;
        for (std::size_t j = 0; j < m; ++j) o[j] += av * brow[j];
      }
    }
  }

  // out += a * b^T
  static void gemm_nt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
      const T* arow = a.data().data() + i * k;
      for (std::size_t j = 0; j < m; ++j) {
        const T* brow = b.data().data() + j * k;
        T acc{0};
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        out(i, j) += acc;
      }
    }
  }

  // out += a^T * b
  static void gemm_tn(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
      const T* brow = b.data().data() + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a(i, p);
        T* o = out.data().data() + p * m;
        for (std::size_t j = 0; j < m; ++j) o[j] += av * brow[j];
      }
    }
  }

  std::vector<Node> nodes_;
  std::array<T, static_cast<std::size_t>(Op::kCount)> backward_scale_{};
};

}  // namespace bsattack
