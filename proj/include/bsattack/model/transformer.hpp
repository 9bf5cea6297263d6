#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/model/classifier.hpp>
#include <bsattack/model/parameters.hpp>
#include <bsattack/numerics/tape.hpp>
#include <bsattack/numerics/tensor.hpp>
#include <bsattack/vocab/embedding_table.hpp>

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bsattack {

struct TransformerConfig {
  std::uint32_t vocab_size = 0;
  std::uint32_t dim = 32;
  std::uint32_t layers = 2;
  std::uint32_t heads = 2;
  std::uint32_t ffn_dim = 128;
  std::uint32_t max_length = 32;
  std::uint32_t classes = 2;
  bool positional = true;

  void validate() const {
    if (vocab_size < 3) throw InvalidArgument("transformer: vocabulary too small");
    if (dim == 0 || heads == 0 || dim % heads != 0) {
      throw InvalidArgument("transformer: dim must be a positive multiple of heads");
    }
    if (ffn_dim == 0 || max_length == 0) throw InvalidArgument("transformer: zero-sized layer");
    if (classes < 2) throw InvalidArgument("transformer: need at least two classes");
  }

  friend bool operator==(const TransformerConfig&, const TransformerConfig&) = default;
};

struct InitConfig {
  double weight_std = 0.02;
  // Large enough that a token survives one Adam step of the attack.
  double embedding_std = 0.3;
  std::uint64_t seed = 0;
};

namespace detail {
// Per-layer tensors, in storage order.
enum LayerParam : std::size_t {
  kLn1Gain, kLn1Bias, kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo,
  kLn2Gain, kLn2Bias, kW1, kB1, kW2, kB2, kLayerParamCount
};
inline constexpr std::size_t kTokEmb = 0;
inline constexpr std::size_t kPosEmb = 1;
inline constexpr std::size_t kFirstLayer = 2;
}  // namespace detail

/// Parameter names and shapes in storage order.
inline std::vector<std::pair<std::string, Shape>> transformer_layout(const TransformerConfig& c) {
  std::vector<std::pair<std::string, Shape>> out;
  const std::size_t d = c.dim, f = c.ffn_dim;
  out.emplace_back("tok_emb", Shape{c.vocab_size, d});
  out.emplace_back("pos_emb", Shape{c.max_length, d});
  for (std::uint32_t l = 0; l < c.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    out.emplace_back(p + "ln1.gain", Shape{d});
    out.emplace_back(p + "ln1.bias", Shape{d});
    out.emplace_back(p + "attn.wq", Shape{d, d});
    out.emplace_back(p + "attn.bq", Shape{d});
    out.emplace_back(p + "attn.wk", Shape{d, d});
    out.emplace_back(p + "attn.bk", Shape{d});
    out.emplace_back(p + "attn.wv", Shape{d, d});
    out.emplace_back(p + "attn.bv", Shape{d});
    out.emplace_back(p + "attn.wo", Shape{d, d});
    out.emplace_back(p + "attn.bo", Shape{d});
    out.emplace_back(p + "ln2.gain", Shape{d});
    out.emplace_back(p + "ln2.bias", Shape{d});
    out.emplace_back(p + "mlp.w1", Shape{d, f});
    out.emplace_back(p + "mlp.b1", Shape{f});
    out.emplace_back(p + "mlp.w2", Shape{f, d});
    out.emplace_back(p + "mlp.b2", Shape{d});
  }
  out.emplace_back("lnf.gain", Shape{d});
  out.emplace_back("lnf.bias", Shape{d});
  out.emplace_back("head.w", Shape{d, c.classes});
  out.emplace_back("head.b", Shape{c.classes});
  return out;
}

/// Fresh parameters: normal(0, std) weights and embeddings, zero biases,
/// unit layer-norm gains.
template <class T>
ParameterSet<T> initialize_transformer(const TransformerConfig& config, const InitConfig& init) {
  config.validate();
  std::mt19937_64 rng(init.seed);
  ParameterSet<T> params;
  for (auto& [name, shape] : transformer_layout(config)) {
    Tensor<T> t(shape);
    const bool is_gain = name.ends_with(".gain");
    const bool is_bias = name.ends_with(".bias") || name.ends_with(".bq") ||
                         name.ends_with(".bk") || name.ends_with(".bv") ||
                         name.ends_with(".bo") || name.ends_with(".b1") ||
                         name.ends_with(".b2") || name == "head.b";
    if (is_gain) {
      t.fill(T{1});
    } else if (!is_bias) {
      const double std = name.ends_with("_emb") ? init.embedding_std : init.weight_std;
      std::normal_distribution<double> normal(0.0, std);
      for (T& v : t.data()) v = static_cast<T>(normal(rng));
    }
    params.add(name, std::move(t));
  }
  return params;
}

/// Pre-norm transformer encoder with learned positional embeddings and a
/// mean-pooled linear classification head. Immutable once constructed.
template <class T>
class TransformerClassifier {
 public:
  using scalar_type = T;

  TransformerClassifier(TransformerConfig config, ParameterSet<T> params)
      : config_(config),
        params_(std::make_shared<const ParameterSet<T>>(std::move(params))),
        table_(std::shared_ptr<const Tensor<T>>(params_, &(*params_)[detail::kTokEmb])) {
    config_.validate();
    const auto layout = transformer_layout(config_);
    if (layout.size() != params_->size()) {
      throw InvalidArgument("transformer: expected " + std::to_string(layout.size()) +
                            " parameter tensors, got " + std::to_string(params_->size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (params_->name(i) != layout[i].first || (*params_)[i].shape() != layout[i].second) {
        throw InvalidArgument("transformer: parameter " + std::to_string(i) + " should be " +
                              layout[i].first + shape_string(layout[i].second) + ", got " +
                              params_->name(i) + shape_string((*params_)[i].shape()));
      }
      if (!(*params_)[i].all_finite()) {
        throw NonFiniteError("transformer: non-finite values in " + params_->name(i));
      }
    }
    table_.verify_self_projection();
  }

  static TransformerClassifier initialize(const TransformerConfig& config,
                                          const InitConfig& init = {}) {
    return TransformerClassifier(config, initialize_transformer<T>(config, init));
  }

  const TransformerConfig& config() const { return config_; }
  const ParameterSet<T>& parameters() const { return *params_; }
  const EmbeddingTable<T>& embedding_table() const { return table_; }
  std::size_t num_classes() const { return config_.classes; }
  std::size_t max_length() const { return config_.max_length; }
  std::size_t dim() const { return config_.dim; }

  /// Records every parameter as a non-owning leaf; the model must outlive
  /// the tape.
  std::vector<Var> bind(Tape<T>& tape, bool requires_grad) const {
    std::vector<Var> vars;
    vars.reserve(params_->size());
    for (std::size_t i = 0; i < params_->size(); ++i) {
      vars.push_back(tape.ref((*params_)[i], requires_grad));
    }
    return vars;
  }

  Var logits(Tape<T>& tape, Var embeddings) const {
    const auto params = bind(tape, false);
    return logits_with(tape, params, embeddings);
  }

  Var logits(Tape<T>& tape, Var embeddings, std::span<const std::uint8_t> valid) const {
    const auto params = bind(tape, false);
    return logits_with(tape, params, embeddings, valid);
  }

  /// Logits (1 x C) from an n x d embedding sequence using the given
  /// parameter variables (storage order). `valid`, when non-empty, marks
  /// positions that take part in attention and pooling; masked positions
  /// cannot influence the output.
  Var logits_with(Tape<T>& tape, std::span<const Var> p, Var embeddings,
                  std::span<const std::uint8_t> valid = {}) const {
    using namespace detail;
    const Tensor<T>& e = tape.value(embeddings);
    if (e.rank() != 2 || e.cols() != config_.dim) {
      throw ShapeError("transformer: embeddings " + shape_string(e.shape()) +
                       " do not match model dim " + std::to_string(config_.dim));
    }
    const std::size_t n = e.rows();
    if (n == 0 || n > config_.max_length) {
      throw InvalidArgument("transformer: sequence length " + std::to_string(n) +
                            " outside 1.." + std::to_string(config_.max_length));
    }
    if (!valid.empty() && valid.size() != n) {
      throw ShapeError("transformer: mask length does not match sequence length");
    }

    std::size_t valid_count = n;
    if (!valid.empty()) {
      valid_count = 0;
      for (auto v : valid) valid_count += v ? 1 : 0;
      if (valid_count == 0) throw InvalidArgument("transformer: every position is masked");
    }
    Tensor<T> pool(Shape{1, n});
    for (std::size_t i = 0; i < n; ++i) {
      pool[i] = (valid.empty() || valid[i]) ? T{1} / static_cast<T>(valid_count) : T{0};
    }
    std::optional<Var> key_mask;
    if (!valid.empty() && valid_count < n) {
      Tensor<T> m(Shape{n, n});
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = valid[c] ? T{0} : T(-1e9);
      key_mask = tape.constant(std::move(m));
    }

    Var x = embeddings;
    if (config_.positional) x = tape.add(x, tape.slice_rows(p[kPosEmb], 0, n));

    const std::size_t heads = config_.heads;
    const std::size_t head_dim = config_.dim / heads;
    const T score_scale = T{1} / std::sqrt(static_cast<T>(head_dim));
    for (std::size_t l = 0; l < config_.layers; ++l) {
      const std::size_t b = kFirstLayer + l * kLayerParamCount;
      const Var h = tape.layer_norm_rows(x, p[b + kLn1Gain], p[b + kLn1Bias]);
      const Var q = tape.add_row(tape.matmul(h, p[b + kWq]), p[b + kBq]);
      const Var k = tape.add_row(tape.matmul(h, p[b + kWk]), p[b + kBk]);
      const Var v = tape.add_row(tape.matmul(h, p[b + kWv]), p[b + kBv]);
      std::vector<Var> head_out;
      head_out.reserve(heads);
      for (std::size_t hd = 0; hd < heads; ++hd) {
        const Var qh = tape.slice_cols(q, hd * head_dim, head_dim);
        const Var kh = tape.slice_cols(k, hd * head_dim, head_dim);
        const Var vh = tape.slice_cols(v, hd * head_dim, head_dim);
        Var scores = tape.scale(tape.matmul_nt(qh, kh), score_scale);
        if (key_mask) scores = tape.add(scores, *key_mask);
        head_out.push_back(tape.matmul(tape.softmax_rows(scores), vh));
      }
      const Var attn = tape.add_row(tape.matmul(tape.concat_cols(head_out), p[b + kWo]),
                                    p[b + kBo]);
      x = tape.add(x, attn);

      const Var h2 = tape.layer_norm_rows(x, p[b + kLn2Gain], p[b + kLn2Bias]);
      const Var hidden = tape.gelu(tape.add_row(tape.matmul(h2, p[b + kW1]), p[b + kB1]));
      x = tape.add(x, tape.add_row(tape.matmul(hidden, p[b + kW2]), p[b + kB2]));
    }
    const std::size_t tail = kFirstLayer + config_.layers * kLayerParamCount;
    x = tape.layer_norm_rows(x, p[tail], p[tail + 1]);
    const Var pooled = tape.matmul(tape.constant(std::move(pool)), x);
    return tape.add_row(tape.matmul(pooled, p[tail + 2]), p[tail + 3]);
  }

  /// Logits for token ids, gathering rows from the embedding parameter.
  Var logits_from_ids(Tape<T>& tape, std::span<const Var> p,
                      std::span<const std::uint32_t> ids,
                      std::span<const std::uint8_t> valid = {}) const {
    return logits_with(tape, p, tape.gather_rows(p[detail::kTokEmb], ids), valid);
  }

  template <class U>
  TransformerClassifier<U> cast() const {
    return TransformerClassifier<U>(config_, params_->template cast<U>());
  }

 private:
  TransformerConfig config_;
  std::shared_ptr<const ParameterSet<T>> params_;
  EmbeddingTable<T> table_;
};

}  // namespace bsattack
