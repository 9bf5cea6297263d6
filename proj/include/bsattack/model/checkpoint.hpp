#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/model/transformer.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace bsattack {

// Layout (all integers little-endian):
//   "BSAT" | u32 version
//   u32 vocab_size, dim, layers, heads, ffn_dim, max_length, classes, positional
//   u64 vocabulary hash
//   u32 tensor count, then per tensor:
//     u32 name length | name bytes | u32 rank | u32 dims[rank] | f32 values
inline constexpr std::array<char, 4> kCheckpointMagic = {'B', 'S', 'A', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(source_ + ": truncated checkpoint");
  }
  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Serialized checkpoint bytes; parameters are stored as 32-bit floats.
template <class T>
std::vector<char> encode_checkpoint(const TransformerClassifier<T>& model, std::uint64_t vocab_hash) {
  detail::ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  const TransformerConfig& c = model.config();
  for (std::uint32_t v : {c.vocab_size, c.dim, c.layers, c.heads, c.ffn_dim, c.max_length,
                          c.classes, static_cast<std::uint32_t>(c.positional ? 1 : 0)}) {
    w.u32(v);
  }
  w.u64(vocab_hash);
  const ParameterSet<T>& params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    const Tensor<T>& t = params[i];
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (T v : t.data()) w.f32(static_cast<float>(v));
  }
  return w.bytes();
}

inline TransformerClassifier<float> decode_checkpoint(std::vector<char> bytes,
                                                      std::uint64_t expected_vocab_hash,
                                                      const std::string& source = "checkpoint") {
  detail::ByteReader r(std::move(bytes), source);
  if (r.str(4) != std::string(kCheckpointMagic.data(), 4)) {
    throw FormatError(source + ": bad magic, not a checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  TransformerConfig c;
  c.vocab_size = r.u32();
  c.dim = r.u32();
  c.layers = r.u32();
  c.heads = r.u32();
  c.ffn_dim = r.u32();
  c.max_length = r.u32();
  c.classes = r.u32();
  c.positional = r.u32() != 0;
  if (r.u64() != expected_vocab_hash) {
    throw FormatError(source + ": vocabulary hash does not match the supplied vocabulary");
  }
  const std::uint32_t count = r.u32();
  ParameterSet<float> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError(source + ": implausible tensor rank in " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_size(shape);
    std::vector<float> data(n);
    for (float& v : data) v = r.f32();
    params.add(name, Tensor<float>(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) throw FormatError(source + ": trailing bytes after last tensor");
  return TransformerClassifier<float>(c, std::move(params));
}

template <class T>
void save_checkpoint(const std::string& path, const TransformerClassifier<T>& model,
                     std::uint64_t vocab_hash) {
  const auto bytes = encode_checkpoint(model, vocab_hash);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline TransformerClassifier<float> load_checkpoint(const std::string& path,
                                                    std::uint64_t expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read checkpoint " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::move(bytes), expected_vocab_hash, path);
}

}  // namespace bsattack
