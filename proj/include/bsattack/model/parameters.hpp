#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/numerics/tensor.hpp>

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bsattack {

/// Ordered collection of named tensors.
template <class T>
class ParameterSet {
 public:
  void add(std::string name, Tensor<T> value) {
    entries_.emplace_back(std::move(name), std::move(value));
  }

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_.at(i).first; }
  Tensor<T>& operator[](std::size_t i) { return entries_.at(i).second; }
  const Tensor<T>& operator[](std::size_t i) const { return entries_.at(i).second; }

  std::size_t index(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].first == name) return i;
    }
    throw InvalidArgument("no parameter named '" + std::string(name) + "'");
  }

  Tensor<T>& get(std::string_view name) { return entries_[index(name)].second; }
  const Tensor<T>& get(std::string_view name) const { return entries_[index(name)].second; }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.size();
    return n;
  }

  template <class U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& [name, value] : entries_) out.add(name, value.template cast<U>());
    return out;
  }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

}  // namespace bsattack
