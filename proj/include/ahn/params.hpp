#pragma once

#include "ahn/tape.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace ahn {

/// Ordered collection of named tensors. Iteration order is insertion order,
/// which fixes the checkpoint layout and the optimizer's visiting order.
template <typename Real> class ParamStore {
public:
  std::size_t add(const std::string &name, Tensor<Real> value) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
    index_.emplace(name, names_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(value));
    return names_.size() - 1;
  }

  bool contains(const std::string &name) const { return index_.count(name) > 0; }

  std::size_t index(const std::string &name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }

  Tensor<Real> &operator[](const std::string &name) { return tensors_[index(name)]; }
  const Tensor<Real> &operator[](const std::string &name) const {
    return tensors_[index(name)];
  }
  Tensor<Real> &at(std::size_t i) { return tensors_.at(i); }
  const Tensor<Real> &at(std::size_t i) const { return tensors_.at(i); }

  const std::string &name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string> &names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto &t : tensors_) n += t.size();
    return n;
  }

  ParamStore zeros_like() const {
    ParamStore z;
    for (std::size_t i = 0; i < size(); ++i) z.add(names_[i], Tensor<Real>(tensors_[i].shape()));
    return z;
  }

  void zero() {
    for (auto &t : tensors_) t.fill(Real(0));
  }

  friend bool operator==(const ParamStore &a, const ParamStore &b) {
    return a.names_ == b.names_ && a.tensors_ == b.tensors_;
  }

private:
  std::vector<std::string> names_;
  std::vector<Tensor<Real>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

} // namespace ahn
