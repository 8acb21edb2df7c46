#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "wdur/errors.hpp"

namespace wdur {

template <class Real>
struct Param {
  std::vector<int> dims;
  std::vector<Real> value;
  // Gradients accumulate through const views of a store during backward passes.
  mutable std::vector<Real> grad;

  std::size_t size() const { return value.size(); }
};

std::size_t element_count(const std::vector<int>& dims);
std::string dims_string(const std::vector<int>& dims);

/// Named trainable tensors with one gradient slot per parameter.
template <class Real>
class ParamStore {
 public:
  using Map = std::map<std::string, Param<Real>>;

  /// Registers a zero-filled parameter. Throws ParameterError on duplicate names.
  Param<Real>& add(const std::string& name, std::vector<int> dims) {
    if (params_.count(name)) throw ParameterError("duplicate parameter name '" + name + "'");
    Param<Real> p;
    p.value.assign(element_count(dims), Real(0));
    p.grad.assign(p.value.size(), Real(0));
    p.dims = std::move(dims);
    return params_.emplace(name, std::move(p)).first->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Param<Real>& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ParameterError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Param<Real>& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ParameterError("unknown parameter '" + name + "'");
    return it->second;
  }

  Map& entries() { return params_; }
  const Map& entries() const { return params_; }
  std::size_t tensor_count() const { return params_.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += p.size();
    return n;
  }

  void zero_grad() {
    for (auto& [name, p] : params_) std::fill(p.grad.begin(), p.grad.end(), Real(0));
  }

  template <class Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& [name, p] : params_) {
      auto& q = out.add(name, p.dims);
      for (std::size_t i = 0; i < p.size(); ++i) q.value[i] = static_cast<Other>(p.value[i]);
    }
    return out;
  }

 private:
  Map params_;
};

}  // namespace wdur
