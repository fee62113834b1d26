// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SSUM_PARAMS_HPP
#define SSUM_PARAMS_HPP

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ssum/autodiff.hpp"
#include "ssum/tensor.hpp"

namespace ssum {

/// Named parameter tensors in insertion order.
template <typename T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    BasicTensor<T> value;
  };

  void add(std::string name, BasicTensor<T> value) {
    if (index_.count(name)) throw UsageError("duplicate parameter '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value)});
  }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  BasicTensor<T>& get(std::string_view name) { return entries_[index_of(name)].value; }
  const BasicTensor<T>& get(std::string_view name) const { return entries_[index_of(name)].value; }

  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i)
      if (a.entries_[i].name != b.entries_[i].name || !(a.entries_[i].value == b.entries_[i].value))
        return false;
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Binds parameters into a graph as gradient-carrying leaves on first use.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(Graph<T>& graph, const ParameterSet<T>& params)
      : graph_(graph), params_(params), vars_(params.size()) {}

  Var operator()(std::string_view name) {
    const std::size_t i = params_.index_of(name);
    if (!vars_[i].valid()) vars_[i] = graph_.leaf(params_.entries()[i].value, true, std::string(name));
    return vars_[i];
  }

  Graph<T>& graph() noexcept { return graph_; }

  /// Gradients aligned with the parameter set; zero for unused parameters.
  std::vector<BasicTensor<T>> gradients() const {
    std::vector<BasicTensor<T>> out;
    out.reserve(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i)
      out.push_back(vars_[i].valid() ? graph_.grad(vars_[i])
                                     : BasicTensor<T>(params_.entries()[i].value.shape()));
    return out;
  }

 private:
  Graph<T>& graph_;
  const ParameterSet<T>& params_;
  std::vector<Var> vars_;
};

}  // namespace ssum

#endif  // SSUM_PARAMS_HPP
