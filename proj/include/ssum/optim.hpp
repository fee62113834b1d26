// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SSUM_OPTIM_HPP
#define SSUM_OPTIM_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "ssum/params.hpp"

namespace ssum {

/// Learning rate multiplied by `factor` once for every milestone epoch that
/// has been reached (epochs counted from 0).
struct MilestoneSchedule {
  double base_lr = 3e-4;
  std::vector<std::size_t> milestones{20, 35};
  double factor = 0.5;

  double lr_at(std::size_t epoch) const {
    double lr = base_lr;
    for (std::size_t m : milestones)
      if (epoch >= m) lr *= factor;
    return lr;
  }
};

template <typename T>
struct AdamState {
  std::vector<BasicTensor<T>> m, v;
  std::size_t step = 0;
  double lr = 3e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState for_params(const ParameterSet<T>& params, double lr) {
    AdamState st;
    st.lr = lr;
    for (const auto& e : params.entries()) {
      st.m.emplace_back(e.value.shape());
      st.v.emplace_back(e.value.shape());
    }
    return st;
  }
};

/// Bias-corrected Adam update, in place.
template <typename T>
void adam_step(ParameterSet<T>& params, const std::vector<BasicTensor<T>>& grads, AdamState<T>& st) {
  auto& entries = params.entries();
  if (grads.size() != entries.size() || st.m.size() != entries.size())
    throw UsageError("adam_step: parameter/gradient count mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& p = entries[k].value;
    const auto& g = grads[k];
    require_same_shape(p, g, "adam_step");
    require_finite(g, "adam_step gradient");
    auto& m = st.m[k];
    auto& v = st.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double mi = st.beta1 * m[i] + (1.0 - st.beta1) * gi;
      const double vi = st.beta2 * v[i] + (1.0 - st.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = st.lr * (mi / c1) / (std::sqrt(vi / c2) + st.eps);
      p[i] = static_cast<T>(p[i] - update);
    }
    require_finite(p, "adam_step");
  }
}

/// Scales all gradients so their joint L2 norm is at most max_norm. Returns
/// the norm before clipping.
template <typename T>
double clip_global_norm(std::vector<BasicTensor<T>>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (T v : g.data()) sq += double(v) * double(v);
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const T k = static_cast<T>(max_norm / norm);
    for (auto& g : grads)
      for (auto& v : g.data()) v *= k;
  }
  return norm;
}

}  // namespace ssum

#endif  // SSUM_OPTIM_HPP
