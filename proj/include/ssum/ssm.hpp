// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// State space model core: ZOH discretization of a diagonal LTI system, its
// recurrent and convolutional evaluations, and the input-dependent
// (selective) scan.

#ifndef SSUM_SSM_HPP
#define SSUM_SSM_HPP

#include <cstddef>
#include <vector>

#include "ssum/rng.hpp"
#include "ssum/tensor.hpp"

namespace ssum {

/// Continuous single-input single-output system with diagonal A.
/// h'(t) = A h(t) + B x(t),  y(t) = C h(t).
template <typename T>
struct LtiSsm {
  std::vector<T> a;  // diagonal of A, length N
  std::vector<T> b;  // length N
  std::vector<T> c;  // length N
  T step = T(1);     // sampling step, must be > 0
};

template <typename T>
struct DiscreteSsm {
  std::vector<T> a_bar;  // diagonal
  std::vector<T> b_bar;
  std::vector<T> c_bar;
};

/// Below this |step * a| the ZOH input gain uses its series expansion.
inline constexpr double kZohSeriesThreshold = 1e-6;

/// Zero-order hold: a_bar = exp(step a), b_bar = (exp(step a) - 1) / (step a) * step b.
template <typename T>
DiscreteSsm<T> discretize(const LtiSsm<T>& m);

/// h_0 = 0; h_t = a_bar * h_{t-1} + b_bar x_t; y_t = <c_bar, h_t>.
template <typename T>
std::vector<T> ssm_recurrent(const DiscreteSsm<T>& d, const std::vector<T>& x);

/// K[j] = <c_bar, a_bar^j * b_bar> for j < L.
template <typename T>
std::vector<T> ssm_kernel(const DiscreteSsm<T>& d, std::size_t length);

/// Causal convolution y_t = sum_{j<=t} K[j] x_{t-j}.
template <typename T>
std::vector<T> ssm_convolutional(const DiscreteSsm<T>& d, const std::vector<T>& x);

/// Learnable parameters of one selective SSM (token width D, state N).
template <typename T>
struct SelectiveSsmWeights {
  BasicTensor<T> a_log;    // (D, N); A = -exp(a_log)
  BasicTensor<T> b_proj;   // (N, D)
  BasicTensor<T> b_bias;   // (N)
  BasicTensor<T> c_proj;   // (N, D)
  BasicTensor<T> c_bias;   // (N)
  BasicTensor<T> dt_proj;  // (D, D)
  BasicTensor<T> dt_bias;  // (D); step = softplus(dt_proj x + dt_bias)

  std::size_t width() const { return a_log.dim(0); }
  std::size_t state_dim() const { return a_log.dim(1); }

  /// A[d,n] = -(n+1); projections uniform in +-1/sqrt(D); step biases so that
  /// softplus(bias) is log-uniform in [1e-3, 1e-1]; B/C biases zero.
  static SelectiveSsmWeights init(std::size_t width, std::size_t state_dim, Rng& rng);
};

template <typename T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

/// Inverse of softplus for y > 0.
template <typename T>
T softplus_inverse(T y) {
  return y + std::log(-std::expm1(-y));
}

/// Runs the selective scan over s (L, D) and returns (L, D).
template <typename T>
BasicTensor<T> selective_scan(const SelectiveSsmWeights<T>& w, const BasicTensor<T>& s);

}  // namespace ssum

#endif  // SSUM_SSM_HPP
