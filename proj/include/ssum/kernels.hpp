// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Raw forward/backward kernels. Backward kernels accumulate (+=) into
// pre-sized gradient tensors; a null pointer skips that gradient.

#ifndef SSUM_KERNELS_HPP
#define SSUM_KERNELS_HPP

#include <array>
#include <cstddef>

#include "ssum/tensor.hpp"

namespace ssum::kernels {

struct Conv3dGeometry {
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::array<std::size_t, 3> padding{1, 1, 1};
};

/// x (Cin,B,H,W), w (Cout,Cin,kb,kh,kw), bias (Cout) -> (Cout,Bo,Ho,Wo).
template <typename T>
BasicTensor<T> conv3d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& bias, const Conv3dGeometry& g);
template <typename T>
void conv3d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     const Conv3dGeometry& g, BasicTensor<T>* dx, BasicTensor<T>* dw,
                     BasicTensor<T>* dbias);

/// Per-slice normalization saved state: mean and 1/sqrt(var + eps) per slice.
template <typename T>
struct NormStats {
  std::vector<T> mean, rstd;
};

/// x (C, ...) normalized per channel over all trailing axes.
template <typename T>
BasicTensor<T> instance_norm_forward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                     const BasicTensor<T>& beta, T eps, NormStats<T>* stats);
template <typename T>
void instance_norm_backward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                            const NormStats<T>& stats, const BasicTensor<T>& dy,
                            BasicTensor<T>* dx, BasicTensor<T>* dgamma, BasicTensor<T>* dbeta);

/// x (L, D) normalized per row over D.
template <typename T>
BasicTensor<T> layer_norm_forward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                  const BasicTensor<T>& beta, T eps, NormStats<T>* stats);
template <typename T>
void layer_norm_backward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                         const NormStats<T>& stats, const BasicTensor<T>& dy, BasicTensor<T>* dx,
                         BasicTensor<T>* dgamma, BasicTensor<T>* dbeta);

/// x (L, Din), w (Dout, Din), bias (Dout) -> (L, Dout).
template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& bias);
template <typename T>
void linear_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* dbias);

/// Causal depthwise conv along L: x (L, D), w (D, K), bias (D).
/// y[t,d] = bias[d] + sum_k w[d,k] * x[t-(K-1)+k, d], zero outside [0, L).
template <typename T>
BasicTensor<T> causal_conv1d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                     const BasicTensor<T>& bias);
template <typename T>
void causal_conv1d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                            const BasicTensor<T>& dy, BasicTensor<T>* dx, BasicTensor<T>* dw,
                            BasicTensor<T>* dbias);

/// Selective recurrence with per-token parameters:
///   A[d,n]     = -exp(a_log[d,n])
///   h_t[d,n]   = exp(delta[t,d] A[d,n]) h_{t-1}[d,n] + (delta[t,d] b[t,n]) u[t,d]
///   y[t,d]     = sum_n c[t,n] h_t[d,n]
/// u, delta (L, D); a_log (D, N); b, c (L, N). When `states` is non-null it
/// receives every h_t, shape (L, D, N), for the backward pass.
template <typename T>
BasicTensor<T> selective_scan_forward(const BasicTensor<T>& u, const BasicTensor<T>& delta,
                                      const BasicTensor<T>& a_log, const BasicTensor<T>& b,
                                      const BasicTensor<T>& c, BasicTensor<T>* states);
template <typename T>
void selective_scan_backward(const BasicTensor<T>& u, const BasicTensor<T>& delta,
                             const BasicTensor<T>& a_log, const BasicTensor<T>& b,
                             const BasicTensor<T>& c, const BasicTensor<T>& states,
                             const BasicTensor<T>& dy, BasicTensor<T>* du,
                             BasicTensor<T>* ddelta, BasicTensor<T>* da_log, BasicTensor<T>* db,
                             BasicTensor<T>* dc);

/// Nearest-neighbour 2x along the last two axes of (C, B, H, W).
template <typename T>
BasicTensor<T> upsample2x_forward(const BasicTensor<T>& x);
template <typename T>
void upsample2x_backward(const BasicTensor<T>& dy, BasicTensor<T>* dx);

}  // namespace ssum::kernels

#endif  // SSUM_KERNELS_HPP
