// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Network blocks and the U-shaped denoiser.
//
// Layout for L mamba blocks with channels c_1..c_L (c_0 = base):
//   F_0 = FeatureExtractor(y)                              conv 1 -> c_0
//   F_i = MambaBlock_i(LReLU(Conv_i(F_{i-1})))             stride (1,2,2) on downsampling blocks
//   G_L = F_L
//   G_{i-1} = LReLU(Conv'_i(Up?(G_i))) + F_{i-1}           resolution-matched skips
//   out = y + Reconstructor(G_0)                           conv c_0 -> 1, zero-initialised
// MambaBlock(f) = R + BiSsm(R), R = residual blocks applied to f.
// Band extents are never resampled; only rows and columns are halved/doubled.

#ifndef SSUM_MODEL_HPP
#define SSUM_MODEL_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ssum/autodiff.hpp"
#include "ssum/params.hpp"
#include "ssum/rng.hpp"
#include "ssum/scan.hpp"

namespace ssum {

struct ModelConfig {
  std::size_t base_channels = 32;
  std::vector<std::size_t> channel_multipliers{1, 2, 2, 4, 4, 8};
  std::vector<std::size_t> downsample_blocks{2, 4, 6};  // 1-based block numbers
  std::size_t residual_blocks = 2;
  std::size_t state_dim = 16;
  std::size_t conv1d_width = 4;
  bool continuous_scan = true;  // false: sweep order in every block
  bool bidirectional = true;
  double leaky_slope = 0.01;

  std::size_t num_blocks() const { return channel_multipliers.size(); }
  /// Channels of F_0..F_L.
  std::vector<std::size_t> channels() const;
  bool downsamples(std::size_t block) const;
  /// Required divisor of rows and columns.
  std::size_t spatial_factor() const;
  ScanScheme scheme_for_block(std::size_t block) const;
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameter names and shapes in initialization order.
std::vector<std::pair<std::string, Shape>> model_layout(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

template <typename T>
ParameterSet<T> init_model(const ModelConfig& cfg, Rng& rng);

/// Intermediate tokens of one bidirectional SSM layer, in scan order.
struct BiSsmTrace {
  Var tokens, gate, value, forward, backward, mixed, out;
};

/// Gate mixing: forward * gate (+ backward * gate when bidirectional).
template <typename T>
Var gate_mix(Graph<T>& g, Var forward, Var backward, Var gate, bool bidirectional);

/// One selective-SSM branch over (L, D) tokens: SiLU(Conv1D) then the scan.
template <typename T>
Var ssm_branch(ParamBinder<T>& p, const std::string& prefix, Var tokens);

/// Bidirectional SSM over (L, D) tokens; returns the output tokens.
template <typename T>
Var bidirectional_ssm_tokens(ParamBinder<T>& p, const std::string& prefix, Var tokens,
                             bool bidirectional, BiSsmTrace* trace = nullptr);

/// Feature map (D,B,H,W) -> tokens -> bidirectional SSM -> feature map.
template <typename T>
Var bidirectional_ssm_layer(ParamBinder<T>& p, const std::string& prefix, Var x,
                            const ScanPermutation& perm, bool bidirectional,
                            BiSsmTrace* trace = nullptr);

/// LReLU(InstanceNorm(Conv3D(x))) + x.
template <typename T>
Var residual_block(ParamBinder<T>& p, const std::string& prefix, Var x, T slope);

template <typename T>
Var sscs_mamba_block(ParamBinder<T>& p, const std::string& prefix, Var x, ScanScheme scheme,
                     std::size_t residual_blocks, bool bidirectional, T slope);

/// Shapes visited by forward(), for symmetry checks.
struct ForwardTrace {
  std::vector<Shape> encoder;  // F_1..F_L
  std::vector<Shape> decoder;  // G_{L-1}..G_0
};

/// y: (1, B, H, W) noisy cube -> (1, B, H, W) estimate.
template <typename T>
Var model_forward(ParamBinder<T>& p, const ModelConfig& cfg, Var y, ForwardTrace* trace = nullptr);

/// Mean over the batch of squared Frobenius errors. Item losses are summed
/// in ascending order, so the value does not depend on item order.
template <typename T>
Var batch_loss(Graph<T>& g, const std::vector<Var>& estimates, const std::vector<Var>& targets);

/// Inference on a (B, H, W) cube whose spatial extents satisfy the config.
template <typename T>
BasicTensor<T> run_model(const ParameterSet<T>& params, const ModelConfig& cfg,
                         const BasicTensor<T>& cube);

}  // namespace ssum

#endif  // SSUM_MODEL_HPP
