// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Tape-based reverse-mode differentiation.
//
// A Graph records nodes in evaluation order, so the node list is already a
// topological order. Each node keeps its value, the ids of its inputs, and a
// closure that pushes the node's gradient into its inputs' gradients.
// Backward visits nodes in reverse id order, which makes gradient
// accumulation order (and therefore the result) deterministic.

#ifndef SSUM_AUTODIFF_HPP
#define SSUM_AUTODIFF_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ssum/kernels.hpp"
#include "ssum/scan.hpp"
#include "ssum/tensor.hpp"

namespace ssum {

struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const noexcept { return id != npos; }
};

template <typename T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, const BasicTensor<T>& grad_out)>;

  /// With record = false nothing is kept for backward (inference mode).
  explicit Graph(bool record = true) : record_(record) {}

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var leaf(BasicTensor<T> value, bool requires_grad = false, std::string tag = "leaf");

  /// Appends an op node. `fn` is dropped unless recording and some input
  /// requires a gradient. Throws NumericError if `value` is not finite.
  Var record(std::string tag, BasicTensor<T> value, std::vector<Var> inputs, Backward fn);

  const BasicTensor<T>& value(Var v) const { return node(v).value; }
  const std::string& tag(Var v) const { return node(v).tag; }
  const std::vector<Var>& inputs(Var v) const { return node(v).inputs; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  /// Gradient accumulator of v, zero-initialised on first use; null when v
  /// does not require a gradient.
  BasicTensor<T>* grad_slot(Var v);

  /// Gradient of v after backward(); zeros if nothing flowed into it.
  BasicTensor<T> grad(Var v) const;

  /// Seeds d(out) = seed and propagates to every node that requires grad.
  void backward(Var out, const BasicTensor<T>& seed);
  /// Scalar output, seed 1.
  void backward(Var out);

 private:
  struct Node {
    std::string tag;
    BasicTensor<T> value;
    std::vector<Var> inputs;
    Backward fn;
    bool requires_grad = false;
    bool has_grad = false;
    BasicTensor<T> grad;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  bool record_;
  std::vector<Node> nodes_;
};

namespace ad {

template <typename T> Var add(Graph<T>& g, Var a, Var b);
template <typename T> Var sub(Graph<T>& g, Var a, Var b);
template <typename T> Var mul(Graph<T>& g, Var a, Var b);
template <typename T> Var scale(Graph<T>& g, Var a, T s);
template <typename T> Var silu(Graph<T>& g, Var a);
template <typename T> Var leaky_relu(Graph<T>& g, Var a, T slope);
template <typename T> Var softplus(Graph<T>& g, Var a);

/// Sum of all elements, shape {}.
template <typename T> Var sum(Graph<T>& g, Var a);
/// Squared Frobenius norm of (a - b), shape {}.
template <typename T> Var squared_error(Graph<T>& g, Var a, Var b);

template <typename T>
Var conv3d(Graph<T>& g, Var x, Var w, Var bias, const kernels::Conv3dGeometry& geom);
template <typename T>
Var instance_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps = T(1e-5));
template <typename T>
Var layer_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps = T(1e-5));
template <typename T> Var linear(Graph<T>& g, Var x, Var w, Var bias);
template <typename T> Var causal_conv1d(Graph<T>& g, Var x, Var w, Var bias);
template <typename T>
Var selective_scan(Graph<T>& g, Var u, Var delta, Var a_log, Var b, Var c);
template <typename T> Var upsample2x(Graph<T>& g, Var x);

/// (D, B, H, W) feature map -> (L, D) tokens in scan order.
template <typename T> Var volume_to_tokens(Graph<T>& g, Var x, const ScanPermutation& p);
/// (L, D) tokens -> (D, B, H, W), the reverse of volume_to_tokens.
template <typename T> Var tokens_to_volume(Graph<T>& g, Var s, const ScanPermutation& p);
/// Reverses the token axis of (L, D).
template <typename T> Var flip_tokens(Graph<T>& g, Var s);

/// Flat gather (1-d result) and flat scatter (copy of base with values written).
template <typename T> Var gather(Graph<T>& g, Var x, std::vector<std::size_t> index);
template <typename T>
Var scatter(Graph<T>& g, Var base, std::vector<std::size_t> index, Var values);

}  // namespace ad

/// Central-difference check of d(sum(w * f(x)))/dx for a graph-building
/// function f over 64-bit inputs, where w is a fixed random weighting. Returns
/// the largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over
/// the checked coordinates of every input (all coordinates when max_coords is 0).
struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

double grad_check(const std::function<Var(Graph<double>&, std::span<const Var>)>& f,
                  std::vector<Tensor64> inputs, const GradCheckOptions& opt = {});

}  // namespace ssum

#endif  // SSUM_AUTODIFF_HPP
