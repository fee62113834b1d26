// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/autodiff.hpp"

#include <cmath>

#include "ssum/error.hpp"
#include "ssum/rng.hpp"
#include "ssum/ssm.hpp"

namespace ssum {

template <typename T>
typename Graph<T>::Node& Graph<T>::node(Var v) {
  if (v.id >= nodes_.size()) throw UsageError("autodiff: invalid variable");
  return nodes_[v.id];
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node(Var v) const {
  if (v.id >= nodes_.size()) throw UsageError("autodiff: invalid variable");
  return nodes_[v.id];
}

template <typename T>
Var Graph<T>::leaf(BasicTensor<T> value, bool requires_grad, std::string tag) {
  require_finite(value, "leaf");
  Node n;
  n.tag = std::move(tag);
  n.value = std::move(value);
  n.requires_grad = record_ && requires_grad;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Graph<T>::record(std::string tag, BasicTensor<T> value, std::vector<Var> inputs, Backward fn) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by " + tag);
  Node n;
  n.tag = std::move(tag);
  n.value = std::move(value);
  for (Var in : inputs) n.requires_grad = n.requires_grad || node(in).requires_grad;
  n.requires_grad = record_ && n.requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.fn = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
BasicTensor<T>* Graph<T>::grad_slot(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = BasicTensor<T>(n.value.shape());
    n.has_grad = true;
  }
  return &n.grad;
}

template <typename T>
BasicTensor<T> Graph<T>::grad(Var v) const {
  const Node& n = node(v);
  return n.has_grad ? n.grad : BasicTensor<T>(n.value.shape());
}

template <typename T>
void Graph<T>::backward(Var out, const BasicTensor<T>& seed) {
  if (!record_) throw UsageError("backward on a graph that was not recording");
  require_same_shape(value(out), seed, "backward seed");
  BasicTensor<T>* slot = grad_slot(out);
  if (!slot) return;
  for (std::size_t i = 0; i < seed.size(); ++i) (*slot)[i] += seed[i];
  for (std::size_t id = out.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.fn) continue;
    if (!n.grad.all_finite()) throw NumericError("non-finite gradient at " + n.tag);
    n.fn(*this, n.grad);
  }
}

template <typename T>
void Graph<T>::backward(Var out) {
  backward(out, BasicTensor<T>(value(out).shape(), T(1)));
}

namespace ad {
namespace {

template <typename T>
BasicTensor<T> map(const BasicTensor<T>& a, auto&& f) {
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

}  // namespace

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  BasicTensor<T> out = elementwise(ElementwiseOp::add, g.value(a), g.value(b));
  return g.record("add", std::move(out), {a, b}, [a, b](Graph<T>& gr, const BasicTensor<T>& go) {
    for (Var v : {a, b})
      if (auto* s = gr.grad_slot(v))
        for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += go[i];
  });
}

template <typename T>
Var sub(Graph<T>& g, Var a, Var b) {
  BasicTensor<T> out = elementwise(ElementwiseOp::sub, g.value(a), g.value(b));
  return g.record("sub", std::move(out), {a, b}, [a, b](Graph<T>& gr, const BasicTensor<T>& go) {
    if (auto* s = gr.grad_slot(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += go[i];
    if (auto* s = gr.grad_slot(b))
      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] -= go[i];
  });
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  BasicTensor<T> out = elementwise(ElementwiseOp::mul, g.value(a), g.value(b));
  return g.record("mul", std::move(out), {a, b}, [a, b](Graph<T>& gr, const BasicTensor<T>& go) {
    const auto& va = gr.value(a);
    const auto& vb = gr.value(b);
    if (auto* s = gr.grad_slot(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += go[i] * vb[i];
    if (auto* s = gr.grad_slot(b))
      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += go[i] * va[i];
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T k) {
  BasicTensor<T> out = elementwise(ElementwiseOp::mul, g.value(a), k);
  return g.record("scale", std::move(out), {a}, [a, k](Graph<T>& gr, const BasicTensor<T>& go) {
    if (auto* s = gr.grad_slot(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += go[i] * k;
  });
}

template <typename T>
Var silu(Graph<T>& g, Var a) {
  BasicTensor<T> out = map(g.value(a), [](T x) { return x * sigmoid(x); });
  return g.record("silu", std::move(out), {a}, [a](Graph<T>& gr, const BasicTensor<T>& go) {
    const auto& x = gr.value(a);
    if (auto* s = gr.grad_slot(a))
      for (std::size_t i = 0; i < go.size(); ++i) {
        const T sg = sigmoid(x[i]);
        (*s)[i] += go[i] * (sg * (T(1) + x[i] * (T(1) - sg)));
      }
  });
}

template <typename T>
Var leaky_relu(Graph<T>& g, Var a, T slope) {
  BasicTensor<T> out = map(g.value(a), [slope](T x) { return x >= T(0) ? x : slope * x; });
  return g.record("leaky_relu", std::move(out), {a},
                  [a, slope](Graph<T>& gr, const BasicTensor<T>& go) {
                    const auto& x = gr.value(a);
                    if (auto* s = gr.grad_slot(a))
                      for (std::size_t i = 0; i < go.size(); ++i)
                        (*s)[i] += go[i] * (x[i] >= T(0) ? T(1) : slope);
                  });
}

template <typename T>
Var softplus(Graph<T>& g, Var a) {
  BasicTensor<T> out = map(g.value(a), [](T x) { return ssum::softplus(x); });
  return g.record("softplus", std::move(out), {a}, [a](Graph<T>& gr, const BasicTensor<T>& go) {
    const auto& x = gr.value(a);
    if (auto* s = gr.grad_slot(a))
      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += go[i] * sigmoid(x[i]);
  });
}

template <typename T>
Var sum(Graph<T>& g, Var a) {
  BasicTensor<T> out(Shape{}, pairwise_sum(g.value(a).data()));
  return g.record("sum", std::move(out), {a}, [a](Graph<T>& gr, const BasicTensor<T>& go) {
    if (auto* s = gr.grad_slot(a))
      for (auto& v : s->data()) v += go[0];
  });
}

template <typename T>
Var squared_error(Graph<T>& g, Var a, Var b) {
  const auto& va = g.value(a);
  const auto& vb = g.value(b);
  require_same_shape(va, vb, "squared_error");
  std::vector<T> sq(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) sq[i] = (va[i] - vb[i]) * (va[i] - vb[i]);
  BasicTensor<T> out(Shape{}, pairwise_sum(std::span<const T>(sq)));
  return g.record("squared_error", std::move(out), {a, b},
                  [a, b](Graph<T>& gr, const BasicTensor<T>& go) {
                    const auto& xa = gr.value(a);
                    const auto& xb = gr.value(b);
                    const T k = T(2) * go[0];
                    if (auto* s = gr.grad_slot(a))
                      for (std::size_t i = 0; i < xa.size(); ++i) (*s)[i] += k * (xa[i] - xb[i]);
                    if (auto* s = gr.grad_slot(b))
                      for (std::size_t i = 0; i < xa.size(); ++i) (*s)[i] -= k * (xa[i] - xb[i]);
                  });
}

template <typename T>
Var conv3d(Graph<T>& g, Var x, Var w, Var bias, const kernels::Conv3dGeometry& geom) {
  BasicTensor<T> out = kernels::conv3d_forward(g.value(x), g.value(w), g.value(bias), geom);
  return g.record("conv3d", std::move(out), {x, w, bias},
                  [x, w, bias, geom](Graph<T>& gr, const BasicTensor<T>& go) {
                    kernels::conv3d_backward(gr.value(x), gr.value(w), go, geom, gr.grad_slot(x),
                                             gr.grad_slot(w), gr.grad_slot(bias));
                  });
}

template <typename T>
Var instance_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps) {
  kernels::NormStats<T> stats;
  BasicTensor<T> out =
      kernels::instance_norm_forward(g.value(x), g.value(gamma), g.value(beta), eps, &stats);
  return g.record("instance_norm", std::move(out), {x, gamma, beta},
                  [x, gamma, beta, stats = std::move(stats)](Graph<T>& gr, const BasicTensor<T>& go) {
                    kernels::instance_norm_backward(gr.value(x), gr.value(gamma), stats, go,
                                                    gr.grad_slot(x), gr.grad_slot(gamma),
                                                    gr.grad_slot(beta));
                  });
}

template <typename T>
Var layer_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps) {
  kernels::NormStats<T> stats;
  BasicTensor<T> out =
      kernels::layer_norm_forward(g.value(x), g.value(gamma), g.value(beta), eps, &stats);
  return g.record("layer_norm", std::move(out), {x, gamma, beta},
                  [x, gamma, beta, stats = std::move(stats)](Graph<T>& gr, const BasicTensor<T>& go) {
                    kernels::layer_norm_backward(gr.value(x), gr.value(gamma), stats, go,
                                                 gr.grad_slot(x), gr.grad_slot(gamma),
                                                 gr.grad_slot(beta));
                  });
}

template <typename T>
Var linear(Graph<T>& g, Var x, Var w, Var bias) {
  BasicTensor<T> out = kernels::linear_forward(g.value(x), g.value(w), g.value(bias));
  return g.record("linear", std::move(out), {x, w, bias},
                  [x, w, bias](Graph<T>& gr, const BasicTensor<T>& go) {
                    kernels::linear_backward(gr.value(x), gr.value(w), go, gr.grad_slot(x),
                                             gr.grad_slot(w), gr.grad_slot(bias));
                  });
}

template <typename T>
Var causal_conv1d(Graph<T>& g, Var x, Var w, Var bias) {
  BasicTensor<T> out = kernels::causal_conv1d_forward(g.value(x), g.value(w), g.value(bias));
  return g.record("causal_conv1d", std::move(out), {x, w, bias},
                  [x, w, bias](Graph<T>& gr, const BasicTensor<T>& go) {
                    kernels::causal_conv1d_backward(gr.value(x), gr.value(w), go, gr.grad_slot(x),
                                                    gr.grad_slot(w), gr.grad_slot(bias));
                  });
}

template <typename T>
Var selective_scan(Graph<T>& g, Var u, Var delta, Var a_log, Var b, Var c) {
  BasicTensor<T> states;
  const bool keep = g.recording();
  BasicTensor<T> out = kernels::selective_scan_forward(g.value(u), g.value(delta), g.value(a_log),
                                                       g.value(b), g.value(c),
                                                       keep ? &states : static_cast<BasicTensor<T>*>(nullptr));
  return g.record(
      "selective_scan", std::move(out), {u, delta, a_log, b, c},
      [u, delta, a_log, b, c, states = std::move(states)](Graph<T>& gr, const BasicTensor<T>& go) {
        kernels::selective_scan_backward(gr.value(u), gr.value(delta), gr.value(a_log), gr.value(b),
                                         gr.value(c), states, go, gr.grad_slot(u),
                                         gr.grad_slot(delta), gr.grad_slot(a_log), gr.grad_slot(b),
                                         gr.grad_slot(c));
      });
}

template <typename T>
Var upsample2x(Graph<T>& g, Var x) {
  BasicTensor<T> out = kernels::upsample2x_forward(g.value(x));
  return g.record("upsample2x", std::move(out), {x}, [x](Graph<T>& gr, const BasicTensor<T>& go) {
    if (auto* s = gr.grad_slot(x)) kernels::upsample2x_backward(go, s);
  });
}

template <typename T>
Var volume_to_tokens(Graph<T>& g, Var x, const ScanPermutation& p) {
  const auto& v = g.value(x);
  const GridDims& dims = p.dims();
  if (v.rank() != 4 || v.dim(1) != dims.bands || v.dim(2) != dims.rows || v.dim(3) != dims.cols)
    throw UsageError("scan permutation dims do not match feature map " + shape_str(v.shape()));
  const std::size_t d = v.dim(0), len = p.length();
  BasicTensor<T> out(Shape{len, d});
  const auto fwd = p.forward();
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t c = 0; c < d; ++c) out[t * d + c] = v[c * len + fwd[t]];
  std::vector<std::size_t> index(fwd.begin(), fwd.end());
  return g.record("volume_to_tokens", std::move(out), {x},
                  [x, index = std::move(index), d](Graph<T>& gr, const BasicTensor<T>& go) {
                    auto* s = gr.grad_slot(x);
                    if (!s) return;
                    const std::size_t len = index.size();
                    for (std::size_t t = 0; t < len; ++t)
                      for (std::size_t c = 0; c < d; ++c) (*s)[c * len + index[t]] += go[t * d + c];
                  });
}

template <typename T>
Var tokens_to_volume(Graph<T>& g, Var s, const ScanPermutation& p) {
  const auto& v = g.value(s);
  const std::size_t len = p.length();
  if (v.rank() != 2 || v.dim(0) != len) throw UsageError("tokens_to_volume: length mismatch");
  const std::size_t d = v.dim(1);
  const GridDims& dims = p.dims();
  BasicTensor<T> out(Shape{d, dims.bands, dims.rows, dims.cols});
  const auto fwd = p.forward();
  for (std::size_t t = 0; t < len; ++t)
    for (std::size_t c = 0; c < d; ++c) out[c * len + fwd[t]] = v[t * d + c];
  std::vector<std::size_t> index(fwd.begin(), fwd.end());
  return g.record("tokens_to_volume", std::move(out), {s},
                  [s, index = std::move(index), d](Graph<T>& gr, const BasicTensor<T>& go) {
                    auto* slot = gr.grad_slot(s);
                    if (!slot) return;
                    const std::size_t len = index.size();
                    for (std::size_t t = 0; t < len; ++t)
                      for (std::size_t c = 0; c < d; ++c) (*slot)[t * d + c] += go[c * len + index[t]];
                  });
}

template <typename T>
Var flip_tokens(Graph<T>& g, Var s) {
  const auto& v = g.value(s);
  if (v.rank() != 2) throw UsageError("flip_tokens: expected (L, D)");
  const std::size_t len = v.dim(0), d = v.dim(1);
  BasicTensor<T> out(v.shape());
  for (std::size_t t = 0; t < len; ++t)
    std::copy_n(v.data().data() + (len - 1 - t) * d, d, out.data().data() + t * d);
  return g.record("flip_tokens", std::move(out), {s}, [s, len, d](Graph<T>& gr, const BasicTensor<T>& go) {
    auto* slot = gr.grad_slot(s);
    if (!slot) return;
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t c = 0; c < d; ++c) (*slot)[(len - 1 - t) * d + c] += go[t * d + c];
  });
}

template <typename T>
Var gather(Graph<T>& g, Var x, std::vector<std::size_t> index) {
  BasicTensor<T> out = ssum::gather(g.value(x), std::span<const std::size_t>(index));
  return g.record("gather", std::move(out), {x},
                  [x, index = std::move(index)](Graph<T>& gr, const BasicTensor<T>& go) {
                    if (auto* s = gr.grad_slot(x))
                      for (std::size_t k = 0; k < index.size(); ++k) (*s)[index[k]] += go[k];
                  });
}

template <typename T>
Var scatter(Graph<T>& g, Var base, std::vector<std::size_t> index, Var values) {
  const auto& vv = g.value(values);
  if (vv.size() != index.size()) throw UsageError("scatter: index/value length mismatch");
  BasicTensor<T> out = ssum::scatter(g.value(base), std::span<const std::size_t>(index), vv.data());
  return g.record("scatter", std::move(out), {base, values},
                  [base, values, index = std::move(index)](Graph<T>& gr, const BasicTensor<T>& go) {
                    if (auto* s = gr.grad_slot(base)) {
                      BasicTensor<T> masked = go;
                      for (std::size_t i : index) masked[i] = T(0);
                      for (std::size_t i = 0; i < go.size(); ++i) (*s)[i] += masked[i];
                    }
                    if (auto* s = gr.grad_slot(values))
                      for (std::size_t k = 0; k < index.size(); ++k) (*s)[k] += go[index[k]];
                  });
}

}  // namespace ad

double grad_check(const std::function<Var(Graph<double>&, std::span<const Var>)>& f,
                  std::vector<Tensor64> inputs, const GradCheckOptions& opt) {
  Rng rng(opt.seed ^ 0xC0FFEEULL);
  auto evaluate = [&](Graph<double>& g, std::vector<Var>& vars) {
    vars.clear();
    for (const auto& t : inputs) vars.push_back(g.leaf(t, true));
    return f(g, vars);
  };

  // Fixed random weighting makes the objective sensitive to every output.
  Graph<double> g0(false);
  std::vector<Var> vars;
  const Tensor64 probe = g0.value(evaluate(g0, vars));
  Tensor64 weight(probe.shape());
  for (auto& v : weight.data()) v = rng.uniform(0.5, 1.5) * (rng.coin() ? 1.0 : -1.0);

  auto objective = [&]() {
    Graph<double> g(false);
    std::vector<Var> vs;
    const Tensor64& out = g.value(evaluate(g, vs));
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += weight[i] * out[i];
    return acc;
  };

  Graph<double> g(true);
  const Var out = evaluate(g, vars);
  g.backward(out, weight);

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor64 analytic = g.grad(vars[k]);
    const std::size_t n = inputs[k].size();
    std::vector<std::size_t> coords;
    if (opt.max_coords == 0 || opt.max_coords >= n) {
      for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (std::size_t j = 0; j < opt.max_coords; ++j) coords.push_back(rng.below(n));
    }
    for (std::size_t i : coords) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + opt.eps;
      const double up = objective();
      inputs[k][i] = orig - opt.eps;
      const double down = objective();
      inputs[k][i] = orig;
      const double numeric = (up - down) / (2.0 * opt.eps);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

#define SSUM_INSTANTIATE_AD(T)                                                                  \
  template class Graph<T>;                                                                     \
  namespace ad {                                                                               \
  template Var add(Graph<T>&, Var, Var);                                                       \
  template Var sub(Graph<T>&, Var, Var);                                                       \
  template Var mul(Graph<T>&, Var, Var);                                                       \
  template Var scale(Graph<T>&, Var, T);                                                       \
  template Var silu(Graph<T>&, Var);                                                           \
  template Var leaky_relu(Graph<T>&, Var, T);                                                  \
  template Var softplus(Graph<T>&, Var);                                                       \
  template Var sum(Graph<T>&, Var);                                                            \
  template Var squared_error(Graph<T>&, Var, Var);                                             \
  template Var conv3d(Graph<T>&, Var, Var, Var, const kernels::Conv3dGeometry&);               \
  template Var instance_norm(Graph<T>&, Var, Var, Var, T);                                     \
  template Var layer_norm(Graph<T>&, Var, Var, Var, T);                                        \
  template Var linear(Graph<T>&, Var, Var, Var);                                               \
  template Var causal_conv1d(Graph<T>&, Var, Var, Var);                                        \
  template Var selective_scan(Graph<T>&, Var, Var, Var, Var, Var);                             \
  template Var upsample2x(Graph<T>&, Var);                                                     \
  template Var volume_to_tokens(Graph<T>&, Var, const ScanPermutation&);                       \
  template Var tokens_to_volume(Graph<T>&, Var, const ScanPermutation&);                       \
  template Var flip_tokens(Graph<T>&, Var);                                                    \
  template Var gather(Graph<T>&, Var, std::vector<std::size_t>);                               \
  template Var scatter(Graph<T>&, Var, std::vector<std::size_t>, Var);                         \
  }

SSUM_INSTANTIATE_AD(float)
SSUM_INSTANTIATE_AD(double)

}  // namespace ssum
