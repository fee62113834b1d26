// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/model.hpp"

#include <algorithm>
#include <cmath>

#include "ssum/error.hpp"
#include "ssum/ssm.hpp"

namespace ssum {
namespace {

constexpr std::size_t kKernel = 3;

kernels::Conv3dGeometry same_conv() { return {{1, 1, 1}, {1, 1, 1}}; }
kernels::Conv3dGeometry down_conv() { return {{1, 2, 2}, {1, 1, 1}}; }

std::string block_name(std::size_t i) { return "blk" + std::to_string(i); }

void add_conv(std::vector<std::pair<std::string, Shape>>& out, const std::string& name,
              std::size_t cin, std::size_t cout) {
  out.emplace_back(name + ".w", Shape{cout, cin, kKernel, kKernel, kKernel});
  out.emplace_back(name + ".b", Shape{cout});
}

void add_branch(std::vector<std::pair<std::string, Shape>>& out, const std::string& name,
                std::size_t d, std::size_t n, std::size_t k) {
  out.emplace_back(name + ".conv.w", Shape{d, k});
  out.emplace_back(name + ".conv.b", Shape{d});
  out.emplace_back(name + ".dt.w", Shape{d, d});
  out.emplace_back(name + ".dt.b", Shape{d});
  out.emplace_back(name + ".B.w", Shape{n, d});
  out.emplace_back(name + ".B.b", Shape{n});
  out.emplace_back(name + ".C.w", Shape{n, d});
  out.emplace_back(name + ".C.b", Shape{n});
  out.emplace_back(name + ".A_log", Shape{d, n});
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<std::size_t> ModelConfig::channels() const {
  std::vector<std::size_t> c{base_channels};
  for (std::size_t m : channel_multipliers) c.push_back(base_channels * m);
  return c;
}

bool ModelConfig::downsamples(std::size_t block) const {
  return std::find(downsample_blocks.begin(), downsample_blocks.end(), block) != downsample_blocks.end();
}

std::size_t ModelConfig::spatial_factor() const {
  std::size_t f = 1;
  for (std::size_t i = 1; i <= num_blocks(); ++i)
    if (downsamples(i)) f *= 2;
  return f;
}

ScanScheme ModelConfig::scheme_for_block(std::size_t block) const {
  if (!continuous_scan) return ScanScheme::Sweep;
  return kContinuousSchemes[(block - 1) % kContinuousSchemes.size()];
}

void ModelConfig::validate() const {
  if (base_channels == 0) throw UsageError("model: base_channels must be >= 1");
  if (channel_multipliers.empty()) throw UsageError("model: at least one block is required");
  for (std::size_t m : channel_multipliers)
    if (m == 0) throw UsageError("model: channel multipliers must be >= 1");
  for (std::size_t b : downsample_blocks)
    if (b == 0 || b > num_blocks()) throw UsageError("model: downsample block out of range");
  if (state_dim == 0) throw UsageError("model: state_dim must be >= 1");
  if (conv1d_width == 0) throw UsageError("model: conv1d_width must be >= 1");
  if (!(leaky_slope >= 0.0)) throw UsageError("model: leaky_slope must be >= 0");
}

std::vector<std::pair<std::string, Shape>> model_layout(const ModelConfig& cfg) {
  cfg.validate();
  const auto ch = cfg.channels();
  std::vector<std::pair<std::string, Shape>> out;
  add_conv(out, "fe", 1, ch[0]);
  for (std::size_t i = 1; i <= cfg.num_blocks(); ++i) {
    const std::size_t d = ch[i];
    add_conv(out, "enc" + std::to_string(i), ch[i - 1], d);
    const std::string blk = block_name(i);
    for (std::size_t r = 0; r < cfg.residual_blocks; ++r) {
      const std::string res = blk + ".res" + std::to_string(r);
      add_conv(out, res, d, d);
      out.emplace_back(res + ".norm.g", Shape{d});
      out.emplace_back(res + ".norm.b", Shape{d});
    }
    const std::string ssm = blk + ".ssm";
    out.emplace_back(ssm + ".norm.g", Shape{d});
    out.emplace_back(ssm + ".norm.b", Shape{d});
    out.emplace_back(ssm + ".gate.w", Shape{d, d});
    out.emplace_back(ssm + ".gate.b", Shape{d});
    out.emplace_back(ssm + ".value.w", Shape{d, d});
    out.emplace_back(ssm + ".value.b", Shape{d});
    add_branch(out, ssm + ".fwd", d, cfg.state_dim, cfg.conv1d_width);
    if (cfg.bidirectional) add_branch(out, ssm + ".bwd", d, cfg.state_dim, cfg.conv1d_width);
    out.emplace_back(ssm + ".out.w", Shape{d, d});
    out.emplace_back(ssm + ".out.b", Shape{d});
  }
  for (std::size_t i = cfg.num_blocks(); i >= 1; --i) add_conv(out, "dec" + std::to_string(i), ch[i], ch[i - 1]);
  add_conv(out, "rec", ch[0], 1);
  return out;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  std::size_t n = 0;
  for (const auto& [name, shape] : model_layout(cfg)) n += shape_size(shape);
  return n;
}

template <typename T>
ParameterSet<T> init_model(const ModelConfig& cfg, Rng& rng) {
  ParameterSet<T> params;
  auto uniform = [&](const Shape& s, double bound) {
    BasicTensor<T> t(s);
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
  };
  for (const auto& [name, shape] : model_layout(cfg)) {
    BasicTensor<T> value(shape);
    if (name.rfind("rec.", 0) == 0) {
      // zero: the network starts as the identity map
    } else if (ends_with(name, ".norm.g")) {
      value.fill(T(1));
    } else if (ends_with(name, ".A_log")) {
      const std::size_t n = shape[1];
      for (std::size_t i = 0; i < value.size(); ++i) value[i] = static_cast<T>(std::log(double(i % n + 1)));
    } else if (ends_with(name, ".dt.b")) {
      for (auto& v : value.data())
        v = static_cast<T>(softplus_inverse(std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)))));
    } else if (ends_with(name, ".w")) {
      const std::size_t fan_in = shape_size(shape) / shape[0];
      value = uniform(shape, 1.0 / std::sqrt(double(fan_in)));
    }
    params.add(name, std::move(value));
  }
  return params;
}

template <typename T>
Var gate_mix(Graph<T>& g, Var forward, Var backward, Var gate, bool bidirectional) {
  const Var f = ad::mul(g, forward, gate);
  if (!bidirectional) return f;
  return ad::add(g, f, ad::mul(g, backward, gate));
}

template <typename T>
Var ssm_branch(ParamBinder<T>& p, const std::string& prefix, Var tokens) {
  Graph<T>& g = p.graph();
  const Var u = ad::silu(g, ad::causal_conv1d(g, tokens, p(prefix + ".conv.w"), p(prefix + ".conv.b")));
  const Var delta = ad::softplus(g, ad::linear(g, u, p(prefix + ".dt.w"), p(prefix + ".dt.b")));
  const Var b = ad::linear(g, u, p(prefix + ".B.w"), p(prefix + ".B.b"));
  const Var c = ad::linear(g, u, p(prefix + ".C.w"), p(prefix + ".C.b"));
  return ad::selective_scan(g, u, delta, p(prefix + ".A_log"), b, c);
}

template <typename T>
Var bidirectional_ssm_tokens(ParamBinder<T>& p, const std::string& prefix, Var tokens,
                             bool bidirectional, BiSsmTrace* trace) {
  Graph<T>& g = p.graph();
  const Var normed = ad::layer_norm(g, tokens, p(prefix + ".norm.g"), p(prefix + ".norm.b"));
  const Var gate = ad::silu(g, ad::linear(g, normed, p(prefix + ".gate.w"), p(prefix + ".gate.b")));
  const Var value = ad::linear(g, normed, p(prefix + ".value.w"), p(prefix + ".value.b"));
  const Var fwd = ssm_branch(p, prefix + ".fwd", value);
  Var bwd;
  if (bidirectional) bwd = ad::flip_tokens(g, ssm_branch(p, prefix + ".bwd", ad::flip_tokens(g, value)));
  const Var mixed = gate_mix(g, fwd, bwd, gate, bidirectional);
  const Var out = ad::linear(g, mixed, p(prefix + ".out.w"), p(prefix + ".out.b"));
  if (trace) *trace = {tokens, gate, value, fwd, bwd, mixed, out};
  return out;
}

template <typename T>
Var bidirectional_ssm_layer(ParamBinder<T>& p, const std::string& prefix, Var x,
                            const ScanPermutation& perm, bool bidirectional, BiSsmTrace* trace) {
  Graph<T>& g = p.graph();
  const Var tokens = ad::volume_to_tokens(g, x, perm);
  const Var out = bidirectional_ssm_tokens(p, prefix, tokens, bidirectional, trace);
  return ad::tokens_to_volume(g, out, perm);
}

template <typename T>
Var residual_block(ParamBinder<T>& p, const std::string& prefix, Var x, T slope) {
  Graph<T>& g = p.graph();
  const Var conv = ad::conv3d(g, x, p(prefix + ".w"), p(prefix + ".b"), same_conv());
  if (g.value(conv).shape() != g.value(x).shape())
    throw UsageError("residual_block: convolution must preserve the feature shape");
  const Var normed = ad::instance_norm(g, conv, p(prefix + ".norm.g"), p(prefix + ".norm.b"));
  return ad::add(g, ad::leaky_relu(g, normed, slope), x);
}

template <typename T>
Var sscs_mamba_block(ParamBinder<T>& p, const std::string& prefix, Var x, ScanScheme scheme,
                     std::size_t residual_blocks, bool bidirectional, T slope) {
  Graph<T>& g = p.graph();
  Var r = x;
  for (std::size_t i = 0; i < residual_blocks; ++i)
    r = residual_block(p, prefix + ".res" + std::to_string(i), r, slope);
  const auto& shape = g.value(r).shape();
  const auto perm = cached_permutation(scheme, GridDims{shape[1], shape[2], shape[3]});
  const Var ssm = bidirectional_ssm_layer(p, prefix + ".ssm", r, *perm, bidirectional);
  return ad::add(g, r, ssm);
}

template <typename T>
Var model_forward(ParamBinder<T>& p, const ModelConfig& cfg, Var y, ForwardTrace* trace) {
  cfg.validate();
  Graph<T>& g = p.graph();
  const auto& in_shape = g.value(y).shape();
  if (in_shape.size() != 4 || in_shape[0] != 1)
    throw UsageError("model input must be (1, B, H, W), got " + shape_str(in_shape));
  const std::size_t factor = cfg.spatial_factor();
  if (in_shape[2] % factor != 0 || in_shape[3] % factor != 0)
    throw UsageError("spatial extents " + std::to_string(in_shape[2]) + "x" +
                     std::to_string(in_shape[3]) + " must be divisible by " + std::to_string(factor));
  const T slope = static_cast<T>(cfg.leaky_slope);

  std::vector<Var> feats;
  feats.push_back(ad::conv3d(g, y, p("fe.w"), p("fe.b"), same_conv()));
  for (std::size_t i = 1; i <= cfg.num_blocks(); ++i) {
    const std::string enc = "enc" + std::to_string(i);
    Var x = ad::conv3d(g, feats.back(), p(enc + ".w"), p(enc + ".b"),
                       cfg.downsamples(i) ? down_conv() : same_conv());
    x = ad::leaky_relu(g, x, slope);
    x = sscs_mamba_block(p, block_name(i), x, cfg.scheme_for_block(i), cfg.residual_blocks,
                         cfg.bidirectional, slope);
    if (trace) trace->encoder.push_back(g.value(x).shape());
    feats.push_back(x);
  }
  Var dec = feats.back();
  for (std::size_t i = cfg.num_blocks(); i >= 1; --i) {
    if (cfg.downsamples(i)) dec = ad::upsample2x(g, dec);
    const std::string name = "dec" + std::to_string(i);
    dec = ad::leaky_relu(g, ad::conv3d(g, dec, p(name + ".w"), p(name + ".b"), same_conv()), slope);
    dec = ad::add(g, dec, feats[i - 1]);
    if (trace) trace->decoder.push_back(g.value(dec).shape());
  }
  const Var rec = ad::conv3d(g, dec, p("rec.w"), p("rec.b"), same_conv());
  return ad::add(g, rec, y);
}

template <typename T>
BasicTensor<T> run_model(const ParameterSet<T>& params, const ModelConfig& cfg,
                         const BasicTensor<T>& cube) {
  if (cube.rank() != 3) throw UsageError("run_model: cube must be (B, H, W)");
  Graph<T> g(false);
  ParamBinder<T> p(g, params);
  const Var y = g.leaf(cube.reshaped({1, cube.dim(0), cube.dim(1), cube.dim(2)}));
  const Var out = model_forward(p, cfg, y);
  return g.value(out).reshaped(cube.shape());
}

template <typename T>
Var batch_loss(Graph<T>& g, const std::vector<Var>& estimates, const std::vector<Var>& targets) {
  if (estimates.empty() || estimates.size() != targets.size())
    throw UsageError("batch_loss: need matching, non-empty estimate and target lists");
  std::vector<Var> items;
  std::vector<T> values;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    items.push_back(ad::squared_error(g, estimates[i], targets[i]));
    values.push_back(g.value(items.back())[0]);
  }
  std::sort(values.begin(), values.end());
  T total = T(0);
  for (T v : values) total += v;
  const T inv = T(1) / static_cast<T>(items.size());
  BasicTensor<T> out(Shape{}, total * inv);
  return g.record("batch_loss", std::move(out), items,
                  [items, inv](Graph<T>& gr, const BasicTensor<T>& go) {
                    for (Var v : items)
                      if (auto* s = gr.grad_slot(v)) (*s)[0] += go[0] * inv;
                  });
}

#define SSUM_INSTANTIATE_MODEL(T)                                                                  \
  template ParameterSet<T> init_model(const ModelConfig&, Rng&);                                  \
  template Var gate_mix(Graph<T>&, Var, Var, Var, bool);                                          \
  template Var batch_loss(Graph<T>&, const std::vector<Var>&, const std::vector<Var>&);            \
  template Var ssm_branch(ParamBinder<T>&, const std::string&, Var);                              \
  template Var bidirectional_ssm_tokens(ParamBinder<T>&, const std::string&, Var, bool,           \
                                        BiSsmTrace*);                                             \
  template Var bidirectional_ssm_layer(ParamBinder<T>&, const std::string&, Var,                  \
                                       const ScanPermutation&, bool, BiSsmTrace*);                \
  template Var residual_block(ParamBinder<T>&, const std::string&, Var, T);                       \
  template Var sscs_mamba_block(ParamBinder<T>&, const std::string&, Var, ScanScheme, std::size_t, \
                                bool, T);                                                         \
  template Var model_forward(ParamBinder<T>&, const ModelConfig&, Var, ForwardTrace*);            \
  template BasicTensor<T> run_model(const ParameterSet<T>&, const ModelConfig&, const BasicTensor<T>&);

SSUM_INSTANTIATE_MODEL(float)
SSUM_INSTANTIATE_MODEL(double)

}  // namespace ssum
