// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Central-difference cases for every differentiable op and for the composite
// layers, shared by the unit tests and the acceptance runner.

#ifndef SSUM_GRAD_SUITE_HPP
#define SSUM_GRAD_SUITE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssum/autodiff.hpp"
#include "ssum/model.hpp"
#include "ssum/scan.hpp"
#include "test_util.hpp"

namespace ssum::test {

struct GradCase {
  std::string name;
  std::function<double(std::uint64_t seed)> run;
};

// Values in [lo, hi] with a random sign, away from activation kinks.
inline Tensor64 signed_tensor(Shape s, Rng& rng, double lo = 0.1, double hi = 1.0) {
  Tensor64 t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(lo, hi) * (rng.coin() ? 1.0 : -1.0);
  return t;
}

inline ModelConfig grad_block_config(std::size_t width) {
  ModelConfig m;
  m.base_channels = width;
  m.channel_multipliers = {1};
  m.downsample_blocks = {};
  m.state_dim = 4;
  return m;
}

inline ModelConfig grad_net_config() {
  ModelConfig m;
  m.base_channels = 2;
  m.state_dim = 2;
  m.residual_blocks = 1;
  return m;
}

// Init, then give zero-initialised tensors random values so every path is live.
inline ParameterSet<double> live_params(const ModelConfig& m, Rng& rng) {
  auto params = init_model<double>(m, rng);
  for (auto& e : params.entries()) {
    const bool zero = std::all_of(e.value.data().begin(), e.value.data().end(), [](double v) { return v == 0.0; });
    if (zero)
      for (auto& v : e.value.data()) v = rng.uniform(-0.3, 0.3);
  }
  return params;
}

inline std::vector<GradCase> grad_cases() {
  using G = Graph<double>;
  using In = std::span<const Var>;
  std::vector<GradCase> cases;
  auto unary = [&](std::string name, std::function<Var(G&, Var)> op, Shape s) {
    cases.push_back({name, [op, s](std::uint64_t seed) {
                       Rng rng(seed);
                       return grad_check([&](G& g, In v) { return op(g, v[0]); }, {signed_tensor(s, rng)},
                                         {1e-5, 0, seed});
                     }});
  };
  auto binary = [&](std::string name, std::function<Var(G&, Var, Var)> op, Shape s) {
    cases.push_back({name, [op, s](std::uint64_t seed) {
                       Rng rng(seed);
                       return grad_check([&](G& g, In v) { return op(g, v[0], v[1]); },
                                         {signed_tensor(s, rng), signed_tensor(s, rng)}, {1e-5, 0, seed});
                     }});
  };

  binary("add", [](G& g, Var a, Var b) { return ad::add(g, a, b); }, {3, 4});
  binary("sub", [](G& g, Var a, Var b) { return ad::sub(g, a, b); }, {3, 4});
  binary("mul", [](G& g, Var a, Var b) { return ad::mul(g, a, b); }, {3, 4});
  binary("squared_error", [](G& g, Var a, Var b) { return ad::squared_error(g, a, b); }, {2, 3, 4});
  unary("scale", [](G& g, Var a) { return ad::scale(g, a, -1.75); }, {5});
  unary("silu", [](G& g, Var a) { return ad::silu(g, a); }, {4, 5});
  unary("leaky_relu", [](G& g, Var a) { return ad::leaky_relu(g, a, 0.01); }, {4, 5});
  unary("softplus", [](G& g, Var a) { return ad::softplus(g, a); }, {4, 5});
  unary("sum", [](G& g, Var a) { return ad::sum(g, a); }, {3, 3});
  unary("upsample2x", [](G& g, Var a) { return ad::upsample2x(g, a); }, {2, 2, 3, 2});
  unary("flip_tokens", [](G& g, Var a) { return ad::flip_tokens(g, a); }, {5, 3});

  cases.push_back({"conv3d", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](G& g, In v) { return ad::conv3d(g, v[0], v[1], v[2], {{1, 1, 1}, {1, 1, 1}}); },
                         {random_tensor({2, 3, 4, 4}, rng), random_tensor({3, 2, 3, 3, 3}, rng),
                          random_tensor({3}, rng)},
                         {1e-5, 0, seed});
                   }});
  cases.push_back({"conv3d_strided", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](G& g, In v) { return ad::conv3d(g, v[0], v[1], v[2], {{1, 2, 2}, {1, 1, 1}}); },
                         {random_tensor({2, 3, 4, 6}, rng), random_tensor({2, 2, 3, 3, 3}, rng),
                          random_tensor({2}, rng)},
                         {1e-5, 0, seed});
                   }});
  cases.push_back({"instance_norm", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check([](G& g, In v) { return ad::instance_norm(g, v[0], v[1], v[2]); },
                                       {random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng, 0.5, 1.5),
                                        random_tensor({2}, rng)},
                                       {1e-5, 0, seed});
                   }});
  cases.push_back({"layer_norm", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check([](G& g, In v) { return ad::layer_norm(g, v[0], v[1], v[2]); },
                                       {random_tensor({5, 4}, rng), random_tensor({4}, rng, 0.5, 1.5),
                                        random_tensor({4}, rng)},
                                       {1e-5, 0, seed});
                   }});
  cases.push_back({"linear", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check([](G& g, In v) { return ad::linear(g, v[0], v[1], v[2]); },
                                       {random_tensor({6, 4}, rng), random_tensor({3, 4}, rng),
                                        random_tensor({3}, rng)},
                                       {1e-5, 0, seed});
                   }});
  cases.push_back({"causal_conv1d", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check([](G& g, In v) { return ad::causal_conv1d(g, v[0], v[1], v[2]); },
                                       {random_tensor({7, 3}, rng), random_tensor({3, 4}, rng),
                                        random_tensor({3}, rng)},
                                       {1e-5, 0, seed});
                   }});
  cases.push_back({"selective_scan", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](G& g, In v) { return ad::selective_scan(g, v[0], v[1], v[2], v[3], v[4]); },
                         {random_tensor({6, 3}, rng), random_tensor({6, 3}, rng, 0.05, 1.0),
                          random_tensor({3, 4}, rng, -1.0, 1.0), random_tensor({6, 4}, rng),
                          random_tensor({6, 4}, rng)},
                         {1e-5, 0, seed});
                   }});
  cases.push_back({"gather", [](std::uint64_t seed) {
                     Rng rng(seed);
                     std::vector<std::size_t> idx;
                     for (int k = 0; k < 9; ++k) idx.push_back(rng.below(12));
                     return grad_check([idx](G& g, In v) { return ad::gather(g, v[0], idx); },
                                       {random_tensor({3, 4}, rng)}, {1e-5, 0, seed});
                   }});
  cases.push_back({"scatter", [](std::uint64_t seed) {
                     Rng rng(seed);
                     std::vector<std::size_t> idx{7, 2, 11, 0, 5};
                     return grad_check([idx](G& g, In v) { return ad::scatter(g, v[0], idx, v[1]); },
                                       {random_tensor({3, 4}, rng), random_tensor({5}, rng)}, {1e-5, 0, seed});
                   }});
  cases.push_back({"volume_tokens", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const auto perm = build_permutation(kContinuousSchemes[seed % 6], {2, 3, 2});
                     return grad_check(
                         [&perm](G& g, In v) {
                           const Var s = ad::volume_to_tokens(g, v[0], perm);
                           return ad::tokens_to_volume(g, ad::mul(g, s, s), perm);
                         },
                         {random_tensor({3, 2, 3, 2}, rng)}, {1e-5, 0, seed});
                   }});
  cases.push_back({"batch_loss", [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](G& g, In v) { return batch_loss<double>(g, {v[0], v[1]}, {v[2], v[3]}); },
                         {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng), random_tensor({2, 3}, rng),
                          random_tensor({2, 3}, rng)},
                         {1e-5, 0, seed});
                   }});
  cases.push_back({"residual_block", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const auto params = live_params(grad_block_config(2), rng);
                     const auto x = random_tensor({2, 2, 3, 3}, rng);
                     return param_grad_check(
                         params,
                         [&](ParamBinder<double>& p, G& g) { return residual_block(p, "blk1.res0", g.leaf(x), 0.01); },
                         40, seed);
                   }});
  cases.push_back({"bidirectional_layer", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const auto params = live_params(grad_block_config(3), rng);
                     const auto x = random_tensor({3, 2, 3, 4}, rng);
                     const auto perm = build_permutation(kContinuousSchemes[seed % 6], {2, 3, 4});
                     return param_grad_check(
                         params,
                         [&](ParamBinder<double>& p, G& g) {
                           return bidirectional_ssm_layer(p, "blk1.ssm", g.leaf(x), perm, true);
                         },
                         60, seed);
                   }});
  cases.push_back({"tiny_network", [](std::uint64_t seed) {
                     Rng rng(seed);
                     const ModelConfig m = grad_net_config();
                     const auto params = live_params(m, rng);
                     const auto y = random_tensor({1, 4, 8, 8}, rng, 0.0, 1.0);
                     return param_grad_check(
                         params, [&](ParamBinder<double>& p, G& g) { return model_forward(p, m, g.leaf(y)); }, 50,
                         seed);
                   }});
  return cases;
}

}  // namespace ssum::test

#endif  // SSUM_GRAD_SUITE_HPP
