// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/ssm.hpp"

#include <cmath>

#include "ssum/error.hpp"
#include "ssum/kernels.hpp"

namespace ssum {

template <typename T>
DiscreteSsm<T> discretize(const LtiSsm<T>& m) {
  if (!(m.step > T(0))) throw UsageError("discretize: step must be positive");
  const std::size_t n = m.a.size();
  if (m.b.size() != n || m.c.size() != n) throw UsageError("discretize: A/B/C length mismatch");
  DiscreteSsm<T> d;
  d.a_bar.resize(n);
  d.b_bar.resize(n);
  d.c_bar = m.c;
  for (std::size_t i = 0; i < n; ++i) {
    const T z = m.step * m.a[i];
    d.a_bar[i] = std::exp(z);
    // (e^z - 1) / z, with 1 + z/2 near zero.
    const T gain = std::abs(z) < T(kZohSeriesThreshold) ? T(1) + z / T(2) : std::expm1(z) / z;
    d.b_bar[i] = gain * m.step * m.b[i];
  }
  return d;
}

template <typename T>
std::vector<T> ssm_recurrent(const DiscreteSsm<T>& d, const std::vector<T>& x) {
  const std::size_t n = d.a_bar.size();
  std::vector<T> h(n, T(0)), y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    T acc = T(0);
    for (std::size_t k = 0; k < n; ++k) {
      h[k] = d.a_bar[k] * h[k] + d.b_bar[k] * x[t];
      acc += d.c_bar[k] * h[k];
    }
    if (!std::isfinite(acc)) throw NumericError("ssm_recurrent: non-finite state");
    y[t] = acc;
  }
  return y;
}

template <typename T>
std::vector<T> ssm_kernel(const DiscreteSsm<T>& d, std::size_t length) {
  const std::size_t n = d.a_bar.size();
  std::vector<T> power = d.b_bar;  // a_bar^j * b_bar
  std::vector<T> k(length);
  for (std::size_t j = 0; j < length; ++j) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += d.c_bar[i] * power[i];
    k[j] = acc;
    for (std::size_t i = 0; i < n; ++i) power[i] *= d.a_bar[i];
  }
  return k;
}

template <typename T>
std::vector<T> ssm_convolutional(const DiscreteSsm<T>& d, const std::vector<T>& x) {
  const std::vector<T> k = ssm_kernel(d, x.size());
  std::vector<T> y(x.size(), T(0));
  for (std::size_t t = 0; t < x.size(); ++t) {
    T acc = T(0);
    for (std::size_t j = 0; j <= t; ++j) acc += k[j] * x[t - j];
    if (!std::isfinite(acc)) throw NumericError("ssm_convolutional: non-finite output");
    y[t] = acc;
  }
  return y;
}

template <typename T>
SelectiveSsmWeights<T> SelectiveSsmWeights<T>::init(std::size_t width, std::size_t state_dim,
                                                    Rng& rng) {
  SelectiveSsmWeights w;
  w.a_log = BasicTensor<T>(Shape{width, state_dim});
  for (std::size_t d = 0; d < width; ++d)
    for (std::size_t n = 0; n < state_dim; ++n)
      w.a_log[d * state_dim + n] = static_cast<T>(std::log(double(n + 1)));
  const double bound = 1.0 / std::sqrt(double(width));
  auto uniform = [&](Shape s) {
    BasicTensor<T> t(std::move(s));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
  };
  w.b_proj = uniform({state_dim, width});
  w.b_bias = BasicTensor<T>(Shape{state_dim});
  w.c_proj = uniform({state_dim, width});
  w.c_bias = BasicTensor<T>(Shape{state_dim});
  w.dt_proj = uniform({width, width});
  w.dt_bias = BasicTensor<T>(Shape{width});
  for (auto& v : w.dt_bias.data()) {
    const double step = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    v = static_cast<T>(softplus_inverse(step));
  }
  return w;
}

template <typename T>
BasicTensor<T> selective_scan(const SelectiveSsmWeights<T>& w, const BasicTensor<T>& s) {
  if (s.rank() != 2 || s.dim(1) != w.width())
    throw UsageError("selective_scan: token width does not match weights");
  BasicTensor<T> step = kernels::linear_forward(s, w.dt_proj, w.dt_bias);
  for (auto& v : step.data()) v = softplus(v);
  const BasicTensor<T> b = kernels::linear_forward(s, w.b_proj, w.b_bias);
  const BasicTensor<T> c = kernels::linear_forward(s, w.c_proj, w.c_bias);
  BasicTensor<T> y = kernels::selective_scan_forward<T>(s, step, w.a_log, b, c, nullptr);
  require_finite(y, "selective_scan");
  return y;
}

#define SSUM_INSTANTIATE_SSM(T)                                                              \
  template DiscreteSsm<T> discretize(const LtiSsm<T>&);                                      \
  template std::vector<T> ssm_recurrent(const DiscreteSsm<T>&, const std::vector<T>&);       \
  template std::vector<T> ssm_kernel(const DiscreteSsm<T>&, std::size_t);                    \
  template std::vector<T> ssm_convolutional(const DiscreteSsm<T>&, const std::vector<T>&);   \
  template struct SelectiveSsmWeights<T>;                                                    \
  template BasicTensor<T> selective_scan(const SelectiveSsmWeights<T>&, const BasicTensor<T>&);

SSUM_INSTANTIATE_SSM(float)
SSUM_INSTANTIATE_SSM(double)

}  // namespace ssum
