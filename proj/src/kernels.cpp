// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace ssum::kernels {
namespace {

using Index = std::ptrdiff_t;

struct ConvDims {
  Index cin, b, h, w;
  Index cout, kb, kh, kw;
  Index ob, oh, ow;
  Index sb, sh, sw;
  Index pb, ph, pw;
};

Index out_extent(Index in, Index k, Index s, Index p) {
  if (in + 2 * p < k) throw UsageError("conv3d: input extent smaller than kernel");
  return (in + 2 * p - k) / s + 1;
}

template <typename T>
ConvDims conv_dims(const BasicTensor<T>& x, const BasicTensor<T>& w, const Conv3dGeometry& g) {
  if (x.rank() != 4) throw UsageError("conv3d: input must be (C,B,H,W), got " + shape_str(x.shape()));
  if (w.rank() != 5) throw UsageError("conv3d: kernel must be rank 5");
  if (w.dim(1) != x.dim(0))
    throw UsageError("conv3d: kernel expects " + std::to_string(w.dim(1)) +
                     " input channels, got " + std::to_string(x.dim(0)));
  for (auto s : g.stride)
    if (s == 0) throw UsageError("conv3d: zero stride");
  ConvDims d{};
  d.cin = Index(x.dim(0)); d.b = Index(x.dim(1)); d.h = Index(x.dim(2)); d.w = Index(x.dim(3));
  d.cout = Index(w.dim(0)); d.kb = Index(w.dim(2)); d.kh = Index(w.dim(3)); d.kw = Index(w.dim(4));
  d.sb = Index(g.stride[0]); d.sh = Index(g.stride[1]); d.sw = Index(g.stride[2]);
  d.pb = Index(g.padding[0]); d.ph = Index(g.padding[1]); d.pw = Index(g.padding[2]);
  d.ob = out_extent(d.b, d.kb, d.sb, d.pb);
  d.oh = out_extent(d.h, d.kh, d.sh, d.ph);
  d.ow = out_extent(d.w, d.kw, d.sw, d.pw);
  return d;
}

}  // namespace

// Convolution is lowered to matrix products over chunks of output positions:
// col (K x P) holds the input taps for P output voxels, K = Cin*kb*kh*kw, and
// y[:, chunk] = w (Cout x K) * col.
namespace {

constexpr Index kLongChunk = 256;  // positions; below this dw uses the transposed product
constexpr Index kColumnBudget = Index(1) << 17;  // elements per column buffer

// Output column range [lo, hi) whose input column ow*s + t - p lies in [0, n).
inline void valid_cols(Index out, Index n, Index s, Index t, Index p, Index& lo, Index& hi) {
  lo = 0;
  while (lo < out && lo * s + t - p < 0) ++lo;
  hi = out;
  while (hi > lo && (hi - 1) * s + t - p >= n) --hi;
}

// Walks tap rows k = (ci, tb, th, tw) and output rows (ob, oh) for output
// band slices [b0, b1), calling fn(col_offset, input_offset, lo, hi) for
// every row with a valid input row and zero(col_offset) otherwise.
struct Im2Col {
  const ConvDims& d;
  Index k_rows() const { return d.cin * d.kb * d.kh * d.kw; }
  Index plane() const { return d.oh * d.ow; }
  Index bands_per_chunk() const {
    return std::max<Index>(1, kColumnBudget / std::max<Index>(1, k_rows() * plane()));
  }

  template <typename Row, typename Zero>
  void walk(Index b0, Index b1, Row&& row, Zero&& zero) const {
    const Index n = (b1 - b0) * plane();
    Index k = 0;
    for (Index ci = 0; ci < d.cin; ++ci)
      for (Index tb = 0; tb < d.kb; ++tb)
        for (Index th = 0; th < d.kh; ++th)
          for (Index tw = 0; tw < d.kw; ++tw, ++k) {
            Index lo, hi;
            valid_cols(d.ow, d.w, d.sw, tw, d.pw, lo, hi);
            for (Index ob = b0; ob < b1; ++ob) {
              const Index ib = ob * d.sb + tb - d.pb;
              for (Index oh = 0; oh < d.oh; ++oh) {
                const Index ih = oh * d.sh + th - d.ph;
                const Index c = k * n + ((ob - b0) * d.oh + oh) * d.ow;
                if (ib < 0 || ib >= d.b || ih < 0 || ih >= d.h || lo >= hi) {
                  zero(c, Index(0), d.ow);
                  continue;
                }
                zero(c, Index(0), lo);
                zero(c, hi, d.ow);
                row(c, ((ci * d.b + ib) * d.h + ih) * d.w + tw - d.pw, lo, hi);
              }
            }
          }
  }

  template <typename T>
  void fill(const T* x, Index b0, Index b1, std::vector<T>& col) const {
    col.resize(std::size_t(k_rows() * (b1 - b0) * plane()));
    T* cp = col.data();
    const Index s = d.sw;
    walk(b0, b1,
         [&](Index c, Index in, Index lo, Index hi) {
           for (Index j = lo; j < hi; ++j) cp[c + j] = x[in + j * s];
         },
         [&](Index c, Index lo, Index hi) { std::fill(cp + c + lo, cp + c + hi, T(0)); });
  }

  template <typename T>
  void scatter_add(const std::vector<T>& col, Index b0, Index b1, T* dx) const {
    const T* cp = col.data();
    const Index s = d.sw;
    walk(b0, b1,
         [&](Index c, Index in, Index lo, Index hi) {
           for (Index j = lo; j < hi; ++j) dx[in + j * s] += cp[c + j];
         },
         [](Index, Index, Index) {});
  }
};

template <typename T>
struct Lanes;
template <>
struct Lanes<float> {
  typedef float type __attribute__((vector_size(32)));
};
template <>
struct Lanes<double> {
  typedef double type __attribute__((vector_size(32)));
};

template <typename V>
inline V load(const void* p) {
  V v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <typename V>
inline void store(void* p, const V& v) {
  std::memcpy(p, &v, sizeof v);
}

// c[i][j] = (accumulate ? c[i][j] : 0) + sum_k a[i][k] * b[k][j], summed in
// ascending k for every element. Row-major with leading dimensions.
template <typename T>
void gemm(Index m, Index n, Index depth, const T* a, Index lda, const T* b, Index ldb, T* c, Index ldc,
          bool accumulate) {
  using V = typename Lanes<T>::type;
  constexpr Index kW = Index(sizeof(V) / sizeof(T));
  constexpr Index kRows = 4, kCols = 2 * kW;
  auto scalar = [&](Index i, Index j) {
    T acc = accumulate ? c[i * ldc + j] : T(0);
    for (Index k = 0; k < depth; ++k) acc += a[i * lda + k] * b[k * ldb + j];
    c[i * ldc + j] = acc;
  };
  Index i = 0;
  for (; i + kRows <= m; i += kRows) {
    Index j = 0;
    for (; j + kCols <= n; j += kCols) {
      V acc[kRows][2];
      for (Index r = 0; r < kRows; ++r)
        for (Index h = 0; h < 2; ++h)
          acc[r][h] = accumulate ? load<V>(c + (i + r) * ldc + j + h * kW) : V{};
      for (Index k = 0; k < depth; ++k) {
        const V b0 = load<V>(b + k * ldb + j), b1 = load<V>(b + k * ldb + j + kW);
        for (Index r = 0; r < kRows; ++r) {
          const T av = a[(i + r) * lda + k];
          acc[r][0] += av * b0;
          acc[r][1] += av * b1;
        }
      }
      for (Index r = 0; r < kRows; ++r)
        for (Index h = 0; h < 2; ++h) store(c + (i + r) * ldc + j + h * kW, acc[r][h]);
    }
    for (; j + kW <= n; j += kW) {
      V acc[kRows];
      for (Index r = 0; r < kRows; ++r) acc[r] = accumulate ? load<V>(c + (i + r) * ldc + j) : V{};
      for (Index k = 0; k < depth; ++k) {
        const V bv = load<V>(b + k * ldb + j);
        for (Index r = 0; r < kRows; ++r) acc[r] += a[(i + r) * lda + k] * bv;
      }
      for (Index r = 0; r < kRows; ++r) store(c + (i + r) * ldc + j, acc[r]);
    }
    for (; j < n; ++j)
      for (Index r = 0; r < kRows; ++r) scalar(i + r, j);
  }
  for (; i < m; ++i) {
    Index j = 0;
    for (; j + kW <= n; j += kW) {
      V acc = accumulate ? load<V>(c + i * ldc + j) : V{};
      for (Index k = 0; k < depth; ++k) acc += a[i * lda + k] * load<V>(b + k * ldb + j);
      store(c + i * ldc + j, acc);
    }
    for (; j < n; ++j) scalar(i, j);
  }
}

template <typename V, typename T>
inline T lane_sum(const V& v) {
  constexpr int kW = int(sizeof(V) / sizeof(T));
  T out = T(0);
  for (int l = 0; l < kW; ++l) out += v[l];
  return out;
}

// c[i][j] += sum_t a[i][t] * b[j][t]; both operands row-major along t.
template <typename T>
void gemm_nt(Index m, Index n, Index depth, const T* a, Index lda, const T* b, Index ldb, T* c, Index ldc) {
  using V = typename Lanes<T>::type;
  constexpr Index kW = Index(sizeof(V) / sizeof(T));
  constexpr Index kRows = 4;
  const Index vec_depth = depth / kW * kW;
  auto one_row = [&](Index i, Index j) {
    V acc{};
    for (Index t = 0; t < vec_depth; t += kW) acc += load<V>(a + i * lda + t) * load<V>(b + j * ldb + t);
    T tail = T(0);
    for (Index t = vec_depth; t < depth; ++t) tail += a[i * lda + t] * b[j * ldb + t];
    c[i * ldc + j] += lane_sum<V, T>(acc) + tail;
  };
  Index i = 0;
  for (; i + kRows <= m; i += kRows)
    for (Index j = 0; j < n; ++j) {
      V acc[kRows] = {};
      for (Index t = 0; t < vec_depth; t += kW) {
        const V bv = load<V>(b + j * ldb + t);
        for (Index r = 0; r < kRows; ++r) acc[r] += load<V>(a + (i + r) * lda + t) * bv;
      }
      for (Index r = 0; r < kRows; ++r) {
        T tail = T(0);
        for (Index t = vec_depth; t < depth; ++t) tail += a[(i + r) * lda + t] * b[j * ldb + t];
        c[(i + r) * ldc + j] += lane_sum<V, T>(acc[r]) + tail;
      }
    }
  for (; i < m; ++i)
    for (Index j = 0; j < n; ++j) one_row(i, j);
}

// dst[c * ld + r] = src[r * cols + c]; ld >= rows.
template <typename T>
void transpose(const T* src, Index rows, Index cols, T* dst, Index ld) {
  constexpr Index kTile = 16;
  for (Index r0 = 0; r0 < rows; r0 += kTile)
    for (Index c0 = 0; c0 < cols; c0 += kTile)
      for (Index r = r0; r < std::min(rows, r0 + kTile); ++r)
        for (Index c = c0; c < std::min(cols, c0 + kTile); ++c) dst[c * ld + r] = src[r * cols + c];
}

}  // namespace

namespace {

// y += x (*) w for the geometry in d, y laid out (cout, ob, oh, ow).
template <typename T>
void conv_accumulate(const T* xp, const T* wp, const ConvDims& d, T* yp) {
  const Im2Col im{d};
  const Index kr = im.k_rows(), total = d.ob * im.plane(), step = im.bands_per_chunk();
  std::vector<T> col;
  for (Index b0 = 0; b0 < d.ob; b0 += step) {
    const Index b1 = std::min(d.ob, b0 + step), p0 = b0 * im.plane(), n = (b1 - b0) * im.plane();
    im.fill(xp, b0, b1, col);
    gemm(d.cout, n, kr, wp, kr, col.data(), n, yp + p0, total, true);
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv3d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& bias, const Conv3dGeometry& g) {
  const ConvDims d = conv_dims(x, w, g);
  if (bias.size() != std::size_t(d.cout)) throw UsageError("conv3d: bias length mismatch");
  BasicTensor<T> y(Shape{std::size_t(d.cout), std::size_t(d.ob), std::size_t(d.oh), std::size_t(d.ow)});
  const Index total = d.ob * d.oh * d.ow;
  T* yp = y.data().data();
  for (Index co = 0; co < d.cout; ++co) std::fill_n(yp + co * total, total, bias[std::size_t(co)]);
  conv_accumulate(x.data().data(), w.data().data(), d, yp);
  return y;
}

template <typename T>
void conv3d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     const Conv3dGeometry& g, BasicTensor<T>* dx, BasicTensor<T>* dw,
                     BasicTensor<T>* dbias) {
  const ConvDims d = conv_dims(x, w, g);
  const Im2Col im{d};
  const Index kr = im.k_rows(), total = d.ob * im.plane(), step = im.bands_per_chunk();
  const T* xp = x.data().data();
  const T* wp = w.data().data();
  const T* gp = dy.data().data();
  if (dbias) {
    for (Index co = 0; co < d.cout; ++co)
      (*dbias)[std::size_t(co)] += pairwise_sum(std::span<const T>(gp + co * total, std::size_t(total)));
  }
  if (!dx && !dw) return;
  // Unit stride: dx is the correlation of dy with the flipped, transposed kernel.
  const bool unit_stride = d.sb == 1 && d.sh == 1 && d.sw == 1 && d.pb < d.kb && d.ph < d.kh && d.pw < d.kw;
  if (dx && unit_stride) {
    ConvDims t = d;
    t.cin = d.cout;
    t.cout = d.cin;
    t.b = d.ob; t.h = d.oh; t.w = d.ow;
    t.ob = d.b; t.oh = d.h; t.ow = d.w;
    t.pb = d.kb - 1 - d.pb; t.ph = d.kh - 1 - d.ph; t.pw = d.kw - 1 - d.pw;
    const Index taps = d.kb * d.kh * d.kw;
    std::vector<T> flipped(std::size_t(d.cin * d.cout * taps));
    for (Index co = 0; co < d.cout; ++co)
      for (Index ci = 0; ci < d.cin; ++ci)
        for (Index k = 0; k < taps; ++k)
          flipped[std::size_t((ci * d.cout + co) * taps + (taps - 1 - k))] = wp[(co * d.cin + ci) * taps + k];
    conv_accumulate(gp, flipped.data(), t, dx->data().data());
    dx = nullptr;
    if (!dw) return;
  }
  std::vector<T> col, col_t, dcol, w_t;
  if (dx) {
    w_t.resize(std::size_t(kr * d.cout));
    transpose(wp, d.cout, kr, w_t.data(), d.cout);
  }
  for (Index b0 = 0; b0 < d.ob; b0 += step) {
    const Index b1 = std::min(d.ob, b0 + step), p0 = b0 * im.plane(), n = (b1 - b0) * im.plane();
    if (dw) {
      im.fill(xp, b0, b1, col);
      if (n >= kLongChunk) {
        gemm_nt(d.cout, kr, n, gp + p0, total, col.data(), n, dw->data().data(), kr);
      } else {
        col_t.resize(col.size());
        transpose(col.data(), kr, n, col_t.data(), kr);
        gemm(d.cout, kr, n, gp + p0, total, col_t.data(), kr, dw->data().data(), kr, true);
      }
    }
    if (dx) {
      dcol.resize(std::size_t(kr * n));
      gemm(kr, n, d.cout, w_t.data(), d.cout, gp + p0, total, dcol.data(), n, false);
      im.scatter_add(dcol, b0, b1, dx->data().data());
    }
  }
}

template <typename T>
BasicTensor<T> instance_norm_forward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                     const BasicTensor<T>& beta, T eps, NormStats<T>* stats) {
  if (x.rank() < 2) throw UsageError("instance_norm: input must have a channel axis");
  const std::size_t c = x.dim(0), n = x.size() / c;
  if (gamma.size() != c || beta.size() != c) throw UsageError("instance_norm: affine length mismatch");
  BasicTensor<T> y(x.shape());
  NormStats<T> local;
  NormStats<T>& st = stats ? *stats : local;
  st.mean.assign(c, T(0));
  st.rstd.assign(c, T(0));
  for (std::size_t ch = 0; ch < c; ++ch) {
    const std::span<const T> s = x.data().subspan(ch * n, n);
    const T mean = pairwise_sum(s) / T(n);
    T var = T(0);
    for (T v : s) var += (v - mean) * (v - mean);
    var /= T(n);
    const T rstd = T(1) / std::sqrt(var + eps);
    st.mean[ch] = mean;
    st.rstd[ch] = rstd;
    const T ga = gamma[ch], be = beta[ch];
    for (std::size_t i = 0; i < n; ++i) y[ch * n + i] = ga * ((s[i] - mean) * rstd) + be;
  }
  return y;
}

template <typename T>
void instance_norm_backward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                            const NormStats<T>& st, const BasicTensor<T>& dy, BasicTensor<T>* dx,
                            BasicTensor<T>* dgamma, BasicTensor<T>* dbeta) {
  const std::size_t c = x.dim(0), n = x.size() / c;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T mean = st.mean[ch], rstd = st.rstd[ch], ga = gamma[ch];
    T sum_g = T(0), sum_gx = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      const T xhat = (x[ch * n + i] - mean) * rstd;
      sum_g += dy[ch * n + i];
      sum_gx += dy[ch * n + i] * xhat;
    }
    if (dgamma) (*dgamma)[ch] += sum_gx;
    if (dbeta) (*dbeta)[ch] += sum_g;
    if (dx) {
      const T k = ga * rstd / T(n);
      for (std::size_t i = 0; i < n; ++i) {
        const T xhat = (x[ch * n + i] - mean) * rstd;
        (*dx)[ch * n + i] += k * (T(n) * dy[ch * n + i] - sum_g - xhat * sum_gx);
      }
    }
  }
}

template <typename T>
BasicTensor<T> layer_norm_forward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                  const BasicTensor<T>& beta, T eps, NormStats<T>* stats) {
  if (x.rank() != 2) throw UsageError("layer_norm: input must be (L, D)");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (gamma.size() != d || beta.size() != d) throw UsageError("layer_norm: affine length mismatch");
  BasicTensor<T> y(x.shape());
  NormStats<T> local;
  NormStats<T>& st = stats ? *stats : local;
  st.mean.assign(rows, T(0));
  st.rstd.assign(rows, T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * d;
    T mean = T(0);
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= T(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= T(d);
    const T rstd = T(1) / std::sqrt(var + eps);
    st.mean[r] = mean;
    st.rstd[r] = rstd;
    T* yr = y.data().data() + r * d;
    for (std::size_t j = 0; j < d; ++j) yr[j] = gamma[j] * ((xr[j] - mean) * rstd) + beta[j];
  }
  return y;
}

template <typename T>
void layer_norm_backward(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                         const NormStats<T>& st, const BasicTensor<T>& dy, BasicTensor<T>* dx,
                         BasicTensor<T>* dgamma, BasicTensor<T>* dbeta) {
  const std::size_t rows = x.dim(0), d = x.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * d;
    const T* gr = dy.data().data() + r * d;
    const T mean = st.mean[r], rstd = st.rstd[r];
    T sum_g = T(0), sum_gx = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      const T xhat = (xr[j] - mean) * rstd;
      const T gh = gr[j] * gamma[j];
      sum_g += gh;
      sum_gx += gh * xhat;
      if (dgamma) (*dgamma)[j] += gr[j] * xhat;
      if (dbeta) (*dbeta)[j] += gr[j];
    }
    if (dx) {
      T* dxr = dx->data().data() + r * d;
      for (std::size_t j = 0; j < d; ++j) {
        const T xhat = (xr[j] - mean) * rstd;
        dxr[j] += rstd / T(d) * (T(d) * gr[j] * gamma[j] - sum_g - xhat * sum_gx);
      }
    }
  }
}

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                              const BasicTensor<T>& bias) {
  if (x.rank() != 2 || w.rank() != 2 || w.dim(1) != x.dim(1))
    throw UsageError("linear: shape mismatch " + shape_str(x.shape()) + " x " + shape_str(w.shape()));
  const std::size_t rows = x.dim(0), din = x.dim(1), dout = w.dim(0);
  if (bias.size() != dout) throw UsageError("linear: bias length mismatch");
  BasicTensor<T> y(Shape{rows, dout});
  const T* xp = x.data().data();
  const T* wp = w.data().data();
  T* yp = y.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * din;
    for (std::size_t o = 0; o < dout; ++o) {
      const T* wr = wp + o * din;
      T acc = bias[o];
      for (std::size_t i = 0; i < din; ++i) acc += wr[i] * xr[i];
      yp[r * dout + o] = acc;
    }
  }
  return y;
}

template <typename T>
void linear_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& dy,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* dbias) {
  const std::size_t rows = x.dim(0), din = x.dim(1), dout = w.dim(0);
  const T* xp = x.data().data();
  const T* wp = w.data().data();
  const T* gp = dy.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = xp + r * din;
    for (std::size_t o = 0; o < dout; ++o) {
      const T g = gp[r * dout + o];
      if (dbias) (*dbias)[o] += g;
      if (dw) {
        T* dwr = dw->data().data() + o * din;
        for (std::size_t i = 0; i < din; ++i) dwr[i] += g * xr[i];
      }
      if (dx) {
        T* dxr = dx->data().data() + r * din;
        const T* wr = wp + o * din;
        for (std::size_t i = 0; i < din; ++i) dxr[i] += g * wr[i];
      }
    }
  }
}

template <typename T>
BasicTensor<T> causal_conv1d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                     const BasicTensor<T>& bias) {
  if (x.rank() != 2 || w.rank() != 2 || w.dim(0) != x.dim(1) || bias.size() != x.dim(1))
    throw UsageError("causal_conv1d: shape mismatch");
  const Index len = Index(x.dim(0)), d = Index(x.dim(1)), k = Index(w.dim(1));
  BasicTensor<T> y(x.shape());
  for (Index t = 0; t < len; ++t) {
    for (Index c = 0; c < d; ++c) {
      T acc = bias[std::size_t(c)];
      for (Index j = 0; j < k; ++j) {
        const Index src = t - (k - 1) + j;
        if (src >= 0) acc += w[std::size_t(c * k + j)] * x[std::size_t(src * d + c)];
      }
      y[std::size_t(t * d + c)] = acc;
    }
  }
  return y;
}

template <typename T>
void causal_conv1d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                            const BasicTensor<T>& dy, BasicTensor<T>* dx, BasicTensor<T>* dw,
                            BasicTensor<T>* dbias) {
  const Index len = Index(x.dim(0)), d = Index(x.dim(1)), k = Index(w.dim(1));
  for (Index t = 0; t < len; ++t) {
    for (Index c = 0; c < d; ++c) {
      const T g = dy[std::size_t(t * d + c)];
      if (dbias) (*dbias)[std::size_t(c)] += g;
      for (Index j = 0; j < k; ++j) {
        const Index src = t - (k - 1) + j;
        if (src < 0) continue;
        if (dw) (*dw)[std::size_t(c * k + j)] += g * x[std::size_t(src * d + c)];
        if (dx) (*dx)[std::size_t(src * d + c)] += g * w[std::size_t(c * k + j)];
      }
    }
  }
}

template <typename T>
BasicTensor<T> selective_scan_forward(const BasicTensor<T>& u, const BasicTensor<T>& delta,
                                      const BasicTensor<T>& a_log, const BasicTensor<T>& b,
                                      const BasicTensor<T>& c, BasicTensor<T>* states) {
  if (u.rank() != 2 || delta.shape() != u.shape()) throw UsageError("selective_scan: u/delta mismatch");
  const std::size_t len = u.dim(0), d = u.dim(1);
  if (a_log.rank() != 2 || a_log.dim(0) != d) throw UsageError("selective_scan: A must be (D, N)");
  const std::size_t n = a_log.dim(1);
  if (b.shape() != Shape{len, n} || c.shape() != Shape{len, n})
    throw UsageError("selective_scan: B/C must be (L, N)");
  std::vector<T> a(d * n);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -std::exp(a_log[i]);
  std::vector<T> h(d * n, T(0));
  BasicTensor<T> y(Shape{len, d});
  if (states) *states = BasicTensor<T>(Shape{len, d, n});
  for (std::size_t t = 0; t < len; ++t) {
    const T* bt = b.data().data() + t * n;
    const T* ct = c.data().data() + t * n;
    for (std::size_t ch = 0; ch < d; ++ch) {
      const T dt = delta[t * d + ch];
      const T ut = u[t * d + ch];
      T* hd = h.data() + ch * n;
      const T* ad = a.data() + ch * n;
      T acc = T(0);
      for (std::size_t k = 0; k < n; ++k) {
        hd[k] = std::exp(dt * ad[k]) * hd[k] + (dt * bt[k]) * ut;
        acc += ct[k] * hd[k];
      }
      y[t * d + ch] = acc;
      if (states) std::copy(hd, hd + n, states->data().data() + (t * d + ch) * n);
    }
  }
  return y;
}

template <typename T>
void selective_scan_backward(const BasicTensor<T>& u, const BasicTensor<T>& delta,
                             const BasicTensor<T>& a_log, const BasicTensor<T>& b,
                             const BasicTensor<T>& c, const BasicTensor<T>& states,
                             const BasicTensor<T>& dy, BasicTensor<T>* du,
                             BasicTensor<T>* ddelta, BasicTensor<T>* da_log, BasicTensor<T>* db,
                             BasicTensor<T>* dc) {
  const std::size_t len = u.dim(0), d = u.dim(1), n = a_log.dim(1);
  std::vector<T> a(d * n), da(d * n, T(0)), dh(d * n, T(0));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -std::exp(a_log[i]);
  const T* hs = states.data().data();
  for (std::size_t t = len; t-- > 0;) {
    const T* bt = b.data().data() + t * n;
    const T* ct = c.data().data() + t * n;
    for (std::size_t ch = 0; ch < d; ++ch) {
      const T dt = delta[t * d + ch];
      const T ut = u[t * d + ch];
      const T gy = dy[t * d + ch];
      const T* ht = hs + (t * d + ch) * n;
      const T* hp = t > 0 ? hs + ((t - 1) * d + ch) * n : nullptr;
      T ddt = T(0), dut = T(0);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = ch * n + k;
        const T decay = std::exp(dt * a[i]);
        const T hprev = hp ? hp[k] : T(0);
        const T g = dh[i] + gy * ct[k];
        if (dc) (*dc)[t * n + k] += gy * ht[k];
        ddt += g * (a[i] * decay * hprev + bt[k] * ut);
        da[i] += g * dt * decay * hprev;
        if (db) (*db)[t * n + k] += g * dt * ut;
        dut += g * dt * bt[k];
        dh[i] = g * decay;
      }
      if (ddelta) (*ddelta)[t * d + ch] += ddt;
      if (du) (*du)[t * d + ch] += dut;
    }
  }
  if (da_log)
    for (std::size_t i = 0; i < a.size(); ++i) (*da_log)[i] += da[i] * a[i];
}

template <typename T>
BasicTensor<T> upsample2x_forward(const BasicTensor<T>& x) {
  if (x.rank() != 4) throw UsageError("upsample2x: input must be (C,B,H,W)");
  const std::size_t c = x.dim(0), nb = x.dim(1), h = x.dim(2), w = x.dim(3);
  BasicTensor<T> y(Shape{c, nb, 2 * h, 2 * w});
  for (std::size_t s = 0; s < c * nb; ++s)
    for (std::size_t i = 0; i < 2 * h; ++i)
      for (std::size_t j = 0; j < 2 * w; ++j)
        y[(s * 2 * h + i) * 2 * w + j] = x[(s * h + i / 2) * w + j / 2];
  return y;
}

template <typename T>
void upsample2x_backward(const BasicTensor<T>& dy, BasicTensor<T>* dx) {
  const std::size_t c = dx->dim(0), nb = dx->dim(1), h = dx->dim(2), w = dx->dim(3);
  for (std::size_t s = 0; s < c * nb; ++s)
    for (std::size_t i = 0; i < 2 * h; ++i)
      for (std::size_t j = 0; j < 2 * w; ++j)
        (*dx)[(s * h + i / 2) * w + j / 2] += dy[(s * 2 * h + i) * 2 * w + j];
}

#define SSUM_INSTANTIATE_KERNELS(T)                                                              \
  template BasicTensor<T> conv3d_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         const BasicTensor<T>&, const Conv3dGeometry&);          \
  template void conv3d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&, const Conv3dGeometry&, BasicTensor<T>*,   \
                                BasicTensor<T>*, BasicTensor<T>*);                               \
  template BasicTensor<T> instance_norm_forward(const BasicTensor<T>&, const BasicTensor<T>&,    \
                                                const BasicTensor<T>&, T, NormStats<T>*);        \
  template void instance_norm_backward(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                       const NormStats<T>&, const BasicTensor<T>&,               \
                                       BasicTensor<T>*, BasicTensor<T>*, BasicTensor<T>*);       \
  template BasicTensor<T> layer_norm_forward(const BasicTensor<T>&, const BasicTensor<T>&,       \
                                             const BasicTensor<T>&, T, NormStats<T>*);           \
  template void layer_norm_backward(const BasicTensor<T>&, const BasicTensor<T>&,                \
                                    const NormStats<T>&, const BasicTensor<T>&, BasicTensor<T>*, \
                                    BasicTensor<T>*, BasicTensor<T>*);                           \
  template BasicTensor<T> linear_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         const BasicTensor<T>&);                                 \
  template void linear_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,         \
                                BasicTensor<T>*);                                                \
  template BasicTensor<T> causal_conv1d_forward(const BasicTensor<T>&, const BasicTensor<T>&,    \
                                                const BasicTensor<T>&);                          \
  template void causal_conv1d_backward(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                       const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,  \
                                       BasicTensor<T>*);                                         \
  template BasicTensor<T> selective_scan_forward(const BasicTensor<T>&, const BasicTensor<T>&,   \
                                                 const BasicTensor<T>&, const BasicTensor<T>&,   \
                                                 const BasicTensor<T>&, BasicTensor<T>*);        \
  template void selective_scan_backward(                                                         \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>*,      \
      BasicTensor<T>*, BasicTensor<T>*, BasicTensor<T>*, BasicTensor<T>*);                       \
  template BasicTensor<T> upsample2x_forward(const BasicTensor<T>&);                             \
  template void upsample2x_backward(const BasicTensor<T>&, BasicTensor<T>*);

SSUM_INSTANTIATE_KERNELS(float)
SSUM_INSTANTIATE_KERNELS(double)

}  // namespace ssum::kernels
