// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Dense row-major N-d arrays and the elementwise / gather / scatter /
// reduction primitives the rest of the library is built on.
//
// Axis conventions: feature maps are (channel, band, row, col); cubes are
// (band, row, col); token sequences are (position, channel).

#ifndef SSUM_TENSOR_HPP
#define SSUM_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssum/error.hpp"

namespace ssum {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_))
      throw UsageError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor ones(Shape shape) { return BasicTensor(std::move(shape), T(1)); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  Shape strides() const {
    Shape s(shape_.size(), 1);
    for (std::size_t i = shape_.size(); i-- > 1;) s[i - 1] = s[i] * shape_[i];
    return s;
  }

  std::size_t flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.size()) throw UsageError("index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= shape_[i]) throw UsageError("index out of range");
      flat = flat * shape_[i] + idx[i];
    }
    return flat;
  }

  Shape unravel(std::size_t flat) const {
    Shape idx(shape_.size());
    for (std::size_t i = shape_.size(); i-- > 0;) {
      idx[i] = flat % shape_[i];
      flat /= shape_[i];
    }
    return idx;
  }

  T& at(std::initializer_list<std::size_t> idx) {
    return data_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
  }
  const T& at(std::initializer_list<std::size_t> idx) const {
    return data_[flat_index(std::span<const std::size_t>(idx.begin(), idx.size()))];
  }

  BasicTensor reshaped(Shape shape) const {
    if (shape_size(shape) != size())
      throw UsageError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return BasicTensor(std::move(shape), data_);
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return BasicTensor<U>(shape_, std::move(out));
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename T>
void require_finite(const BasicTensor<T>& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + what);
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape())
    throw UsageError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

// Fixed pairwise-tree summation; the result depends only on the input order.
template <typename T>
T pairwise_sum(std::span<const T> v) {
  if (v.size() <= 8) {
    T s = T(0);
    for (T x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

enum class ElementwiseOp { add, sub, mul, div };

namespace detail {
template <typename T>
inline T apply(ElementwiseOp op, T a, T b) {
  switch (op) {
    case ElementwiseOp::add: return a + b;
    case ElementwiseOp::sub: return a - b;
    case ElementwiseOp::mul: return a * b;
    case ElementwiseOp::div: return a / b;
  }
  return a;
}
}  // namespace detail

template <typename T>
BasicTensor<T> elementwise(ElementwiseOp op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "elementwise");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = detail::apply(op, a[i], b[i]);
  require_finite(out, "elementwise");
  return out;
}

template <typename T>
BasicTensor<T> elementwise(ElementwiseOp op, const BasicTensor<T>& a, T b) {
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = detail::apply(op, a[i], b);
  require_finite(out, "elementwise");
  return out;
}

/// Values of t at the listed flat positions, as a 1-d tensor in list order.
template <typename T>
BasicTensor<T> gather(const BasicTensor<T>& t, std::span<const std::size_t> index) {
  BasicTensor<T> out(Shape{index.size()});
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= t.size()) throw UsageError("gather: index out of range");
    out[k] = t[index[k]];
  }
  return out;
}

/// Copy of t with values[k] written at flat position index[k].
template <typename T>
BasicTensor<T> scatter(const BasicTensor<T>& t, std::span<const std::size_t> index,
                       std::span<const T> values) {
  if (values.size() != index.size()) throw UsageError("scatter: index/value length mismatch");
  BasicTensor<T> out = t;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= t.size()) throw UsageError("scatter: index out of range");
    out[index[k]] = values[k];
  }
  return out;
}

enum class ReduceOp { sum, mean, max };

/// Reduces over the listed axes; those extents are removed from the result.
template <typename T>
BasicTensor<T> reduce(ReduceOp op, const BasicTensor<T>& t, std::vector<std::size_t> axes) {
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  std::vector<bool> reduced(t.rank(), false);
  for (std::size_t a : axes) {
    if (a >= t.rank()) throw UsageError("reduce: axis out of range");
    if (t.dim(a) == 0) throw UsageError("reduce: empty reduction axis");
    reduced[a] = true;
  }
  Shape kept_shape, red_shape;
  for (std::size_t a = 0; a < t.rank(); ++a)
    (reduced[a] ? red_shape : kept_shape).push_back(t.dim(a));
  const std::size_t n_out = shape_size(kept_shape);
  const std::size_t n_red = shape_size(red_shape);
  if (n_red == 0) throw UsageError("reduce: empty reduction axis");

  // Group the elements of each output cell contiguously, then reduce.
  std::vector<std::vector<T>> groups(n_out);
  for (auto& g : groups) g.reserve(n_red);
  const Shape strides = t.strides();
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    std::size_t rem = flat, out_idx = 0;
    for (std::size_t a = 0; a < t.rank(); ++a) {
      const std::size_t i = rem / strides[a];
      rem %= strides[a];
      if (!reduced[a]) out_idx = out_idx * t.dim(a) + i;
    }
    groups[out_idx].push_back(t[flat]);
  }
  BasicTensor<T> out(kept_shape);
  for (std::size_t o = 0; o < n_out; ++o) {
    const std::span<const T> g(groups[o]);
    switch (op) {
      case ReduceOp::sum: out[o] = pairwise_sum(g); break;
      case ReduceOp::mean: out[o] = pairwise_sum(g) / static_cast<T>(g.size()); break;
      case ReduceOp::max: out[o] = *std::max_element(g.begin(), g.end()); break;
    }
  }
  require_finite(out, "reduce");
  return out;
}

template <typename T>
BasicTensor<T> reduce(ReduceOp op, const BasicTensor<T>& t) {
  std::vector<std::size_t> all(t.rank());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return reduce(op, t, std::move(all));
}

}  // namespace ssum

#endif  // SSUM_TENSOR_HPP
