// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssum/error.hpp"

namespace ssum {
namespace {

constexpr std::size_t kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const Tensor64& a, const Tensor64& b, const char* what) {
  if (a.rank() != 3) throw DataError(std::string(what) + ": cubes must be (bands, rows, cols)");
  if (a.shape() != b.shape())
    throw DataError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                    shape_str(b.shape()));
  if (a.size() == 0) throw DataError(std::string(what) + ": empty cube");
}

std::vector<double> gaussian_window(std::size_t size) {
  std::vector<double> g(size);
  const double mid = double(size - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = double(i) - mid;
    total += g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid filtering of a rows x cols plane.
std::vector<double> filter(const double* x, std::size_t rows, std::size_t cols,
                           const std::vector<double>& g) {
  const std::size_t k = g.size(), orow = rows - k + 1, ocol = cols - k + 1;
  std::vector<double> tmp(rows * ocol), out(orow * ocol);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < ocol; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += g[t] * x[r * cols + c + t];
      tmp[r * ocol + c] = acc;
    }
  for (std::size_t r = 0; r < orow; ++r)
    for (std::size_t c = 0; c < ocol; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += g[t] * tmp[(r + t) * ocol + c];
      out[r * ocol + c] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Tensor64& reference, const Tensor64& test) {
  check_pair(reference, test, "psnr");
  const std::size_t nb = reference.dim(0), plane = reference.size() / nb;
  double total = 0.0;
  std::vector<double> sq(plane);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = reference[b * plane + i] - test[b * plane + i];
      sq[i] = d * d;
    }
    const double mse = pairwise_sum(std::span<const double>(sq)) / double(plane);
    total += mse < 1e-12 ? kPsnrCap : 10.0 * std::log10(1.0 / mse);
  }
  return total / double(nb);
}

double ssim(const Tensor64& reference, const Tensor64& test) {
  check_pair(reference, test, "ssim");
  const std::size_t nb = reference.dim(0), rows = reference.dim(1), cols = reference.dim(2);
  std::size_t size = std::min({kSsimWindow, rows, cols});
  if (size % 2 == 0) --size;
  const std::vector<double> g = gaussian_window(size);
  const std::size_t plane = rows * cols;
  std::vector<double> xx(plane), yy(plane), xy(plane);
  double total = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double* x = reference.data().data() + b * plane;
    const double* y = test.data().data() + b * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter(x, rows, cols, g), my = filter(y, rows, cols, g);
    const auto sxx = filter(xx.data(), rows, cols, g), syy = filter(yy.data(), rows, cols, g),
               sxy = filter(xy.data(), rows, cols, g);
    std::vector<double> map(mx.size());
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
      map[i] = ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    total += pairwise_sum(std::span<const double>(map)) / double(map.size());
  }
  return total / double(nb);
}

double sam(const Tensor64& reference, const Tensor64& test) {
  check_pair(reference, test, "sam");
  const std::size_t nb = reference.dim(0), plane = reference.size() / nb;
  std::vector<double> angles;
  angles.reserve(plane);
  for (std::size_t p = 0; p < plane; ++p) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const double x = reference[b * plane + p], y = test[b * plane + p];
      dot += x * y;
      nx += x * x;
      ny += y * y;
    }
    if (nx == 0.0 || ny == 0.0) continue;
    angles.push_back(std::acos(std::clamp(dot / std::sqrt(nx * ny), -1.0, 1.0)));
  }
  if (angles.empty()) return 0.0;
  return pairwise_sum(std::span<const double>(angles)) / double(angles.size());
}

MetricsReport evaluate_metrics(const Tensor64& reference, const Tensor64& test) {
  return {psnr(reference, test), ssim(reference, test), sam(reference, test)};
}

}  // namespace ssum
