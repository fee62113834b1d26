// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SSUM_METRICS_HPP
#define SSUM_METRICS_HPP

#include "ssum/tensor.hpp"

namespace ssum {

inline constexpr double kPsnrCap = 120.0;

struct MetricsReport {
  double psnr = 0.0;  // dB, mean over bands
  double ssim = 0.0;  // mean over bands
  double sam = 0.0;   // radians, mean over pixels
};

double psnr(const Tensor64& reference, const Tensor64& test);
/// Gaussian 11x11 window (sigma 1.5), valid positions only. Bands smaller
/// than the window use a window of the largest fitting odd size.
double ssim(const Tensor64& reference, const Tensor64& test);
double sam(const Tensor64& reference, const Tensor64& test);
MetricsReport evaluate_metrics(const Tensor64& reference, const Tensor64& test);

}  // namespace ssum

#endif  // SSUM_METRICS_HPP
