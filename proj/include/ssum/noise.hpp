// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Mixed-noise degradation and a synthetic clean-cube generator.
// Cubes are (bands, rows, cols) with values in [0, 1].

#ifndef SSUM_NOISE_HPP
#define SSUM_NOISE_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ssum/tensor.hpp"

namespace ssum {

struct NoiseSpec {
  bool gaussian = true;
  double sigma_max = 25.0;  // 0-255 scale

  bool impulse = false;
  double impulse_band_fraction = 1.0 / 3.0;
  double impulse_min = 0.10;
  double impulse_max = 0.70;

  bool stripes = false;
  double stripe_band_fraction = 1.0 / 3.0;
  double stripe_column_min = 0.05;
  double stripe_column_max = 0.15;
  double stripe_amplitude = 0.25;

  bool deadlines = false;
  double deadline_band_fraction = 1.0 / 3.0;
  double deadline_column_min = 0.05;
  double deadline_column_max = 0.15;

  std::uint64_t seed = 0;

  static NoiseSpec none();
  static NoiseSpec gaussian_only(double sigma_max);
  /// All four components.
  static NoiseSpec mixture(double sigma_max);

  void validate() const;
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// floor(bands * fraction).
std::size_t affected_band_count(std::size_t bands, double fraction);

struct NoiseReport {
  std::vector<double> sigma;  // realized per-band sigma on the [0,1] scale
  std::vector<std::size_t> impulse_bands;
  std::vector<double> impulse_ratio;  // aligned with impulse_bands
  std::vector<std::size_t> stripe_bands;
  std::vector<std::size_t> deadline_bands;
  Tensor64 pre_clip;
};

Tensor64 degrade(const Tensor64& clean, const NoiseSpec& spec, NoiseReport* report = nullptr);

/// Sum of `rank` abundance-weighted smooth spectra, rescaled to [0.05, 0.95].
/// Abundances are non-negative and sum to one at every pixel.
Tensor64 synth_clean_cube(std::size_t bands, std::size_t rows, std::size_t cols, std::size_t rank,
                          std::uint64_t seed);

}  // namespace ssum

#endif  // SSUM_NOISE_HPP
