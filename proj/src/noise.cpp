// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssum/error.hpp"
#include "ssum/rng.hpp"

namespace ssum {
namespace {

enum Stream : std::uint64_t { kGaussian = 1, kImpulse = 2, kStripes = 3, kDeadlines = 4 };

// k distinct indices from [0, n), sorted.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t column_count(std::size_t cols, double lo, double hi, Rng& rng) {
  const double q = rng.uniform(lo, hi);
  const auto k = static_cast<std::size_t>(std::llround(q * double(cols)));
  return std::clamp<std::size_t>(k, 1, cols);
}

void check_fraction(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string("noise: ") + what + " must lie in [0,1]");
}

void check_range(double lo, double hi, const char* what) {
  check_fraction(lo, what);
  check_fraction(hi, what);
  if (lo > hi) throw UsageError(std::string("noise: ") + what + " range is reversed");
}

}  // namespace

NoiseSpec NoiseSpec::none() {
  NoiseSpec s;
  s.gaussian = false;
  return s;
}

NoiseSpec NoiseSpec::gaussian_only(double sigma_max) {
  NoiseSpec s;
  s.sigma_max = sigma_max;
  return s;
}

NoiseSpec NoiseSpec::mixture(double sigma_max) {
  NoiseSpec s = gaussian_only(sigma_max);
  s.impulse = s.stripes = s.deadlines = true;
  return s;
}

void NoiseSpec::validate() const {
  if (!(sigma_max >= 0.0 && sigma_max <= 255.0)) throw UsageError("noise: sigma_max must lie in [0,255]");
  check_fraction(impulse_band_fraction, "impulse band fraction");
  check_fraction(stripe_band_fraction, "stripe band fraction");
  check_fraction(deadline_band_fraction, "deadline band fraction");
  check_range(impulse_min, impulse_max, "impulse ratio");
  check_range(stripe_column_min, stripe_column_max, "stripe column fraction");
  check_range(deadline_column_min, deadline_column_max, "deadline column fraction");
  if (!(stripe_amplitude >= 0.0 && stripe_amplitude <= 1.0))
    throw UsageError("noise: stripe amplitude must lie in [0,1]");
}

std::size_t affected_band_count(std::size_t bands, double fraction) {
  return static_cast<std::size_t>(std::floor(double(bands) * fraction + 1e-9));
}

Tensor64 degrade(const Tensor64& clean, const NoiseSpec& spec, NoiseReport* report) {
  spec.validate();
  if (clean.rank() != 3) throw DataError("degrade: cube must be (bands, rows, cols)");
  if (clean.size() == 0) throw DataError("degrade: empty cube");
  require_finite(clean, "degrade");
  const std::size_t nb = clean.dim(0), nr = clean.dim(1), nc = clean.dim(2), plane = nr * nc;
  const Rng root(spec.seed);
  NoiseReport local;
  NoiseReport& rep = report ? *report : local;
  rep = NoiseReport{};
  rep.sigma.assign(nb, 0.0);
  Tensor64 y = clean;
  auto band = [&](std::size_t b) { return y.data().subspan(b * plane, plane); };

  if (spec.gaussian) {
    Rng rng = root.fork(kGaussian);
    for (std::size_t b = 0; b < nb; ++b) rep.sigma[b] = rng.uniform(0.0, spec.sigma_max) / 255.0;
    for (std::size_t b = 0; b < nb; ++b)
      for (double& v : band(b)) v += rep.sigma[b] * rng.normal();
  }
  if (spec.impulse) {
    Rng rng = root.fork(kImpulse);
    rep.impulse_bands = choose(nb, affected_band_count(nb, spec.impulse_band_fraction), rng);
    for (std::size_t b : rep.impulse_bands) {
      const double p = rng.uniform(spec.impulse_min, spec.impulse_max);
      rep.impulse_ratio.push_back(p);
      const auto count = static_cast<std::size_t>(std::llround(p * double(plane)));
      auto px = band(b);
      for (std::size_t i : choose(plane, count, rng)) px[i] = rng.coin() ? 1.0 : 0.0;
    }
  }
  if (spec.stripes) {
    Rng rng = root.fork(kStripes);
    rep.stripe_bands = choose(nb, affected_band_count(nb, spec.stripe_band_fraction), rng);
    for (std::size_t b : rep.stripe_bands) {
      const std::size_t k = column_count(nc, spec.stripe_column_min, spec.stripe_column_max, rng);
      auto px = band(b);
      for (std::size_t c : choose(nc, k, rng)) {
        const double offset = rng.uniform(-spec.stripe_amplitude, spec.stripe_amplitude);
        for (std::size_t r = 0; r < nr; ++r) px[r * nc + c] += offset;
      }
    }
  }
  if (spec.deadlines) {
    Rng rng = root.fork(kDeadlines);
    rep.deadline_bands = choose(nb, affected_band_count(nb, spec.deadline_band_fraction), rng);
    for (std::size_t b : rep.deadline_bands) {
      const std::size_t k = column_count(nc, spec.deadline_column_min, spec.deadline_column_max, rng);
      auto px = band(b);
      for (std::size_t c : choose(nc, k, rng))
        for (std::size_t r = 0; r < nr; ++r) px[r * nc + c] = 0.0;
    }
  }
  rep.pre_clip = y;
  for (double& v : y.data()) v = std::clamp(v, 0.0, 1.0);
  return y;
}

Tensor64 synth_clean_cube(std::size_t bands, std::size_t rows, std::size_t cols, std::size_t rank,
                          std::uint64_t seed) {
  if (bands == 0 || rows == 0 || cols == 0) throw UsageError("synth_clean_cube: empty extent");
  if (rank == 0 || rank > std::min(bands, rows * cols))
    throw UsageError("synth_clean_cube: rank must lie in [1, min(bands, rows*cols)]");
  const Rng root(seed);
  const std::size_t plane = rows * cols;

  // Spectra: smoothed random walks mapped to [0.1, 1].
  std::vector<std::vector<double>> spectra(rank, std::vector<double>(bands));
  Rng srng = root.fork(1);
  for (auto& s : spectra) {
    double walk = 0.0;
    for (double& v : s) v = (walk += srng.normal());
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<double> t = s;
      for (std::size_t b = 0; b < bands; ++b) {
        const double l = t[b == 0 ? 0 : b - 1], r = t[b + 1 == bands ? b : b + 1];
        s[b] = 0.25 * l + 0.5 * t[b] + 0.25 * r;
      }
    }
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    const double mn = *lo, span = *hi - *lo;
    for (double& v : s) v = span > 0.0 ? 0.1 + 0.9 * (v - mn) / span : 1.0;
  }

  // Abundances: softmax over low-frequency cosine fields.
  std::vector<std::vector<double>> field(rank, std::vector<double>(plane, 0.0));
  Rng arng = root.fork(2);
  constexpr int kWaves = 4;
  for (auto& f : field)
    for (int k = 0; k < kWaves; ++k) {
      const double fy = double(arng.below(3)), fx = double(arng.below(3));
      const double phase = arng.uniform(0.0, 2.0 * std::numbers::pi), amp = arng.uniform(0.5, 1.5);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          f[r * cols + c] += amp * std::cos(2.0 * std::numbers::pi *
                                                (fy * double(r) / double(rows) + fx * double(c) / double(cols)) +
                                            phase);
    }
  for (std::size_t p = 0; p < plane; ++p) {
    double top = field[0][p];
    for (std::size_t j = 1; j < rank; ++j) top = std::max(top, field[j][p]);
    double z = 0.0;
    for (std::size_t j = 0; j < rank; ++j) z += (field[j][p] = std::exp(field[j][p] - top));
    for (std::size_t j = 0; j < rank; ++j) field[j][p] /= z;
  }

  Tensor64 cube(Shape{bands, rows, cols});
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t p = 0; p < plane; ++p) {
      double v = 0.0;
      for (std::size_t j = 0; j < rank; ++j) v += field[j][p] * spectra[j][b];
      cube[b * plane + p] = v;
    }
  const auto [lo, hi] = std::minmax_element(cube.data().begin(), cube.data().end());
  const double mn = *lo, span = *hi - *lo;
  for (double& v : cube.data()) v = span > 0.0 ? std::clamp(0.05 + 0.9 * (v - mn) / span, 0.05, 0.95) : 0.5;
  return cube;
}

}  // namespace ssum
