// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/scan.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

#include "ssum/error.hpp"

namespace ssum {
namespace {

enum Axis { kBand = 0, kRow = 1, kCol = 2 };

// Grid axis varied by each tag letter.
Axis letter_axis(char c) {
  switch (c) {
    case 'R': return kCol;
    case 'C': return kRow;
    default: return kBand;
  }
}

std::array<Axis, 3> scheme_axes(ScanScheme s) {
  const std::string_view name = scheme_name(s);
  return {letter_axis(name[0]), letter_axis(name[1]), letter_axis(name[2])};
}

}  // namespace

std::string_view scheme_name(ScanScheme s) {
  switch (s) {
    case ScanScheme::RCB: return "RCB";
    case ScanScheme::RBC: return "RBC";
    case ScanScheme::CRB: return "CRB";
    case ScanScheme::CBR: return "CBR";
    case ScanScheme::BRC: return "BRC";
    case ScanScheme::BCR: return "BCR";
    case ScanScheme::Sweep: return "SWEEP";
  }
  return "?";
}

ScanScheme parse_scheme(std::string_view tag) {
  std::string norm;
  for (char c : tag)
    if (c != '-' && c != '_') norm.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  for (ScanScheme s : kContinuousSchemes)
    if (norm == scheme_name(s)) return s;
  if (norm == "SWEEP") return ScanScheme::Sweep;
  throw UsageError("unknown scan scheme '" + std::string(tag) + "'");
}

ScanPermutation::ScanPermutation(GridDims dims, std::vector<std::size_t> forward)
    : dims_(dims), forward_(std::move(forward)), inverse_(forward_.size(), forward_.size()) {
  if (forward_.size() != dims_.volume()) throw UsageError("permutation length does not match dims");
  for (std::size_t k = 0; k < forward_.size(); ++k) {
    const std::size_t f = forward_[k];
    if (f >= forward_.size() || inverse_[f] != forward_.size())
      throw UsageError("permutation is not a bijection");
    inverse_[f] = k;
  }
}

GridCoord ScanPermutation::coord(std::size_t position) const {
  const std::size_t flat = forward_.at(position);
  return {flat / (dims_.rows * dims_.cols), (flat / dims_.cols) % dims_.rows, flat % dims_.cols};
}

ScanPermutation build_permutation(ScanScheme scheme, GridDims dims) {
  if (dims.bands == 0 || dims.rows == 0 || dims.cols == 0)
    throw UsageError("scan dims must all be >= 1");
  const std::array<std::size_t, 3> extent = {dims.bands, dims.rows, dims.cols};
  const bool snake = scheme != ScanScheme::Sweep;
  // Sweep is raster order over (band, row, col), i.e. the RCB axes without snaking.
  const auto axes = scheme_axes(snake ? scheme : ScanScheme::RCB);
  const std::size_t n_fast = extent[axes[0]], n_mid = extent[axes[1]], n_slow = extent[axes[2]];
  const std::size_t plane = n_fast * n_mid;

  std::vector<std::size_t> forward;
  forward.reserve(dims.volume());
  for (std::size_t slow = 0; slow < n_slow; ++slow) {
    for (std::size_t k = 0; k < plane; ++k) {
      const std::size_t kk = (snake && slow % 2 == 1) ? plane - 1 - k : k;
      const std::size_t mid = kk / n_fast;
      std::size_t fast = kk % n_fast;
      if (snake && mid % 2 == 1) fast = n_fast - 1 - fast;
      std::array<std::size_t, 3> c{};
      c[axes[0]] = fast;
      c[axes[1]] = mid;
      c[axes[2]] = slow;
      forward.push_back((c[kBand] * dims.rows + c[kRow]) * dims.cols + c[kCol]);
    }
  }
  return ScanPermutation(dims, std::move(forward));
}

ScanPermutation invert(const ScanPermutation& p) {
  return ScanPermutation(p.dims(), std::vector<std::size_t>(p.inverse().begin(), p.inverse().end()));
}

ScanPermutation flipped(const ScanPermutation& p) {
  return ScanPermutation(p.dims(), std::vector<std::size_t>(p.forward().rbegin(), p.forward().rend()));
}

ContinuityReport continuity_report(const ScanPermutation& p) {
  ContinuityReport r;
  if (p.length() < 2) return r;
  r.pairs = p.length() - 1;
  auto dist = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  GridCoord prev = p.coord(0);
  for (std::size_t k = 1; k < p.length(); ++k) {
    const GridCoord cur = p.coord(k);
    if (dist(prev.band, cur.band) + dist(prev.row, cur.row) + dist(prev.col, cur.col) > 1)
      r.discontinuities.push_back(k - 1);
    prev = cur;
  }
  return r;
}

std::shared_ptr<const ScanPermutation> cached_permutation(ScanScheme scheme, GridDims dims) {
  using Key = std::tuple<int, std::size_t, std::size_t, std::size_t>;
  static std::shared_mutex mutex;
  static std::map<Key, std::shared_ptr<const ScanPermutation>> cache;
  const Key key{static_cast<int>(scheme), dims.bands, dims.rows, dims.cols};
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const ScanPermutation>(build_permutation(scheme, dims));
  std::unique_lock lock(mutex);
  return cache.emplace(key, std::move(built)).first->second;
}

}  // namespace ssum
