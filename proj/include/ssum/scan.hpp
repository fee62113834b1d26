// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Serialization orders of a (band, row, col) grid into a 1-d token sequence.
//
// A scheme tag XYZ lists axes from fastest to slowest. Letter semantics:
//   R  traversal along a row: the column coordinate varies
//   C  traversal along a column: the row coordinate varies
//   B  traversal across bands: the band coordinate varies
// Continuous schemes snake: the fastest axis reverses direction at every
// step of the middle axis, and the whole (fast, middle) plane is traversed
// in reverse at every step of the slowest axis. All scans start at (0,0,0).

#ifndef SSUM_SCAN_HPP
#define SSUM_SCAN_HPP

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssum {

enum class ScanScheme { RCB, RBC, CRB, CBR, BRC, BCR, Sweep };

/// The six continuous schemes in block-assignment order.
inline constexpr std::array<ScanScheme, 6> kContinuousSchemes = {
    ScanScheme::RCB, ScanScheme::RBC, ScanScheme::CRB,
    ScanScheme::CBR, ScanScheme::BRC, ScanScheme::BCR};

std::string_view scheme_name(ScanScheme s);
/// Accepts "RCB", "R-C-B", "rcb", "SWEEP"; throws UsageError otherwise.
ScanScheme parse_scheme(std::string_view tag);

struct GridDims {
  std::size_t bands = 1, rows = 1, cols = 1;
  std::size_t volume() const { return bands * rows * cols; }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct GridCoord {
  std::size_t band = 0, row = 0, col = 0;
  friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

class ScanPermutation {
 public:
  ScanPermutation(GridDims dims, std::vector<std::size_t> forward);

  const GridDims& dims() const noexcept { return dims_; }
  std::size_t length() const noexcept { return forward_.size(); }
  /// Sequence position -> flat (band, row, col) index.
  std::span<const std::size_t> forward() const noexcept { return forward_; }
  /// Flat cube index -> sequence position.
  std::span<const std::size_t> inverse() const noexcept { return inverse_; }

  GridCoord coord(std::size_t position) const;

  friend bool operator==(const ScanPermutation& a, const ScanPermutation& b) {
    return a.dims_ == b.dims_ && a.forward_ == b.forward_;
  }

 private:
  GridDims dims_;
  std::vector<std::size_t> forward_;
  std::vector<std::size_t> inverse_;
};

ScanPermutation build_permutation(ScanScheme scheme, GridDims dims);

/// Swaps the forward and inverse lists. The result maps sequence positions
/// to positions of the original sequence; it is generally not a scan order
/// of the grid.
ScanPermutation invert(const ScanPermutation& p);

/// Same cells visited in reverse order.
ScanPermutation flipped(const ScanPermutation& p);

struct ContinuityReport {
  std::size_t pairs = 0;                     // adjacent pairs examined
  std::vector<std::size_t> discontinuities;  // positions k with |p(k+1) - p(k)|_1 > 1
  std::size_t count() const noexcept { return discontinuities.size(); }
};

ContinuityReport continuity_report(const ScanPermutation& p);

template <typename Token>
std::vector<Token> flip_sequence(std::span<const Token> s) {
  return std::vector<Token>(s.rbegin(), s.rend());
}

/// Shared, immutable permutation for (scheme, dims); built once per key.
std::shared_ptr<const ScanPermutation> cached_permutation(ScanScheme scheme, GridDims dims);

}  // namespace ssum

#endif  // SSUM_SCAN_HPP
