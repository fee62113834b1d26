// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Binary formats. All integers and values are little-endian.
//
// HSIC cube:  "HSIC" | u16 version (1) | u16 dtype (0 f32, 1 f64)
//             | u32 bands | u32 rows | u32 cols | values in (band, row, col) order
// Checkpoint: "SSUW" | u32 version (1) | u32 n + n bytes of config text
//             | u32 tensor count | per tensor: u16 name length, name, u8 rank,
//               u32 extents[rank], u64 element offset
//             | f32 values, tensors concatenated in manifest order

#ifndef SSUM_IO_HPP
#define SSUM_IO_HPP

#include <cstdint>
#include <string>
#include <string_view>

#include "ssum/params.hpp"
#include "ssum/tensor.hpp"

namespace ssum {

enum class Dtype : std::uint16_t { f32 = 0, f64 = 1 };

inline constexpr std::uint16_t kHsicVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct HsicCube {
  Tensor64 values;  // (bands, rows, cols)
  Dtype dtype = Dtype::f64;
};

std::string encode_hsic(const Tensor64& cube, Dtype dtype);
HsicCube decode_hsic(std::string_view bytes);

void save_hsic(const std::string& path, const Tensor64& cube, Dtype dtype);
HsicCube load_hsic(const std::string& path);

struct Checkpoint {
  std::string config;  // key = value text
  ParameterSet<float> params;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace ssum

#endif  // SSUM_IO_HPP
