// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ssum/error.hpp"

namespace ssum {
namespace {

constexpr std::string_view kHsicMagic = "HSIC";
constexpr std::string_view kCheckpointMagic = "SSUW";

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError(std::string(what_) + ": truncated file");
  }

  std::string_view bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::size_t checked_product(std::initializer_list<std::uint64_t> dims, std::uint64_t elem,
                            const char* what) {
  std::uint64_t n = elem;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d)
      throw DataError(std::string(what) + ": extent overflow");
    n *= d;
  }
  return static_cast<std::size_t>(n);
}

}  // namespace

std::string encode_hsic(const Tensor64& cube, Dtype dtype) {
  if (cube.rank() != 3) throw UsageError("hsic: cube must be (bands, rows, cols)");
  for (auto d : cube.shape())
    if (d > std::numeric_limits<std::uint32_t>::max()) throw UsageError("hsic: extent exceeds u32");
  std::string out(kHsicMagic);
  put<std::uint16_t>(out, kHsicVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(dtype));
  for (auto d : cube.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + cube.size() * (dtype == Dtype::f32 ? 4 : 8));
  for (double v : cube.data()) {
    if (dtype == Dtype::f32)
      put(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    else
      put(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

HsicCube decode_hsic(std::string_view bytes) {
  Reader r(bytes, "hsic");
  if (r.take(4) != kHsicMagic) throw DataError("hsic: bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kHsicVersion) throw DataError("hsic: unsupported version " + std::to_string(version));
  const auto tag = r.get<std::uint16_t>();
  if (tag > 1) throw DataError("hsic: unknown dtype tag " + std::to_string(tag));
  HsicCube out;
  out.dtype = static_cast<Dtype>(tag);
  const std::uint64_t nb = r.get<std::uint32_t>(), nr = r.get<std::uint32_t>(), nc = r.get<std::uint32_t>();
  const std::size_t elem = out.dtype == Dtype::f32 ? 4 : 8;
  const std::size_t payload = checked_product({nb, nr, nc}, elem, "hsic");
  if (r.remaining() != payload)
    throw DataError("hsic: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                    std::to_string(payload));
  out.values = Tensor64(Shape{std::size_t(nb), std::size_t(nr), std::size_t(nc)});
  for (double& v : out.values.data()) {
    v = out.dtype == Dtype::f32 ? double(std::bit_cast<float>(r.get<std::uint32_t>()))
                                : std::bit_cast<double>(r.get<std::uint64_t>());
    if (std::isnan(v)) throw DataError("hsic: payload contains NaN");
  }
  return out;
}

void save_hsic(const std::string& path, const Tensor64& cube, Dtype dtype) {
  write_file(path, encode_hsic(cube, dtype));
}

HsicCube load_hsic(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_hsic(bytes);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.config.size()));
  out += ckpt.config;
  const auto& entries = ckpt.params.entries();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    if (e.name.size() > 0xFFFF || e.value.rank() > 0xFF) throw UsageError("checkpoint: tensor header too large");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out += e.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(e.value.rank()));
    for (auto d : e.value.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint64_t>(out, offset);
    offset += e.value.size();
  }
  for (const auto& e : entries)
    for (float v : e.value.data()) put(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes, "checkpoint");
  if (r.take(4) != kCheckpointMagic) throw DataError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  ck.config = std::string(r.take(r.get<std::uint32_t>()));
  const auto count = r.get<std::uint32_t>();
  struct Header {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Header> headers;
  std::uint64_t expected = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Header h;
    h.name = std::string(r.take(r.get<std::uint16_t>()));
    const auto rank = r.get<std::uint8_t>();
    std::uint64_t n = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      const std::uint64_t d = r.get<std::uint32_t>();
      n = checked_product({n, d}, 1, "checkpoint");
      h.shape.push_back(std::size_t(d));
    }
    h.offset = r.get<std::uint64_t>();
    if (h.offset != expected) throw DataError("checkpoint: tensor '" + h.name + "' has a bad offset");
    expected += n;
    headers.push_back(std::move(h));
  }
  if (r.remaining() != checked_product({expected}, 4, "checkpoint"))
    throw DataError("checkpoint: payload size does not match manifest");
  for (auto& h : headers) {
    Tensor t(h.shape);
    for (float& v : t.data()) {
      v = std::bit_cast<float>(r.get<std::uint32_t>());
      if (!std::isfinite(v)) throw DataError("checkpoint: tensor '" + h.name + "' is not finite");
    }
    ck.params.add(std::move(h.name), std::move(t));
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw DataError("write to '" + path + "' failed");
}

}  // namespace ssum
