// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include "doctest.h"
#include "ssum/config.hpp"
#include "ssum/error.hpp"
#include "ssum/io.hpp"
#include "ssum/model.hpp"
#include "ssum/noise.hpp"
#include "test_util.hpp"

using namespace ssum;

namespace {

std::string bytes(std::initializer_list<int> v) {
  std::string s;
  for (int b : v) s.push_back(static_cast<char>(b));
  return s;
}

}  // namespace

TEST_CASE("hsic byte layout") {
  const Tensor64 cube(Shape{1, 1, 2}, std::vector<double>{1.0, -2.5});
  const std::string want = "HSIC" + bytes({1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0}) +
                           bytes({0, 0, 0x80, 0x3f, 0, 0, 0x20, 0xc0});
  CHECK(encode_hsic(cube, Dtype::f32) == want);
  const std::string f64 = encode_hsic(cube, Dtype::f64);
  CHECK(f64.size() == 20 + 16);
  CHECK(f64.substr(6, 2) == bytes({1, 0}));
  CHECK(f64.substr(28) == bytes({0, 0, 0, 0, 0, 0, 0x04, 0xc0}));
}

TEST_CASE("hsic round trips bitwise") {
  Rng rng(1);
  const auto x = test::random_tensor({3, 5, 4}, rng);
  const auto back = decode_hsic(encode_hsic(x, Dtype::f64));
  CHECK(back.values == x);
  CHECK(back.dtype == Dtype::f64);

  const auto xf = x.cast<float>().cast<double>();
  const auto back32 = decode_hsic(encode_hsic(xf, Dtype::f32));
  CHECK(back32.values == xf);
  CHECK(back32.dtype == Dtype::f32);
  CHECK(encode_hsic(back32.values, Dtype::f32) == encode_hsic(xf, Dtype::f32));

  const auto path = (std::filesystem::temp_directory_path() / "ssum_io_test.hsic").string();
  save_hsic(path, x, Dtype::f64);
  CHECK(load_hsic(path).values == x);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_hsic(path), DataError);
}

TEST_CASE("hsic rejects malformed input") {
  const Tensor64 cube(Shape{1, 2, 2}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  const std::string good = encode_hsic(cube, Dtype::f64);
  CHECK_NOTHROW(decode_hsic(good));

  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_hsic(magic), DataError);
  std::string version = good;
  version[4] = 2;
  CHECK_THROWS_AS(decode_hsic(version), DataError);
  std::string dtype = good;
  dtype[6] = 7;
  CHECK_THROWS_AS(decode_hsic(dtype), DataError);
  CHECK_THROWS_AS(decode_hsic(good.substr(0, good.size() - 1)), DataError);
  CHECK_THROWS_AS(decode_hsic(good + "x"), DataError);
  CHECK_THROWS_AS(decode_hsic(good.substr(0, 10)), DataError);

  std::string nan_bytes = encode_hsic(cube, Dtype::f64);
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan_bytes.data() + 20 + 16, &q, 8);
  CHECK_THROWS_WITH_AS(decode_hsic(nan_bytes), doctest::Contains("NaN"), DataError);

  std::string zero = good;
  zero[8] = 0;
  CHECK_THROWS_AS(decode_hsic(zero), DataError);
}

TEST_CASE("checkpoint round trip") {
  ModelConfig m;
  m.base_channels = 2;
  m.state_dim = 2;
  Rng rng(4);
  Checkpoint ck{"model.base_channels = 2\n", init_model<float>(m, rng)};
  const std::string enc = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(enc);
  CHECK(back.config == ck.config);
  CHECK(back.params == ck.params);
  CHECK(encode_checkpoint(back) == enc);

  CHECK_THROWS_AS(decode_checkpoint(enc.substr(0, enc.size() - 3)), DataError);
  CHECK_THROWS_AS(decode_checkpoint("SSUX" + enc.substr(4)), DataError);
  Checkpoint bad = ck;
  bad.params.entries()[0].value[0] = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(decode_checkpoint(encode_checkpoint(bad)), DataError);
}

TEST_CASE("config round trip") {
  TrainConfig c;
  c.model.base_channels = 12;
  c.model.channel_multipliers = {1, 2};
  c.model.downsample_blocks = {2};
  c.model.continuous_scan = false;
  c.noise = NoiseSpec::mixture(55.0);
  c.noise.seed = 123456789012345ULL;
  c.lr = 1.0 / 3.0;
  c.milestones = {3, 7};
  c.seed = 99;
  c.precision = Precision::f64;
  c.data.files = {"a.hsic", "b.hsic"};
  const std::string text = format_config(c);
  CHECK(parse_config(text) == c);
  CHECK(format_config(parse_config(text)) == text);
  CHECK(text.find("train.lr = ") != std::string::npos);
}

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\n\n  model.state_dim = 8  # trailing\ntrain.epochs=3\n");
  CHECK(c.model.state_dim == 8);
  CHECK(c.epochs == 3);
  CHECK(c.lr == 3e-4);
  CHECK(c.milestones == std::vector<std::size_t>{20, 35});
  CHECK(c.lr_factor == 0.5);
  CHECK(c.epochs == 3);
  CHECK(TrainConfig{}.epochs == 45);
  CHECK(TrainConfig{}.batch_size == 14);

  CHECK_THROWS_WITH_AS(parse_config("train.epochs = 3\nmodel.stat_dim = 8\n"), doctest::Contains("line 2"),
                       UsageError);
  CHECK_THROWS_AS(parse_config("train.epochs = many\n"), UsageError);
  CHECK_THROWS_AS(parse_config("train.epochs\n"), UsageError);
  CHECK_THROWS_AS(parse_config("noise.gaussian = maybe\n"), UsageError);
  CHECK_THROWS_AS(parse_config("train.precision = f16\n"), UsageError);
}
