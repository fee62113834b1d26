// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "ssum/ssum.h"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = "capi_work";

std::string path(const std::string& name) { return (kDir / name).string(); }

struct Run {
  int code;
  std::string out;
};

// Runs the CLI with stdout and stderr merged.
Run cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SSUM_CLI_PATH + "\" " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const std::string& file, const std::string& text) { std::ofstream(file) << text; }

void save_synthetic(const std::string& file, uint32_t b, uint32_t h, uint32_t w, uint64_t seed) {
  ssum_cube* c = nullptr;
  REQUIRE(ssum_cube_synthetic(b, h, w, 3, seed, &c) == SSUM_OK);
  REQUIRE(ssum_cube_save(c, file.c_str(), SSUM_F32) == SSUM_OK);
  ssum_cube_free(c);
}

const char* kTinyConfig =
    "model.base_channels = 4\n"
    "model.state_dim = 4\n"
    "train.epochs = 1\n"
    "train.steps_per_epoch = 2\n"
    "train.batch_size = 1\n"
    "train.patch_bands = 8\n"
    "train.patch_rows = 16\n"
    "train.patch_cols = 16\n"
    "train.validate = false\n"
    "data.cubes = 1\n"
    "data.bands = 8\n"
    "data.rows = 16\n"
    "data.cols = 16\n";

struct Fixture {
  Fixture() { fs::create_directories(kDir); }
};

}  // namespace

TEST_CASE_FIXTURE(Fixture, "cube handles and errors") {
  ssum_cube* c = nullptr;
  std::vector<double> v(2 * 3 * 4);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i) / 24;
  REQUIRE(ssum_cube_create(2, 3, 4, v.data(), &c) == SSUM_OK);
  uint32_t dims[3];
  ssum_cube_dims(c, dims);
  CHECK(dims[0] == 2);
  CHECK(dims[1] == 3);
  CHECK(dims[2] == 4);
  CHECK(ssum_cube_data(c)[5] == v[5]);
  CHECK(ssum_cube_dtype(c) == SSUM_F64);
  REQUIRE(ssum_cube_save(c, path("small.hsic").c_str(), SSUM_F64) == SSUM_OK);
  ssum_cube* back = nullptr;
  REQUIRE(ssum_cube_load(path("small.hsic").c_str(), &back) == SSUM_OK);
  CHECK(std::vector<double>(ssum_cube_data(back), ssum_cube_data(back) + v.size()) == v);
  ssum_metrics m{};
  REQUIRE(ssum_evaluate(c, back, &m) == SSUM_OK);
  CHECK(m.psnr == 120.0);
  ssum_cube_free(back);
  ssum_cube_free(c);

  ssum_cube* none = nullptr;
  CHECK(ssum_cube_load(path("missing.hsic").c_str(), &none) == SSUM_ERR_DATA);
  CHECK(none == nullptr);
  CHECK(std::string(ssum_last_error()).size() > 0);
  CHECK(ssum_cube_create(0, 3, 4, nullptr, &none) != SSUM_OK);

  ssum_config* cfg = nullptr;
  CHECK(ssum_config_parse("model.depth = 3\n", &cfg) == SSUM_ERR_USAGE);
  REQUIRE(ssum_config_default(&cfg) == SSUM_OK);
  CHECK(ssum_config_set(cfg, "train.lr", "fast") == SSUM_ERR_USAGE);
  ssum_model* model = nullptr;
  REQUIRE(ssum_config_set(cfg, "model.base_channels", "32") == SSUM_OK);
  REQUIRE(ssum_model_init(cfg, &model) == SSUM_OK);
  CHECK(ssum_model_parameter_count(model) == 9910561);
  ssum_model_free(model);
  ssum_config_free(cfg);

  ssum_scan* s = nullptr;
  CHECK(ssum_scan_create("XYZ", 2, 2, 2, &s) == SSUM_ERR_USAGE);
  REQUIRE(ssum_scan_create("R-C-B", 2, 3, 4, &s) == SSUM_OK);
  CHECK(ssum_scan_length(s) == 24);
  std::size_t pairs = 0, breaks = 9;
  ssum_scan_continuity(s, &pairs, &breaks);
  CHECK(pairs == 23);
  CHECK(breaks == 0);
  ssum_scan_free(s);
}

TEST_CASE_FIXTURE(Fixture, "eval and noise commands") {
  save_synthetic(path("clean.hsic"), 31, 24, 24, 3);
  const auto same = cli("eval --clean " + path("clean.hsic") + " --test " + path("clean.hsic"));
  CHECK(same.code == 0);
  CHECK(same.out == "psnr 120.00\nssim 1.0000\nsam 0.0000\n");

  write(path("off.cfg"), "noise.gaussian = false\n");
  REQUIRE(cli("noise --config " + path("off.cfg") + " --seed 4 --in " + path("clean.hsic") +
              " --out " + path("off.hsic"))
              .code == 0);
  CHECK(slurp(path("off.hsic")) == slurp(path("clean.hsic")));

  write(path("mix.cfg"),
        "noise.sigma_max = 95\nnoise.impulse = true\nnoise.stripes = true\nnoise.deadlines = true\n");
  const std::string args = "noise --config " + path("mix.cfg") + " --seed 11 --in " + path("clean.hsic");
  const auto a = cli(args + " --out " + path("mix_a.hsic"));
  const auto b = cli(args + " --out " + path("mix_b.hsic"));
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(path("mix_a.hsic")) == slurp(path("mix_b.hsic")));
  CHECK(slurp(path("mix_a.hsic")) != slurp(path("clean.hsic")));
  CHECK(a.out.find("impulse_bands (10)") != std::string::npos);
  CHECK(a.out.find("stripe_bands (10)") != std::string::npos);
  CHECK(a.out.find("deadline_bands (10)") != std::string::npos);
  const auto other = cli("noise --config " + path("mix.cfg") + " --seed 12 --in " + path("clean.hsic") +
                         " --out " + path("mix_c.hsic"));
  CHECK(slurp(path("mix_c.hsic")) != slurp(path("mix_a.hsic")));

  const auto scored = cli("eval --clean " + path("clean.hsic") + " --test " + path("mix_a.hsic"));
  CHECK(scored.code == 0);
  CHECK(scored.out.rfind("psnr ", 0) == 0);
}

TEST_CASE_FIXTURE(Fixture, "scan command") {
  const auto r = cli("scan --scheme RCB --dims 2,2,2");
  CHECK(r.code == 0);
  CHECK(r.out.find("position,band,row,col\n0,0,0,0\n1,0,0,1\n2,0,1,1\n3,0,1,0\n4,1,1,0\n") == 0);
  CHECK(r.out.find("continuity violations 0") != std::string::npos);
  const auto sweep = cli("scan --scheme SWEEP --dims 2,3,4 --csv " + path("sweep.csv"));
  CHECK(sweep.code == 0);
  CHECK(sweep.out.find("continuity violations 5") != std::string::npos);
  CHECK(slurp(path("sweep.csv")).rfind("position,band,row,col\n0,0,0,0\n", 0) == 0);
}

TEST_CASE_FIXTURE(Fixture, "train and denoise commands") {
  write(path("tiny.cfg"), kTinyConfig);
  const auto t = cli("train --config " + path("tiny.cfg") + " --seed 5 --out " + path("run"));
  REQUIRE(t.code == 0);
  CHECK(t.out.find("parameters ") != std::string::npos);
  CHECK(fs::exists(path("run/model.ssuw")));
  CHECK(fs::exists(path("run/loss.csv")));
  CHECK(fs::exists(path("run/summary.txt")));

  save_synthetic(path("big.hsic"), 31, 70, 70, 8);
  const std::string base =
      "denoise --weights " + path("run/model.ssuw") + " --in " + path("big.hsic") + " --bands 30,15,2";
  REQUIRE(cli(base + " --out " + path("den_a.hsic") + " --png " + path("den_a.png")).code == 0);
  REQUIRE(cli(base + " --out " + path("den_b.hsic") + " --png " + path("den_b.png")).code == 0);
  ssum_cube* out = nullptr;
  REQUIRE(ssum_cube_load(path("den_a.hsic").c_str(), &out) == SSUM_OK);
  uint32_t dims[3];
  ssum_cube_dims(out, dims);
  CHECK(dims[0] == 31);
  CHECK(dims[1] == 70);
  CHECK(dims[2] == 70);
  CHECK(ssum_cube_dtype(out) == SSUM_F32);
  ssum_cube_free(out);
  CHECK(slurp(path("den_a.hsic")) == slurp(path("den_b.hsic")));
  const std::string png = slurp(path("den_a.png"));
  CHECK(png.substr(1, 3) == "PNG");
  CHECK(png == slurp(path("den_b.png")));

  ssum_model* m = nullptr;
  REQUIRE(ssum_model_load(path("run/model.ssuw").c_str(), &m) == SSUM_OK);
  REQUIRE(ssum_model_save(m, path("copy.ssuw").c_str()) == SSUM_OK);
  CHECK(slurp(path("copy.ssuw")) == slurp(path("run/model.ssuw")));
  ssum_model_free(m);
}

TEST_CASE_FIXTURE(Fixture, "exit codes") {
  CHECK(cli("").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("eval --clean x.hsic").code == 2);
  CHECK(cli("scan --scheme RCB --dims 2,2").code == 2);
  CHECK(cli("scan --scheme QQQ --dims 2,2,2").code == 2);
  CHECK(cli("eval --clean " + path("nope.hsic") + " --test " + path("nope.hsic")).code == 3);
  write(path("bad.cfg"), "train.lr = 1\nbogus = 2\n");
  const auto bad = cli("train --config " + path("bad.cfg"));
  CHECK(bad.code == 2);
  CHECK(bad.out.find("line 2") != std::string::npos);
  CHECK(cli("--help").code == 0);
}
