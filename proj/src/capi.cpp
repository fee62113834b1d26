// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/ssum.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "ssum/config.hpp"
#include "ssum/io.hpp"
#include "ssum/metrics.hpp"
#include "ssum/noise.hpp"
#include "ssum/scan.hpp"
#include "ssum/train.hpp"

struct ssum_cube {
  ssum::Tensor64 values;
  ssum::Dtype dtype = ssum::Dtype::f64;
};

struct ssum_config {
  ssum::TrainConfig cfg;
};

struct ssum_model {
  ssum::TrainConfig cfg;
  ssum::ParameterSet<float> params;
};

struct ssum_scan {
  ssum::ScanPermutation perm;
  ssum::ContinuityReport report;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
ssum_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SSUM_OK;
  } catch (const ssum::UsageError& e) {
    g_last_error = e.what();
    return SSUM_ERR_USAGE;
  } catch (const ssum::DataError& e) {
    g_last_error = e.what();
    return SSUM_ERR_DATA;
  } catch (const ssum::NumericError& e) {
    g_last_error = e.what();
    return SSUM_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SSUM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SSUM_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw ssum::UsageError(std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string format_report(const ssum::NoiseReport& rep) {
  std::ostringstream out;
  char buf[32];
  out << "sigma";
  for (double s : rep.sigma) {
    std::snprintf(buf, sizeof buf, " %.6f", s);
    out << buf;
  }
  auto list = [&](const char* name, const std::vector<std::size_t>& bands) {
    out << "\n" << name << "_bands (" << bands.size() << ")";
    for (auto b : bands) out << ' ' << b;
  };
  list("impulse", rep.impulse_bands);
  list("stripe", rep.stripe_bands);
  list("deadline", rep.deadline_bands);
  out << "\n";
  return out.str();
}

void write_png(const ssum::Tensor64& cube, const uint32_t bands[3], const std::string& path) {
  const std::size_t nb = cube.dim(0), rows = cube.dim(1), cols = cube.dim(2), plane = rows * cols;
  std::vector<unsigned char> rgb(plane * 3);
  for (int ch = 0; ch < 3; ++ch) {
    if (bands[ch] >= nb)
      throw ssum::UsageError("png: band " + std::to_string(bands[ch]) + " out of range for " +
                             std::to_string(nb) + " bands");
    const double* v = cube.data().data() + std::size_t(bands[ch]) * plane;
    const auto [lo, hi] = std::minmax_element(v, v + plane);
    const double mn = *lo, span = *hi - *lo;
    for (std::size_t i = 0; i < plane; ++i)
      rgb[i * 3 + std::size_t(ch)] =
          span > 0.0 ? static_cast<unsigned char>(std::lround(255.0 * (v[i] - mn) / span)) : 0;
  }
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw ssum::DataError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    std::fclose(fp);
    throw ssum::DataError("png: libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw ssum::DataError("png: write to '" + path + "' failed");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(cols), png_uint_32(rows), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (std::size_t r = 0; r < rows; ++r) png_write_row(png, rgb.data() + r * cols * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw ssum::DataError("png: write to '" + path + "' failed");
}

std::size_t band_group(const ssum::TrainConfig& cfg) { return cfg.patch_bands; }

}  // namespace

extern "C" {

const char* ssum_last_error(void) { return g_last_error.c_str(); }
const char* ssum_version(void) { return "1.0.0"; }
void ssum_string_free(char* s) { std::free(s); }

ssum_status ssum_cube_create(uint32_t bands, uint32_t rows, uint32_t cols, const double* values,
                             ssum_cube** out) {
  return guarded([&] {
    need(out, "out");
    if (!bands || !rows || !cols) throw ssum::UsageError("cube: extents must be positive");
    auto c = std::make_unique<ssum_cube>();
    c->values = ssum::Tensor64(ssum::Shape{bands, rows, cols});
    if (values) std::copy_n(values, c->values.size(), c->values.data().begin());
    *out = c.release();
  });
}

ssum_status ssum_cube_synthetic(uint32_t bands, uint32_t rows, uint32_t cols, uint32_t rank, uint64_t seed,
                                ssum_cube** out) {
  return guarded([&] {
    need(out, "out");
    auto c = std::make_unique<ssum_cube>();
    c->values = ssum::synth_clean_cube(bands, rows, cols, rank, seed);
    *out = c.release();
  });
}

ssum_status ssum_cube_load(const char* path, ssum_cube** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto loaded = ssum::load_hsic(path);
    *out = new ssum_cube{std::move(loaded.values), loaded.dtype};
  });
}

ssum_status ssum_cube_save(const ssum_cube* cube, const char* path, ssum_dtype dtype) {
  return guarded([&] {
    need(cube, "cube");
    need(path, "path");
    if (dtype != SSUM_F32 && dtype != SSUM_F64) throw ssum::UsageError("unknown dtype");
    ssum::save_hsic(path, cube->values, static_cast<ssum::Dtype>(dtype));
  });
}

ssum_dtype ssum_cube_dtype(const ssum_cube* cube) { return static_cast<ssum_dtype>(cube->dtype); }

void ssum_cube_dims(const ssum_cube* cube, uint32_t dims[3]) {
  for (int i = 0; i < 3; ++i) dims[i] = static_cast<uint32_t>(cube->values.dim(std::size_t(i)));
}

const double* ssum_cube_data(const ssum_cube* cube) { return cube->values.data().data(); }
void ssum_cube_free(ssum_cube* cube) { delete cube; }

ssum_status ssum_cube_export_png(const ssum_cube* cube, const uint32_t bands[3], const char* path) {
  return guarded([&] {
    need(cube, "cube");
    need(bands, "bands");
    need(path, "path");
    write_png(cube->values, bands, path);
  });
}

ssum_status ssum_config_default(ssum_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ssum_config{};
  });
}

ssum_status ssum_config_parse(const char* text, ssum_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new ssum_config{ssum::parse_config(text)};
  });
}

ssum_status ssum_config_load(const char* path, ssum_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const std::string text = ssum::read_file(path);
    try {
      *out = new ssum_config{ssum::parse_config(text)};
    } catch (const ssum::UsageError& e) {
      throw ssum::UsageError(std::string(path) + ": " + e.what());
    }
  });
}

ssum_status ssum_config_set(ssum_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    cfg->cfg = ssum::parse_config(std::string(key) + " = " + value, cfg->cfg);
  });
}

ssum_status ssum_config_format(const ssum_config* cfg, char** text) {
  return guarded([&] {
    need(cfg, "config");
    need(text, "text");
    *text = dup_string(ssum::format_config(cfg->cfg));
  });
}

void ssum_config_free(ssum_config* cfg) { delete cfg; }

ssum_status ssum_degrade(const ssum_cube* clean, const ssum_config* cfg, uint64_t seed, ssum_cube** out,
                         char** report) {
  return guarded([&] {
    need(clean, "cube");
    need(cfg, "config");
    need(out, "out");
    ssum::NoiseSpec spec = cfg->cfg.noise;
    spec.seed = seed;
    ssum::NoiseReport rep;
    auto c = std::make_unique<ssum_cube>();
    c->values = ssum::degrade(clean->values, spec, &rep);
    c->dtype = clean->dtype;
    if (report) *report = dup_string(format_report(rep));
    *out = c.release();
  });
}

ssum_status ssum_evaluate(const ssum_cube* reference, const ssum_cube* test, ssum_metrics* out) {
  return guarded([&] {
    need(reference, "reference");
    need(test, "test");
    need(out, "out");
    const auto m = ssum::evaluate_metrics(reference->values, test->values);
    *out = {m.psnr, m.ssim, m.sam};
  });
}

ssum_status ssum_scan_create(const char* scheme, uint32_t bands, uint32_t rows, uint32_t cols, ssum_scan** out) {
  return guarded([&] {
    need(scheme, "scheme");
    need(out, "out");
    auto perm = ssum::build_permutation(ssum::parse_scheme(scheme), {bands, rows, cols});
    auto report = ssum::continuity_report(perm);
    *out = new ssum_scan{std::move(perm), std::move(report)};
  });
}

size_t ssum_scan_length(const ssum_scan* scan) { return scan->perm.length(); }

ssum_status ssum_scan_coord(const ssum_scan* scan, size_t k, uint32_t coord[3]) {
  return guarded([&] {
    need(scan, "scan");
    need(coord, "coord");
    if (k >= scan->perm.length()) throw ssum::UsageError("scan position out of range");
    const auto c = scan->perm.coord(k);
    coord[0] = uint32_t(c.band);
    coord[1] = uint32_t(c.row);
    coord[2] = uint32_t(c.col);
  });
}

void ssum_scan_continuity(const ssum_scan* scan, size_t* pairs, size_t* discontinuities) {
  if (pairs) *pairs = scan->report.pairs;
  if (discontinuities) *discontinuities = scan->report.count();
}

void ssum_scan_free(ssum_scan* scan) { delete scan; }

ssum_status ssum_train(const ssum_config* cfg, const char* out_dir, ssum_model** out) {
  return guarded([&] {
    need(cfg, "config");
    const auto data = ssum::make_dataset(cfg->cfg);
    auto result = ssum::train(cfg->cfg, data);
    auto model = std::make_unique<ssum_model>(ssum_model{cfg->cfg, std::move(result.weights)});
    if (out_dir) {
      const std::filesystem::path dir(out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw ssum::DataError("cannot create '" + dir.string() + "': " + ec.message());
      ssum::save_checkpoint((dir / "model.ssuw").string(), {ssum::format_config(model->cfg), model->params});
      ssum::write_file((dir / "loss.csv").string(), result.log.loss_csv());
      ssum::write_file((dir / "summary.txt").string(), result.log.summary());
    }
    if (out) *out = model.release();
  });
}

ssum_status ssum_ablation(const ssum_config* cfg, const char* axis, char** csv) {
  return guarded([&] {
    need(cfg, "config");
    need(axis, "axis");
    need(csv, "csv");
    const auto data = ssum::make_dataset(cfg->cfg);
    *csv = dup_string(ssum::ablation_run(ssum::parse_ablation_axis(axis), cfg->cfg, data).csv());
  });
}

ssum_status ssum_model_init(const ssum_config* cfg, ssum_model** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    cfg->cfg.validate_config();
    ssum::Rng rng = ssum::Rng(cfg->cfg.seed).fork(1);
    *out = new ssum_model{cfg->cfg, ssum::init_model<float>(cfg->cfg.model, rng)};
  });
}

ssum_status ssum_model_load(const char* path, ssum_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto ck = ssum::load_checkpoint(path);
    ssum::TrainConfig cfg;
    try {
      cfg = ssum::parse_config(ck.config);
      cfg.model.validate();
    } catch (const ssum::UsageError& e) {
      throw ssum::DataError(std::string(path) + ": bad embedded config: " + e.what());
    }
    const auto layout = ssum::model_layout(cfg.model);
    const auto& entries = ck.params.entries();
    bool match = layout.size() == entries.size();
    for (std::size_t i = 0; match && i < layout.size(); ++i)
      match = layout[i].first == entries[i].name && layout[i].second == entries[i].value.shape();
    if (!match) throw ssum::DataError(std::string(path) + ": tensors do not match the embedded model config");
    *out = new ssum_model{std::move(cfg), std::move(ck.params)};
  });
}

ssum_status ssum_model_save(const ssum_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    ssum::save_checkpoint(path, {ssum::format_config(model->cfg), model->params});
  });
}

size_t ssum_model_parameter_count(const ssum_model* model) { return model->params.parameter_count(); }

ssum_status ssum_denoise(const ssum_model* model, const ssum_cube* noisy, uint32_t threads, ssum_cube** out) {
  return guarded([&] {
    need(model, "model");
    need(noisy, "cube");
    need(out, "out");
    auto c = std::make_unique<ssum_cube>();
    c->values = ssum::denoise_cube(model->params, model->cfg.model, noisy->values, band_group(model->cfg),
                                   std::max<uint32_t>(threads, 1));
    c->dtype = noisy->dtype;
    *out = c.release();
  });
}

void ssum_model_free(ssum_model* model) { delete model; }

}  // extern "C"
