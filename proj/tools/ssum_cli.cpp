// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "ssum/ssum.h"

namespace {

constexpr int kExitUsage = 2;

struct Failure {
  int code;
};

void check(ssum_status s, const std::string& context) {
  if (s == SSUM_OK) return;
  std::cerr << "error: " << context << ": " << ssum_last_error() << "\n";
  throw Failure{s == SSUM_ERR_INTERNAL ? 1 : int(s)};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Cube = Handle<ssum_cube, ssum_cube_free>;
using Config = Handle<ssum_config, ssum_config_free>;
using Model = Handle<ssum_model, ssum_model_free>;
using Scan = Handle<ssum_scan, ssum_scan_free>;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { ssum_string_free(p); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw Failure{3};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral image denoising with spatial-spectral state space models"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run", axis, ablate_out;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config_path, "Config file")->required();
  auto* train_seed = train->add_option("--seed", seed, "Override train.seed");
  train->add_option("--out", out_dir, "Output directory")->capture_default_str();

  std::string weights, in_path, out_path, png_path, bands_arg;
  unsigned threads = 1;
  auto* denoise = app.add_subcommand("denoise", "Denoise a cube");
  denoise->add_option("--weights", weights, "Checkpoint")->required();
  denoise->add_option("--in", in_path, "Noisy HSIC cube")->required();
  denoise->add_option("--out", out_path, "Output HSIC cube")->required();
  auto* png_opt = denoise->add_option("--png", png_path, "False-color PNG of the result");
  denoise->add_option("--bands", bands_arg, "Bands for R,G,B")->needs(png_opt);
  denoise->add_option("--threads", threads, "Worker threads; 1 is the reproducible path")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string clean_path, test_path;
  auto* eval = app.add_subcommand("eval", "Score a cube against a reference");
  eval->add_option("--clean", clean_path, "Reference HSIC cube")->required();
  eval->add_option("--test", test_path, "Cube to score")->required();

  auto* noise = app.add_subcommand("noise", "Degrade a cube with the config's noise section");
  noise->add_option("--config", config_path, "Config file")->required();
  noise->add_option("--seed", seed, "Noise seed")->required();
  noise->add_option("--in", in_path, "Clean HSIC cube")->required();
  noise->add_option("--out", out_path, "Output HSIC cube")->required();

  std::string scheme, dims_arg, csv_path;
  auto* scan = app.add_subcommand("scan", "Dump a scan permutation");
  scan->add_option("--scheme", scheme, "RCB, RBC, CRB, CBR, BRC, BCR or SWEEP")->required();
  scan->add_option("--dims", dims_arg, "B,H,W")->required();
  scan->add_option("--csv", csv_path, "Write the CSV here instead of stdout");

  auto* ablate = app.add_subcommand("ablate", "Train matched variants along one axis");
  ablate->add_option("--config", config_path, "Config file")->required();
  ablate->add_option("--axis", axis, "scan-scheme, bidirectional, residual or width")->required();
  ablate->add_option("--out", ablate_out, "Write the comparison CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      Config cfg;
      check(ssum_config_load(config_path.c_str(), cfg.out()), "config");
      if (*train_seed) check(ssum_config_set(cfg.get(), "train.seed", std::to_string(seed).c_str()), "seed");
      Model model;
      check(ssum_train(cfg.get(), out_dir.c_str(), model.out()), "train");
      std::cout << "parameters " << ssum_model_parameter_count(model.get()) << "\n";
      std::cout << "checkpoint " << out_dir << "/model.ssuw\n";
    } else if (*denoise) {
      std::vector<uint32_t> bands;
      if (!png_path.empty()) {
        if (bands_arg.empty()) bands_arg = "0,0,0";
        try {
          for (const auto& b : CLI::detail::split(bands_arg, ',')) bands.push_back(uint32_t(std::stoul(b)));
        } catch (const std::exception&) {
          bands.clear();
        }
        if (bands.size() != 3) {
          std::cerr << "error: --bands expects three comma-separated band indices\n";
          return kExitUsage;
        }
      }
      Model model;
      check(ssum_model_load(weights.c_str(), model.out()), "weights");
      Cube noisy, clean;
      check(ssum_cube_load(in_path.c_str(), noisy.out()), "input");
      check(ssum_denoise(model.get(), noisy.get(), threads, clean.out()), "denoise");
      check(ssum_cube_save(clean.get(), out_path.c_str(), ssum_cube_dtype(noisy.get())), "output");
      if (!png_path.empty()) check(ssum_cube_export_png(clean.get(), bands.data(), png_path.c_str()), "png");
    } else if (*eval) {
      Cube clean, test;
      check(ssum_cube_load(clean_path.c_str(), clean.out()), "clean");
      check(ssum_cube_load(test_path.c_str(), test.out()), "test");
      ssum_metrics m{};
      check(ssum_evaluate(clean.get(), test.get(), &m), "eval");
      std::printf("psnr %.2f\nssim %.4f\nsam %.4f\n", m.psnr, m.ssim, m.sam);
    } else if (*noise) {
      Config cfg;
      check(ssum_config_load(config_path.c_str(), cfg.out()), "config");
      Cube clean, noisy;
      check(ssum_cube_load(in_path.c_str(), clean.out()), "input");
      OwnedString report;
      check(ssum_degrade(clean.get(), cfg.get(), seed, noisy.out(), &report.p), "noise");
      check(ssum_cube_save(noisy.get(), out_path.c_str(), ssum_cube_dtype(clean.get())), "output");
      std::cerr << report.p;
    } else if (*scan) {
      std::vector<uint32_t> dims;
      try {
        for (const auto& d : CLI::detail::split(dims_arg, ',')) dims.push_back(uint32_t(std::stoul(d)));
      } catch (const std::exception&) {
        dims.clear();
      }
      if (dims.size() != 3) {
        std::cerr << "error: --dims expects B,H,W\n";
        return kExitUsage;
      }
      Scan s;
      check(ssum_scan_create(scheme.c_str(), dims[0], dims[1], dims[2], s.out()), "scan");
      std::string csv = "position,band,row,col\n";
      uint32_t c[3];
      for (size_t k = 0; k < ssum_scan_length(s.get()); ++k) {
        check(ssum_scan_coord(s.get(), k, c), "scan");
        csv += std::to_string(k) + ',' + std::to_string(c[0]) + ',' + std::to_string(c[1]) + ',' +
               std::to_string(c[2]) + '\n';
      }
      if (csv_path.empty())
        std::cout << csv;
      else
        write_text(csv_path, csv);
      size_t pairs = 0, breaks = 0;
      ssum_scan_continuity(s.get(), &pairs, &breaks);
      std::cerr << "adjacent pairs " << pairs << "\ncontinuity violations " << breaks << "\n";
    } else if (*ablate) {
      Config cfg;
      check(ssum_config_load(config_path.c_str(), cfg.out()), "config");
      OwnedString csv;
      check(ssum_ablation(cfg.get(), axis.c_str(), &csv.p), "ablate");
      if (ablate_out.empty())
        std::cout << csv.p;
      else
        write_text(ablate_out, csv.p);
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
