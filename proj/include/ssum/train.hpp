// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SSUM_TRAIN_HPP
#define SSUM_TRAIN_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ssum/error.hpp"
#include "ssum/metrics.hpp"
#include "ssum/model.hpp"
#include "ssum/noise.hpp"

namespace ssum {

enum class Precision { f32, f64 };

/// Clean training data: user files, or synthetic low-rank cubes.
struct DataConfig {
  std::vector<std::string> files;  // HSIC paths; empty selects the generator
  std::size_t cubes = 4;
  std::size_t bands = 31;
  std::size_t rows = 128;
  std::size_t cols = 128;
  std::size_t rank = 3;
  std::size_t val_rows = 64;  // held-out synthetic cube, `bands` deep
  std::size_t val_cols = 64;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct TrainConfig {
  ModelConfig model;
  NoiseSpec noise;
  DataConfig data;
  double lr = 3e-4;
  std::vector<std::size_t> milestones{20, 35};
  double lr_factor = 0.5;
  std::size_t epochs = 45;
  std::size_t steps_per_epoch = 100;  // optimizer steps; one epoch = steps * batch patches
  std::size_t batch_size = 14;
  std::size_t patch_bands = 31;
  std::size_t patch_rows = 64;
  std::size_t patch_cols = 64;
  double clip_norm = 5.0;
  bool validate = true;  // score the held-out cube after every epoch
  std::uint64_t seed = 0;
  Precision precision = Precision::f32;

  std::size_t total_steps() const { return epochs * steps_per_epoch; }
  void validate_config() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  MetricsReport noisy;     // held-out noisy input vs clean
  MetricsReport denoised;  // model output vs clean
};

struct RunLog {
  std::vector<double> step_loss;
  std::vector<EpochRecord> epochs;
  std::vector<std::uint64_t> batch_hashes;  // first 10 batches, clean and noisy
  double wall_seconds = 0.0;
  std::size_t parameter_count = 0;

  std::string loss_csv() const;
  std::string summary() const;
};

/// Thrown when a step produces a non-finite loss.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::size_t step, const std::string& what) : NumericError(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct Dataset {
  std::vector<Tensor64> train;  // clean (bands, rows, cols) cubes
  Tensor64 val_clean;
  Tensor64 val_noisy;
};

/// Builds the clean cubes and a held-out pair degraded with a fixed seed.
Dataset make_dataset(const TrainConfig& cfg);

struct TrainResult {
  ParameterSet<float> weights;
  RunLog log;
};

TrainResult train(const TrainConfig& cfg, const Dataset& data);

/// Reflect-pads rows and columns to the model's spatial factor, runs the
/// model on sliding groups of `band_group` bands (0: all bands) with
/// overlaps averaged, and crops back.
Tensor64 denoise_cube(const ParameterSet<float>& weights, const ModelConfig& model,
                      const Tensor64& noisy, std::size_t band_group = 0, std::size_t threads = 1);

struct Evaluation {
  std::vector<MetricsReport> per_cube;
  MetricsReport mean;
};

Evaluation evaluate(const ParameterSet<float>& weights, const ModelConfig& model,
                    const std::vector<std::pair<Tensor64, Tensor64>>& clean_noisy,
                    std::size_t band_group = 0);

enum class AblationAxis { scan_scheme, bidirectional, residual, width };

AblationAxis parse_ablation_axis(const std::string& s);
std::string ablation_axis_name(AblationAxis axis);

struct AblationEntry {
  std::string label;
  TrainConfig cfg;
  RunLog log;
  MetricsReport final_metrics;  // held-out cube after the last epoch
};

struct AblationResult {
  AblationAxis axis;
  std::vector<AblationEntry> runs;
  std::string csv() const;
};

/// Trains matched configs that differ only on `axis`, sharing seeds and data.
AblationResult ablation_run(AblationAxis axis, const TrainConfig& cfg, const Dataset& data);

/// Exact 64-bit FNV-1a over the bytes of a tensor, chained with `h`.
std::uint64_t hash_tensor(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace ssum

#endif  // SSUM_TRAIN_HPP
