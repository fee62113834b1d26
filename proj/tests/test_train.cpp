// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "ssum/config.hpp"
#include "ssum/error.hpp"
#include "ssum/metrics.hpp"
#include "ssum/noise.hpp"
#include "ssum/optim.hpp"
#include "ssum/train.hpp"

using namespace ssum;

namespace {

TrainConfig tiny(std::size_t epochs, std::size_t steps, std::size_t batch) {
  TrainConfig c;
  c.model.base_channels = 4;
  c.model.state_dim = 4;
  c.patch_bands = 8;
  c.patch_rows = 16;
  c.patch_cols = 16;
  c.data.cubes = 4;
  c.data.bands = 8;
  c.data.rows = 32;
  c.data.cols = 32;
  c.data.val_rows = 16;
  c.data.val_cols = 16;
  c.noise = NoiseSpec::gaussian_only(25.0);
  c.epochs = epochs;
  c.steps_per_epoch = steps;
  c.batch_size = batch;
  c.milestones = {};
  c.lr = 2e-3;
  c.seed = 17;
  return c;
}

Tensor64 via_float(const Tensor64& t) { return t.cast<float>().cast<double>(); }

}  // namespace

TEST_CASE("zero epochs return the initial weights") {
  const auto cfg = tiny(0, 10, 2);
  const auto data = make_dataset(cfg);
  const auto r = train(cfg, data);
  Rng init = Rng(cfg.seed).fork(1);
  CHECK(r.weights == init_model<float>(cfg.model, init));
  CHECK(r.log.step_loss.empty());
  CHECK(r.log.parameter_count == parameter_count(cfg.model));
}

TEST_CASE("training is reproducible and reduces the loss") {
  const auto cfg = tiny(2, 50, 2);
  const auto data = make_dataset(cfg);
  const auto a = train(cfg, data);
  const auto b = train(cfg, data);
  CHECK(a.weights == b.weights);
  CHECK(a.log.step_loss == b.log.step_loss);
  CHECK(a.log.batch_hashes == b.log.batch_hashes);
  REQUIRE(a.log.step_loss.size() == 100);
  REQUIRE(a.log.epochs.size() == 2);
  for (double l : a.log.step_loss) CHECK(std::isfinite(l));

  const auto& s = a.log.step_loss;
  const double first = std::accumulate(s.begin(), s.begin() + 20, 0.0) / 20;
  const double last = std::accumulate(s.end() - 20, s.end(), 0.0) / 20;
  CHECK(last < first);
  for (const auto& e : a.log.epochs) CHECK(std::isfinite(e.denoised.psnr));

  auto other = cfg;
  other.seed = 18;
  CHECK(!(train(other, make_dataset(other)).weights == a.weights));

  auto f64 = tiny(1, 3, 1);
  f64.precision = Precision::f64;
  const auto r64 = train(f64, make_dataset(f64));
  CHECK(r64.log.step_loss.size() == 3);
}

TEST_CASE("denoise keeps the cube shape and the untrained model is the identity") {
  const auto cfg = tiny(0, 1, 1);
  const auto w = train(cfg, make_dataset(cfg)).weights;
  const auto x = via_float(synth_clean_cube(11, 13, 21, 3, 4));
  for (std::size_t group : {0, 8, 11}) {
    const auto y = denoise_cube(w, cfg.model, x, group, 2);
    CHECK(y == x);
  }
  CHECK(denoise_cube(w, cfg.model, x, 8, 1) == denoise_cube(w, cfg.model, x, 8, 3));
  CHECK_THROWS_AS(denoise_cube(w, cfg.model, Tensor64(Shape{4, 4})), DataError);
}

TEST_CASE("evaluate") {
  const auto cfg = tiny(0, 1, 1);
  const auto w = train(cfg, make_dataset(cfg)).weights;
  std::vector<std::pair<Tensor64, Tensor64>> pairs;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto clean = synth_clean_cube(6, 16, 16, 3, s);
    NoiseSpec n = cfg.noise;
    n.seed = s;
    pairs.emplace_back(clean, via_float(degrade(clean, n)));
  }
  const auto ev = evaluate(w, cfg.model, pairs);
  REQUIRE(ev.per_cube.size() == 3);
  double mean = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ev.per_cube[i].psnr == psnr(pairs[i].first, pairs[i].second));
    mean += ev.per_cube[i].psnr / 3;
  }
  CHECK(std::abs(ev.mean.psnr - mean) < 1e-12);

  const auto x = pairs[0].first;
  const auto same = evaluate(w, cfg.model, {{x, x}});
  CHECK(std::isfinite(same.mean.psnr));
  CHECK(same.mean.psnr <= kPsnrCap);
}

TEST_CASE("ablation runs are matched") {
  auto cfg = tiny(1, 3, 2);
  cfg.validate = false;
  const auto data = make_dataset(cfg);
  for (auto axis : {AblationAxis::scan_scheme, AblationAxis::bidirectional, AblationAxis::residual}) {
    const auto r = ablation_run(axis, cfg, data);
    REQUIRE(r.runs.size() == 2);
    CHECK(r.runs[0].log.batch_hashes == r.runs[1].log.batch_hashes);
    CHECK(r.runs[0].log.batch_hashes.size() == 3);
    CHECK(r.csv().find(ablation_axis_name(axis)) != std::string::npos);
  }
  const auto scan = ablation_run(AblationAxis::scan_scheme, cfg, data);
  CHECK(scan.runs[0].cfg.model.continuous_scan);
  CHECK(!scan.runs[1].cfg.model.continuous_scan);
  CHECK(scan.runs[0].log.parameter_count == scan.runs[1].log.parameter_count);

  auto wcfg = tiny(1, 1, 1);
  wcfg.validate = false;
  const auto width = ablation_run(AblationAxis::width, wcfg, make_dataset(wcfg));
  REQUIRE(width.runs.size() == 5);
  const std::size_t channels[] = {8, 12, 20, 24, 32};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(width.runs[i].cfg.model.base_channels == channels[i]);
    CHECK(width.runs[i].log.parameter_count == parameter_count(width.runs[i].cfg.model));
    CHECK(width.runs[i].log.batch_hashes == width.runs[0].log.batch_hashes);
  }
  CHECK(parse_ablation_axis("scan-scheme") == AblationAxis::scan_scheme);
  CHECK_THROWS_AS(parse_ablation_axis("depth"), UsageError);
}

TEST_CASE("configuration checks") {
  auto cfg = tiny(1, 1, 1);
  cfg.patch_rows = 12;
  CHECK_THROWS_AS(cfg.validate_config(), UsageError);
  cfg = tiny(1, 1, 1);
  cfg.data.rows = 8;
  CHECK_THROWS_AS(make_dataset(cfg), UsageError);
  cfg = tiny(1, 1, 1);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(cfg, Dataset{}), UsageError);
  CHECK(TrainConfig{}.total_steps() == 45 * 100);
  const MilestoneSchedule s{TrainConfig{}.lr, TrainConfig{}.milestones, TrainConfig{}.lr_factor};
  CHECK(s.lr_at(36) == 7.5e-5);
}
