// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <thread>

#include "ssum/io.hpp"
#include "ssum/optim.hpp"

namespace ssum {
namespace {

constexpr std::size_t kHashedBatches = 10;

enum Stream : std::uint64_t { kInit = 1, kPatches = 2, kSynth = 3, kValidation = 4 };

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = std::ptrdiff_t(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  return std::size_t(i < std::ptrdiff_t(n) ? i : period - i);
}

Tensor64 crop_patch(const Tensor64& cube, std::size_t b0, std::size_t r0, std::size_t c0,
                    std::size_t nb, std::size_t nr, std::size_t nc, bool flip_rows, bool flip_cols) {
  Tensor64 out(Shape{nb, nr, nc});
  const std::size_t rows = cube.dim(1), cols = cube.dim(2);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < nr; ++r) {
      const std::size_t sr = r0 + (flip_rows ? nr - 1 - r : r);
      for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t sc = c0 + (flip_cols ? nc - 1 - c : c);
        out[(b * nr + r) * nc + c] = cube[((b0 + b) * rows + sr) * cols + sc];
      }
    }
  return out;
}

template <typename T>
Tensor64 denoise_impl(const ParameterSet<T>& weights, const ModelConfig& model, const Tensor64& noisy,
                      std::size_t band_group, std::size_t threads) {
  if (noisy.rank() != 3 || noisy.size() == 0) throw DataError("denoise: cube must be non-empty (bands, rows, cols)");
  const std::size_t nb = noisy.dim(0), rows = noisy.dim(1), cols = noisy.dim(2);
  const std::size_t f = model.spatial_factor();
  const std::size_t pr = (rows + f - 1) / f * f, pc = (cols + f - 1) / f * f;
  BasicTensor<T> padded(Shape{nb, pr, pc});
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t r = 0; r < pr; ++r)
      for (std::size_t c = 0; c < pc; ++c)
        padded[(b * pr + r) * pc + c] =
            static_cast<T>(noisy[(b * rows + reflect(std::ptrdiff_t(r), rows)) * cols +
                                 reflect(std::ptrdiff_t(c), cols)]);

  const std::size_t group = band_group == 0 || band_group >= nb ? nb : band_group;
  std::vector<std::size_t> starts;
  for (std::size_t s = 0;; s += std::max<std::size_t>(1, group / 2)) {
    if (s + group >= nb) {
      starts.push_back(nb - group);
      break;
    }
    starts.push_back(s);
  }
  std::vector<BasicTensor<T>> outputs(starts.size());
  auto run = [&](std::size_t i) {
    const std::size_t plane = pr * pc;
    BasicTensor<T> slice(Shape{group, pr, pc});
    std::copy_n(padded.data().begin() + std::ptrdiff_t(starts[i] * plane), group * plane, slice.data().begin());
    outputs[i] = run_model(weights, model, slice);
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, starts.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < starts.size(); i += workers) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  Tensor64 sum(Shape{nb, rows, cols});
  std::vector<double> count(nb, 0.0);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    for (std::size_t b = 0; b < group; ++b) {
      const std::size_t ob = starts[i] + b;
      count[ob] += 1.0;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
          sum[(ob * rows + r) * cols + c] += double(outputs[i][(b * pr + r) * pc + c]);
    }
  }
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t i = 0; i < rows * cols; ++i) sum[b * rows * cols + i] /= count[b];
  return sum;
}

template <typename T>
TrainResult train_impl(const TrainConfig& cfg, const Dataset& data) {
  const auto t0 = std::chrono::steady_clock::now();
  const Rng root(cfg.seed);
  Rng init_rng = root.fork(kInit);
  ParameterSet<T> params = init_model<T>(cfg.model, init_rng);
  Rng patch_rng = root.fork(kPatches);
  const MilestoneSchedule schedule{cfg.lr, cfg.milestones, cfg.lr_factor};
  AdamState<T> adam = AdamState<T>::for_params(params, cfg.lr);
  RunLog log;
  log.parameter_count = params.parameter_count();
  const MetricsReport noisy_metrics = evaluate_metrics(data.val_clean, data.val_noisy);
  const T inv_batch = T(1) / T(cfg.batch_size);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.lr = schedule.lr_at(epoch);
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s, ++step) {
      std::vector<BasicTensor<T>> grads;
      double loss = 0.0;
      std::uint64_t hash = 0xcbf29ce484222325ULL;
      for (std::size_t item = 0; item < cfg.batch_size; ++item) {
        const Tensor64& cube = data.train[patch_rng.below(data.train.size())];
        const std::size_t b0 = patch_rng.below(cube.dim(0) - cfg.patch_bands + 1);
        const std::size_t r0 = patch_rng.below(cube.dim(1) - cfg.patch_rows + 1);
        const std::size_t c0 = patch_rng.below(cube.dim(2) - cfg.patch_cols + 1);
        const bool flip_rows = patch_rng.coin(), flip_cols = patch_rng.coin();
        NoiseSpec noise = cfg.noise;
        noise.seed = patch_rng.next_u64();
        const Tensor64 clean =
            crop_patch(cube, b0, r0, c0, cfg.patch_bands, cfg.patch_rows, cfg.patch_cols, flip_rows, flip_cols);
        const Tensor64 noisy = degrade(clean, noise);
        if (step < kHashedBatches) hash = hash_tensor(noisy.cast<float>(), hash_tensor(clean.cast<float>(), hash));

        Graph<T> g;
        ParamBinder<T> binder(g, params);
        const Shape s4{1, clean.dim(0), clean.dim(1), clean.dim(2)};
        Var out, err;
        try {
          out = model_forward(binder, cfg.model, g.leaf(noisy.cast<T>().reshaped(s4)));
          err = ad::squared_error(g, out, g.leaf(clean.cast<T>().reshaped(s4)));
          g.backward(err, BasicTensor<T>(Shape{}, inv_batch));
        } catch (const NumericError& e) {
          throw DivergenceError(step, "training diverged at step " + std::to_string(step) + ": " + e.what());
        }
        loss += double(g.value(err)[0]);
        auto item_grads = binder.gradients();
        if (grads.empty()) {
          grads = std::move(item_grads);
        } else {
          for (std::size_t k = 0; k < grads.size(); ++k)
            for (std::size_t i = 0; i < grads[k].size(); ++i) grads[k][i] += item_grads[k][i];
        }
      }
      loss /= double(cfg.batch_size);
      if (!std::isfinite(loss))
        throw DivergenceError(step, "training diverged at step " + std::to_string(step) + ": non-finite loss");
      if (step < kHashedBatches) log.batch_hashes.push_back(hash);
      log.step_loss.push_back(loss);
      epoch_loss += loss;
      clip_global_norm(grads, cfg.clip_norm);
      try {
        adam_step(params, grads, adam);
      } catch (const NumericError& e) {
        throw DivergenceError(step, "training diverged at step " + std::to_string(step) + ": " + e.what());
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.lr;
    rec.mean_loss = cfg.steps_per_epoch ? epoch_loss / double(cfg.steps_per_epoch) : 0.0;
    rec.noisy = noisy_metrics;
    if (cfg.validate) rec.denoised = evaluate_metrics(data.val_clean, denoise_impl(params, cfg.model, data.val_noisy, 0, 1));
    log.epochs.push_back(rec);
  }
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {params.template cast<float>(), std::move(log)};
}

}  // namespace

void TrainConfig::validate_config() const {
  model.validate();
  noise.validate();
  const std::size_t f = model.spatial_factor();
  if (patch_bands == 0 || patch_rows == 0 || patch_cols == 0) throw UsageError("train: empty patch size");
  if (patch_rows % f || patch_cols % f)
    throw UsageError("train: patch rows and cols must be divisible by " + std::to_string(f));
  if (batch_size == 0) throw UsageError("train: batch_size must be positive");
  if (!(lr > 0.0) || !(lr_factor > 0.0)) throw UsageError("train: lr and lr_factor must be positive");
  if (!(clip_norm > 0.0)) throw UsageError("train: clip_norm must be positive");
  if (data.files.empty()) {
    if (data.cubes == 0) throw UsageError("data: cubes must be positive");
    if (data.bands < patch_bands || data.rows < patch_rows || data.cols < patch_cols)
      throw UsageError("data: synthetic cubes are smaller than the patch size");
    if (data.val_rows == 0 || data.val_cols == 0) throw UsageError("data: empty validation cube");
  }
}

std::string RunLog::loss_csv() const {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < step_loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i, step_loss[i]);
    out += buf;
  }
  return out;
}

std::string RunLog::summary() const {
  std::ostringstream out;
  char buf[160];
  out << "parameters " << parameter_count << "\n";
  out << "steps " << step_loss.size() << "\n";
  std::snprintf(buf, sizeof buf, "wall_seconds %.3f\n", wall_seconds);
  out << buf;
  out << "epoch,lr,mean_loss,noisy_psnr,psnr,ssim,sam\n";
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.6g,%.6g,%.4f,%.4f,%.4f,%.4f\n", e.epoch, e.lr, e.mean_loss,
                  e.noisy.psnr, e.denoised.psnr, e.denoised.ssim, e.denoised.sam);
    out << buf;
  }
  return out.str();
}

Dataset make_dataset(const TrainConfig& cfg) {
  cfg.validate_config();
  Dataset d;
  const Rng root(cfg.seed);
  Rng synth = root.fork(kSynth);
  if (cfg.data.files.empty()) {
    for (std::size_t i = 0; i < cfg.data.cubes; ++i)
      d.train.push_back(synth_clean_cube(cfg.data.bands, cfg.data.rows, cfg.data.cols, cfg.data.rank, synth.next_u64()));
    d.val_clean = synth_clean_cube(cfg.data.bands, cfg.data.val_rows, cfg.data.val_cols, cfg.data.rank, synth.next_u64());
  } else {
    for (const auto& f : cfg.data.files) {
      Tensor64 cube = load_hsic(f).values;
      if (cube.dim(0) < cfg.patch_bands || cube.dim(1) < cfg.patch_rows || cube.dim(2) < cfg.patch_cols)
        throw DataError(f + ": cube " + shape_str(cube.shape()) + " is smaller than the patch size");
      d.train.push_back(std::move(cube));
    }
    // The last file doubles as the held-out cube when only files are given.
    d.val_clean = d.train.back();
  }
  NoiseSpec vn = cfg.noise;
  vn.seed = root.fork(kValidation).next_u64();
  d.val_noisy = degrade(d.val_clean, vn);
  return d;
}

TrainResult train(const TrainConfig& cfg, const Dataset& data) {
  cfg.validate_config();
  if (data.train.empty()) throw UsageError("train: no training cubes");
  for (const auto& c : data.train)
    if (c.rank() != 3 || c.dim(0) < cfg.patch_bands || c.dim(1) < cfg.patch_rows || c.dim(2) < cfg.patch_cols)
      throw DataError("train: cube " + shape_str(c.shape()) + " is smaller than the patch size");
  return cfg.precision == Precision::f64 ? train_impl<double>(cfg, data) : train_impl<float>(cfg, data);
}

Tensor64 denoise_cube(const ParameterSet<float>& weights, const ModelConfig& model, const Tensor64& noisy,
                      std::size_t band_group, std::size_t threads) {
  return denoise_impl(weights, model, noisy, band_group, threads);
}

Evaluation evaluate(const ParameterSet<float>& weights, const ModelConfig& model,
                    const std::vector<std::pair<Tensor64, Tensor64>>& clean_noisy, std::size_t band_group) {
  if (clean_noisy.empty()) throw UsageError("evaluate: no cubes");
  Evaluation ev;
  for (const auto& [clean, noisy] : clean_noisy) {
    if (clean.shape() != noisy.shape())
      throw DataError("evaluate: shape mismatch " + shape_str(clean.shape()) + " vs " + shape_str(noisy.shape()));
    ev.per_cube.push_back(evaluate_metrics(clean, denoise_cube(weights, model, noisy, band_group)));
  }
  for (const auto& m : ev.per_cube) {
    ev.mean.psnr += m.psnr;
    ev.mean.ssim += m.ssim;
    ev.mean.sam += m.sam;
  }
  const double n = double(ev.per_cube.size());
  ev.mean.psnr /= n;
  ev.mean.ssim /= n;
  ev.mean.sam /= n;
  return ev;
}

AblationAxis parse_ablation_axis(const std::string& s) {
  if (s == "scan-scheme") return AblationAxis::scan_scheme;
  if (s == "bidirectional") return AblationAxis::bidirectional;
  if (s == "residual") return AblationAxis::residual;
  if (s == "width") return AblationAxis::width;
  throw UsageError("unknown ablation axis '" + s + "'");
}

std::string ablation_axis_name(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::scan_scheme: return "scan-scheme";
    case AblationAxis::bidirectional: return "bidirectional";
    case AblationAxis::residual: return "residual";
    case AblationAxis::width: return "width";
  }
  return "?";
}

AblationResult ablation_run(AblationAxis axis, const TrainConfig& cfg, const Dataset& data) {
  AblationResult res;
  res.axis = axis;
  std::vector<std::pair<std::string, TrainConfig>> variants;
  auto with = [&](auto edit) {
    TrainConfig c = cfg;
    edit(c);
    return c;
  };
  switch (axis) {
    case AblationAxis::scan_scheme:
      variants = {{"sscs", with([](TrainConfig& c) { c.model.continuous_scan = true; })},
                  {"sweep", with([](TrainConfig& c) { c.model.continuous_scan = false; })}};
      break;
    case AblationAxis::bidirectional:
      variants = {{"bidirectional", with([](TrainConfig& c) { c.model.bidirectional = true; })},
                  {"forward-only", with([](TrainConfig& c) { c.model.bidirectional = false; })}};
      break;
    case AblationAxis::residual:
      variants = {{"residual", with([&](TrainConfig& c) { c.model.residual_blocks = std::max<std::size_t>(1, cfg.model.residual_blocks); })},
                  {"no-residual", with([](TrainConfig& c) { c.model.residual_blocks = 0; })}};
      break;
    case AblationAxis::width:
      for (std::size_t w : {8, 12, 20, 24, 32})
        variants.push_back({"c" + std::to_string(w), with([w](TrainConfig& c) { c.model.base_channels = w; })});
      break;
  }
  for (auto& [label, c] : variants) {
    TrainResult r = train(c, data);
    AblationEntry e{label, c, std::move(r.log), {}};
    e.final_metrics = evaluate_metrics(data.val_clean, denoise_cube(r.weights, c.model, data.val_noisy));
    res.runs.push_back(std::move(e));
  }
  return res;
}

std::string AblationResult::csv() const {
  std::string out = "axis,label,parameters,steps,final_loss,psnr,ssim,sam\n";
  char buf[256];
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.6g,%.4f,%.4f,%.4f\n", ablation_axis_name(axis).c_str(),
                  r.label.c_str(), r.log.parameter_count, r.log.step_loss.size(),
                  r.log.step_loss.empty() ? 0.0 : r.log.step_loss.back(), r.final_metrics.psnr,
                  r.final_metrics.ssim, r.final_metrics.sam);
    out += buf;
  }
  return out;
}

std::uint64_t hash_tensor(const Tensor& t, std::uint64_t h) {
  for (float v : t.data()) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace ssum
