// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "grad_suite.hpp"
#include "oracles.hpp"
#include "ssum/config.hpp"
#include "ssum/io.hpp"
#include "ssum/kernels.hpp"
#include "ssum/metrics.hpp"
#include "ssum/model.hpp"
#include "ssum/noise.hpp"
#include "ssum/scan.hpp"
#include "ssum/ssm.hpp"
#include "ssum/train.hpp"
#include "test_util.hpp"

using namespace ssum;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1
Outcome scans() {
  const auto t0 = Clock::now();
  std::size_t checked = 0;
  bool ok = true;
  for (std::size_t i = 0; i < 6 && ok; ++i)
    for (std::size_t b = 1; b <= 7; ++b)
      for (std::size_t h = 1; h <= 7; ++h)
        for (std::size_t w = 1; w <= 7; ++w) {
          const GridDims d{b, h, w};
          const auto p = build_permutation(kContinuousSchemes[i], d);
          const auto want = test::zigzag_oracle(test::kTags[i], d);
          std::vector<bool> seen(d.volume(), false);
          ok = ok && p.length() == d.volume();
          for (std::size_t k = 0; ok && k < p.length(); ++k) {
            const std::size_t f = p.forward()[k];
            ok = f < d.volume() && !seen[f] && p.inverse()[f] == k && p.coord(k) == want[k];
            if (ok) seen[f] = true;
            if (k) ok = ok && test::manhattan(p.coord(k - 1), p.coord(k)) == 1;
          }
          ok = ok && continuity_report(p).count() == 0;
          ++checked;
        }
  std::size_t sweeps = 0;
  for (std::size_t b = 1; b <= 7; ++b)
    for (std::size_t h = 1; h <= 7; ++h)
      for (std::size_t w = 2; w <= 7; ++w) {
        const auto p = build_permutation(ScanScheme::Sweep, {b, h, w});
        std::size_t jumps = 0;
        for (std::size_t k = 1; k < p.length(); ++k) jumps += test::manhattan(p.coord(k - 1), p.coord(k)) > 1;
        ok = ok && jumps == b * (h - 1) + (b - 1) && continuity_report(p).count() == jumps;
        ++sweeps;
      }
  const double secs = seconds_since(t0);
  return {ok && secs < 10.0, std::to_string(checked) + " continuous grids, " + std::to_string(sweeps) +
                                 " sweep grids" + fmt(", %.2f s", secs)};
}

// 2
Outcome ssm_forms() {
  const auto t0 = Clock::now();
  Rng rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(16);
    const std::size_t len = 1 + rng.below(64);
    LtiSsm<double> m;
    for (std::size_t i = 0; i < n; ++i) {
      m.a.push_back(rng.uniform(-2.0, -0.05));
      m.b.push_back(rng.uniform(-1.0, 1.0));
      m.c.push_back(rng.uniform(-1.0, 1.0));
    }
    m.step = rng.uniform(0.05, 1.0);
    const auto d = discretize(m);
    std::vector<double> x(len);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const auto yr = ssm_recurrent(d, x);
    const auto yc = ssm_convolutional(d, x);
    for (std::size_t t = 0; t < len; ++t) worst = std::max(worst, std::abs(yr[t] - yc[t]));
  }

  bool bitwise = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng r(seed);
    const std::size_t width = 3, state = 4, len = 32;
    auto w = SelectiveSsmWeights<double>::init(width, state, r);
    w.b_proj.fill(0.0);
    w.c_proj.fill(0.0);
    w.dt_proj.fill(0.0);
    for (auto& v : w.b_bias.data()) v = r.uniform(-1.0, 1.0);
    for (auto& v : w.c_bias.data()) v = r.uniform(-1.0, 1.0);
    const auto s = test::random_tensor({len, width}, r);
    const auto y = selective_scan(w, s);
    for (std::size_t ch = 0; ch < width; ++ch) {
      const double step = softplus(w.dt_bias[ch]);
      DiscreteSsm<double> d;
      for (std::size_t k = 0; k < state; ++k) {
        d.a_bar.push_back(std::exp(step * -std::exp(w.a_log[ch * state + k])));
        d.b_bar.push_back(step * w.b_bias[k]);
        d.c_bar.push_back(w.c_bias[k]);
      }
      std::vector<double> x(len);
      for (std::size_t t = 0; t < len; ++t) x[t] = s[t * width + ch];
      const auto yr = ssm_recurrent(d, x);
      for (std::size_t t = 0; t < len; ++t) bitwise = bitwise && y[t * width + ch] == yr[t];
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && bitwise && secs < 30.0,
          fmt("max |recurrent - convolutional| %.2e over 100 systems, ", worst) +
              (bitwise ? "selective reduction bitwise" : "selective reduction differs") + fmt(", %.2f s", secs)};
}

// 3
Outcome discretization() {
  double worst = 0.0;
  auto score = [&](double a, double b, double step) {
    const auto d = discretize(LtiSsm<double>{{a}, {b}, {1.0}, step});
    const long double ab = std::exp(static_cast<long double>(step) * a);
    worst = std::max(worst, double(std::abs(d.a_bar[0] - ab)));
    worst = std::max(worst, double(std::abs(d.b_bar[0] - test::zoh_gain(step, a) * b)));
    return d.b_bar[0];
  };
  score(-1.0, 1.0, 1.0);
  score(0.0, 2.0, 0.3);
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const double step = rng.uniform(0.01, 2.0);
    const double a = -std::pow(10.0, rng.uniform(-10.0, 1.0)) / step;
    score(a, rng.uniform(-2.0, 2.0), step);
  }
  double jump = 0.0;
  for (double rel : {1e-12, 1e-9, 1e-6}) {
    const double below = score(-kZohSeriesThreshold * (1 - rel), 1.0, 1.0);
    const double above = score(-kZohSeriesThreshold * (1 + rel), 1.0, 1.0);
    jump = std::max(jump, std::abs(below - above));
  }
  return {worst < 1e-12 && jump < 1e-12,
          fmt("max error vs closed form %.2e, jump across the series switch %.2e", worst, jump)};
}

// 4
Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t runs = 0;
  for (const auto& c : test::grad_cases())
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const double e = c.run(seed);
      ++runs;
      if (!(e <= worst)) {
        worst = e;
        worst_name = c.name;
      }
    }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 300.0, std::to_string(runs) + " checks, worst " + fmt("%.2e", worst) + " (" +
                                            worst_name + ")" + fmt(", %.1f s", secs)};
}

// 5
Outcome shapes() {
  ModelConfig big;
  ModelConfig small;
  small.base_channels = 8;
  const std::size_t n32 = parameter_count(big), n8 = parameter_count(small);
  Rng rng(5);
  const auto params = init_model<float>(big, rng);
  const auto cube = synth_clean_cube(31, 64, 64, 3, 5).cast<float>();
  const auto out = run_model(params, big, cube);
  const bool shape = out.shape() == Shape{31, 64, 64};
  const bool c32 = std::abs(double(n32) / 10.4e6 - 1.0) <= 0.2;
  const bool c8 = std::abs(double(n8) / 0.68e6 - 1.0) <= 0.2;
  return {shape && c32 && c8, std::string(shape ? "31x64x64 -> 31x64x64" : "wrong output shape") +
                                  ", parameters " + std::to_string(n32) + " (c32) and " + std::to_string(n8) +
                                  " (c8)"};
}

// Toy denoising runs shared by criteria 6, 7 and 10.
TrainConfig toy_config(const NoiseSpec& noise, std::uint64_t seed) {
  TrainConfig c;
  c.model.base_channels = 4;
  c.model.state_dim = 4;
  c.patch_bands = 8;
  c.patch_rows = 16;
  c.patch_cols = 16;
  c.batch_size = 8;
  c.lr = 3e-3;
  c.epochs = 10;
  c.steps_per_epoch = 50;
  c.milestones = {6, 8};
  c.data.cubes = 16;
  c.data.bands = 8;
  c.data.rows = 48;
  c.data.cols = 48;
  c.data.rank = 3;
  c.validate = false;
  c.noise = noise;
  c.seed = seed;
  return c;
}

struct ToyRun {
  double noisy = 0.0;
  double denoised = 0.0;
  double seconds = 0.0;
  std::string checkpoint;
  double gain() const { return denoised - noisy; }
};

ToyRun toy_run(const TrainConfig& cfg) {
  const auto t0 = Clock::now();
  const auto result = train(cfg, make_dataset(cfg));
  std::vector<std::pair<Tensor64, Tensor64>> held;
  ToyRun r;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto clean = synth_clean_cube(8, 32, 32, 3, 9000 + i);
    NoiseSpec n = cfg.noise;
    n.seed = 777 + i;
    held.emplace_back(clean, degrade(clean, n));
    r.noisy += psnr(held.back().first, held.back().second) / 4;
  }
  r.denoised = evaluate(result.weights, cfg.model, held).mean.psnr;
  r.checkpoint = encode_checkpoint({format_config(cfg), result.weights});
  r.seconds = seconds_since(t0);
  return r;
}

std::map<std::string, ToyRun> toy_cache;

const ToyRun& cached_run(const std::string& key, const TrainConfig& cfg) {
  auto it = toy_cache.find(key);
  if (it == toy_cache.end()) {
    it = toy_cache.emplace(key, toy_run(cfg)).first;
    std::printf("  run %-14s noisy %.2f dB  denoised %.2f dB  (%.0f s)\n", key.c_str(), it->second.noisy,
                it->second.denoised, it->second.seconds);
    std::fflush(stdout);
  }
  return it->second;
}

const ToyRun& gaussian_run(std::uint64_t seed) {
  return cached_run("gaussian/" + std::to_string(seed), toy_config(NoiseSpec::gaussian_only(25.0), seed));
}

const ToyRun& mixture_run() { return cached_run("mixture/0", toy_config(NoiseSpec::mixture(25.0), 0)); }

// 6
Outcome toy_denoising() {
  const auto& g = gaussian_run(0);
  const auto& m = mixture_run();
  const double secs = g.seconds + m.seconds;
  return {g.gain() >= 3.0 && m.gain() >= 2.0 && secs < 900.0,
          fmt("held-out gain gaussian %+.2f dB, mixture %+.2f dB, %.0f s", g.gain(), m.gain(), secs)};
}

// 7
Outcome ablation_direction() {
  int scan_wins = 0, bi_wins = 0;
  std::string margins;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto& base = gaussian_run(seed);
    auto sweep_cfg = toy_config(NoiseSpec::gaussian_only(25.0), seed);
    sweep_cfg.model.continuous_scan = false;
    auto fwd_cfg = toy_config(NoiseSpec::gaussian_only(25.0), seed);
    fwd_cfg.model.bidirectional = false;
    const auto& sweep = cached_run("sweep/" + std::to_string(seed), sweep_cfg);
    const auto& fwd = cached_run("forward/" + std::to_string(seed), fwd_cfg);
    scan_wins += base.denoised >= sweep.denoised;
    bi_wins += base.denoised >= fwd.denoised;
    margins += fmt(" [%+.2f %+.2f]", base.denoised - sweep.denoised, base.denoised - fwd.denoised);
  }
  return {scan_wins >= 4 && bi_wins >= 4, "continuous >= sweep in " + std::to_string(scan_wins) +
                                              "/5, bidirectional >= forward-only in " + std::to_string(bi_wins) +
                                              "/5; margins" + margins};
}

// 8
Outcome noise_statistics() {
  const auto x = synth_clean_cube(31, 128, 128, 3, 4);
  NoiseSpec g = NoiseSpec::gaussian_only(95.0);
  g.seed = 5;
  NoiseReport rep;
  degrade(x, g, &rep);
  const std::size_t plane = 128 * 128;
  double worst_rel = 0.0;
  for (std::size_t b = 0; b < 31; ++b) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += rep.pre_clip[b * plane + i] - x[b * plane + i];
    mean /= double(plane);
    for (std::size_t i = 0; i < plane; ++i)
      sq += std::pow(rep.pre_clip[b * plane + i] - x[b * plane + i] - mean, 2);
    const double sd = std::sqrt(sq / double(plane - 1));
    worst_rel = std::max(worst_rel, std::abs(sd - rep.sigma[b]) / rep.sigma[b]);
  }

  bool counts = true;
  for (std::size_t bands : {3, 7, 10, 31, 32}) {
    const auto c = synth_clean_cube(bands, 8, 8, 3, bands);
    NoiseSpec m = NoiseSpec::mixture(30.0);
    m.seed = bands;
    NoiseReport r;
    degrade(c, m, &r);
    const std::size_t want = bands / 3;
    counts = counts && r.impulse_bands.size() == want && r.stripe_bands.size() == want &&
             r.deadline_bands.size() == want;
  }

  bool columns = true;
  for (std::size_t b = 1; b <= 6; ++b)
    for (std::size_t h = 1; h <= 5; ++h)
      for (std::size_t w = 1; w <= 6; ++w)
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          const auto c = synth_clean_cube(b, h, w, std::min<std::size_t>({2, b, h * w}), seed + 100);
          for (int kind = 0; kind < 2; ++kind) {
            NoiseSpec s = NoiseSpec::none();
            (kind ? s.deadlines : s.stripes) = true;
            s.seed = seed;
            bool whole = false;
            test::changed_bands(c, degrade(c, s), &whole);
            columns = columns && whole;
          }
        }
  return {worst_rel <= 0.05 && counts && columns,
          fmt("worst sigma deviation %.2f%%, ", 100 * worst_rel) + (counts ? "band counts exact" : "band counts wrong") +
              (columns ? ", whole-column changes only" : ", partial-column change found")};
}

// 9
Outcome metrics() {
  const auto x = synth_clean_cube(5, 16, 16, 3, 1);
  bool ok = psnr(x, x) == kPsnrCap && ssim(x, x) == 1.0 && sam(x, x) == 0.0;
  const double p20 = psnr(Tensor64(Shape{3, 4, 4}), Tensor64(Shape{3, 4, 4}, 0.1));
  ok = ok && std::abs(p20 - 20.0) < 1e-12;
  const Tensor64 a(Shape{2, 1, 1}, std::vector<double>{1.0, 0.0});
  const Tensor64 b(Shape{2, 1, 1}, std::vector<double>{0.0, 1.0});
  ok = ok && std::abs(sam(a, b) - std::numbers::pi / 2) < 1e-15;
  Rng rng(9);
  const auto u = test::random_tensor({6, 8, 8}, rng, 0.01, 1.0);
  const auto v = test::random_tensor({6, 8, 8}, rng, 0.01, 1.0);
  double drift = 0.0;
  for (double c : {1e-3, 0.5, 7.0, 1e3})
    drift = std::max(drift, std::abs(sam(u, elementwise(ElementwiseOp::mul, v, c)) - sam(u, v)));
  return {ok && drift < 1e-7,
          std::string(ok ? "identity, 20 dB and right-angle cases exact" : "identity or formula case failed") +
              fmt(", sam scale drift %.1e", drift)};
}

// 10
Outcome reproducibility() {
  const auto& first = gaussian_run(0);
  const auto& m1 = mixture_run();
  const auto again = toy_run(toy_config(NoiseSpec::gaussian_only(25.0), 0));
  const auto m2 = toy_run(toy_config(NoiseSpec::mixture(25.0), 0));
  const bool same = first.checkpoint == again.checkpoint && m1.checkpoint == m2.checkpoint;

  bool round = true;
  const auto cube = synth_clean_cube(7, 9, 11, 3, 10);
  for (Dtype dt : {Dtype::f32, Dtype::f64}) {
    const std::string enc = encode_hsic(cube, dt);
    const auto back = decode_hsic(enc);
    round = round && encode_hsic(back.values, dt) == enc && back.dtype == dt;
    if (dt == Dtype::f64) round = round && back.values == cube;
  }
  const auto ck = decode_checkpoint(first.checkpoint);
  round = round && encode_checkpoint(ck) == first.checkpoint;
  return {same && round, std::string(same ? "repeat runs give identical checkpoints" : "checkpoints differ") +
                             fmt(" (%.0f bytes)", double(first.checkpoint.size())) +
                             (round ? ", hsic and checkpoint round trips bitwise" : ", round trip mismatch")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"scan correctness", scans},
      {"ssm oracle equivalence", ssm_forms},
      {"discretization", discretization},
      {"gradient suite", gradients},
      {"shape and parameter contract", shapes},
      {"toy denoising convergence", toy_denoising},
      {"ablation direction", ablation_direction},
      {"noise statistics", noise_statistics},
      {"metrics", metrics},
      {"reproducibility", reproducibility},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::strtoul(argv[i], nullptr, 10));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
