// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssum/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "ssum/error.hpp"

namespace ssum {
namespace {

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw UsageError("config: " + std::string(key) + " = '" + std::string(value) + "' is not " + expected);
}

template <typename N>
N parse_number(std::string_view key, std::string_view v) {
  N out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string_view> split(std::string_view v) {
  std::vector<std::string_view> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  for (auto item : split(v)) out.push_back(parse_number<std::size_t>(key, item));
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(std::size_t v) { return std::to_string(v); }
template <typename C>
std::string fmt_list(const C& items) {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_same_v<std::decay_t<decltype(i)>, std::string>)
      out += i;
    else
      out += std::to_string(i);
  }
  return out;
}

struct Field {
  std::function<void(TrainConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const TrainConfig&)> get;
};

using Table = std::vector<std::pair<std::string, Field>>;

#define SSUM_NUM(key, member, type)                                                       \
  {key, Field{[](TrainConfig& c, std::string_view k, std::string_view v) {                \
                c.member = parse_number<type>(k, v);                                      \
              },                                                                          \
              [](const TrainConfig& c) { return fmt(c.member); }}}
#define SSUM_BOOL(key, member)                                                            \
  {key, Field{[](TrainConfig& c, std::string_view k, std::string_view v) {                \
                c.member = parse_bool(k, v);                                              \
              },                                                                          \
              [](const TrainConfig& c) { return fmt(c.member); }}}
#define SSUM_LIST(key, member)                                                            \
  {key, Field{[](TrainConfig& c, std::string_view k, std::string_view v) {                \
                c.member = parse_list(k, v);                                              \
              },                                                                          \
              [](const TrainConfig& c) { return fmt_list(c.member); }}}

const Table& table() {
  static const Table t = {
      SSUM_NUM("model.base_channels", model.base_channels, std::size_t),
      SSUM_LIST("model.channel_multipliers", model.channel_multipliers),
      SSUM_LIST("model.downsample_blocks", model.downsample_blocks),
      SSUM_NUM("model.residual_blocks", model.residual_blocks, std::size_t),
      SSUM_NUM("model.state_dim", model.state_dim, std::size_t),
      SSUM_NUM("model.conv1d_width", model.conv1d_width, std::size_t),
      SSUM_BOOL("model.continuous_scan", model.continuous_scan),
      SSUM_BOOL("model.bidirectional", model.bidirectional),
      SSUM_NUM("model.leaky_slope", model.leaky_slope, double),

      SSUM_BOOL("noise.gaussian", noise.gaussian),
      SSUM_NUM("noise.sigma_max", noise.sigma_max, double),
      SSUM_BOOL("noise.impulse", noise.impulse),
      SSUM_NUM("noise.impulse_band_fraction", noise.impulse_band_fraction, double),
      SSUM_NUM("noise.impulse_min", noise.impulse_min, double),
      SSUM_NUM("noise.impulse_max", noise.impulse_max, double),
      SSUM_BOOL("noise.stripes", noise.stripes),
      SSUM_NUM("noise.stripe_band_fraction", noise.stripe_band_fraction, double),
      SSUM_NUM("noise.stripe_column_min", noise.stripe_column_min, double),
      SSUM_NUM("noise.stripe_column_max", noise.stripe_column_max, double),
      SSUM_NUM("noise.stripe_amplitude", noise.stripe_amplitude, double),
      SSUM_BOOL("noise.deadlines", noise.deadlines),
      SSUM_NUM("noise.deadline_band_fraction", noise.deadline_band_fraction, double),
      SSUM_NUM("noise.deadline_column_min", noise.deadline_column_min, double),
      SSUM_NUM("noise.deadline_column_max", noise.deadline_column_max, double),
      SSUM_NUM("noise.seed", noise.seed, std::uint64_t),

      SSUM_NUM("train.lr", lr, double),
      SSUM_LIST("train.milestones", milestones),
      SSUM_NUM("train.lr_factor", lr_factor, double),
      SSUM_NUM("train.epochs", epochs, std::size_t),
      SSUM_NUM("train.steps_per_epoch", steps_per_epoch, std::size_t),
      SSUM_NUM("train.batch_size", batch_size, std::size_t),
      SSUM_NUM("train.patch_bands", patch_bands, std::size_t),
      SSUM_NUM("train.patch_rows", patch_rows, std::size_t),
      SSUM_NUM("train.patch_cols", patch_cols, std::size_t),
      SSUM_NUM("train.clip_norm", clip_norm, double),
      SSUM_BOOL("train.validate", validate),
      SSUM_NUM("train.seed", seed, std::uint64_t),
      {"train.precision", Field{[](TrainConfig& c, std::string_view k, std::string_view v) {
                                  if (v == "f32") c.precision = Precision::f32;
                                  else if (v == "f64") c.precision = Precision::f64;
                                  else bad_value(k, v, "f32 or f64");
                                },
                                [](const TrainConfig& c) {
                                  return std::string(c.precision == Precision::f32 ? "f32" : "f64");
                                }}},

      {"data.files", Field{[](TrainConfig& c, std::string_view, std::string_view v) {
                             c.data.files.clear();
                             for (auto f : split(v)) c.data.files.emplace_back(f);
                           },
                           [](const TrainConfig& c) { return fmt_list(c.data.files); }}},
      SSUM_NUM("data.cubes", data.cubes, std::size_t),
      SSUM_NUM("data.bands", data.bands, std::size_t),
      SSUM_NUM("data.rows", data.rows, std::size_t),
      SSUM_NUM("data.cols", data.cols, std::size_t),
      SSUM_NUM("data.rank", data.rank, std::size_t),
      SSUM_NUM("data.val_rows", data.val_rows, std::size_t),
      SSUM_NUM("data.val_cols", data.val_cols, std::size_t),
  };
  return t;
}

#undef SSUM_NUM
#undef SSUM_BOOL
#undef SSUM_LIST

}  // namespace

TrainConfig parse_config(std::string_view text, const TrainConfig& base) {
  static const std::map<std::string, const Field*, std::less<>> index = [] {
    std::map<std::string, const Field*, std::less<>> m;
    for (const auto& [k, f] : table()) m.emplace(k, &f);
    return m;
  }();
  TrainConfig cfg = base;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end())
      throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    it->second->set(cfg, key, value);
  }
  return cfg;
}

std::string format_config(const TrainConfig& cfg) {
  std::ostringstream out;
  for (const auto& [k, f] : table()) out << k << " = " << f.get(cfg) << '\n';
  return out.str();
}

}  // namespace ssum
