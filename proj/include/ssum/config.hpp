// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

// Flat `section.key = value` text. '#' starts a comment. Sections: model,
// noise, train, data. Unknown keys and malformed values raise UsageError.

#ifndef SSUM_CONFIG_HPP
#define SSUM_CONFIG_HPP

#include <string>
#include <string_view>

#include "ssum/train.hpp"

namespace ssum {

/// Applies the assignments in `text` on top of `base`.
TrainConfig parse_config(std::string_view text, const TrainConfig& base = TrainConfig{});
/// Every key, one per line, in a fixed order; parse_config(format_config(c)) == c.
std::string format_config(const TrainConfig& cfg);

}  // namespace ssum

#endif  // SSUM_CONFIG_HPP
