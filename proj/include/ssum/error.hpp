// Copyright 2026 The ssumamba-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SSUM_ERROR_HPP
#define SSUM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ssum {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments, shapes, or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data (files, cubes, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a NaN or an infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssum

#endif  // SSUM_ERROR_HPP
