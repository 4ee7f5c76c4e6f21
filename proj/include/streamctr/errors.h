// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace streamctr {

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data or an unusable dataset layout (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or other numeric failures during training (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace streamctr
