// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Versioned flat checkpoint: every tensor is written with its name, shape and
// row-major values. Reading back what was written is bit-exact.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "streamctr/tensor.h"

namespace streamctr::nn {

struct TensorView {
  std::string name;
  const Matrix* value = nullptr;
};

using NamedTensors = std::vector<std::pair<std::string, Matrix>>;

void write_checkpoint(std::ostream& out, std::span<const TensorView> tensors);
NamedTensors read_checkpoint(std::istream& in);

// FNV-1a over names, shapes and raw values.
std::uint64_t tensors_hash(std::span<const TensorView> tensors);

}  // namespace streamctr::nn
