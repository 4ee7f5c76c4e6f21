// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// First-order optimizers over a ModelState. Sparse gradients (embedding and
// first-order rows) update only the touched rows and their moments; moments
// of untouched rows are left as they are.

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "streamctr/models.h"

namespace streamctr::optim {

using nn::Matrix;

enum class OptimKind { kSgd, kAdam, kAdamW, kRmsProp };

std::string to_string(OptimKind kind);
OptimKind optim_kind_from_string(const std::string& name);

struct OptimSpec {
  OptimKind kind = OptimKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;  // rmsprop
  double eps = 1e-8;
  double weight_decay = 0.01;  // adamw only

  void validate() const;
};

struct Moments {
  Matrix first;
  Matrix second;
};

struct OptimState {
  std::map<std::string, Moments> moments;
  std::uint64_t step = 0;

  void reset() {
    moments.clear();
    step = 0;
  }
};

// Applies one update. Throws NumericError naming the tensor when any
// gradient is non-finite; nothing is modified in that case.
void step(OptimState& opt, models::ModelState& model, const models::Gradients& grads,
          const OptimSpec& spec);

}  // namespace streamctr::optim
