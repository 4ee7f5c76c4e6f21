// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Batch/layer normalization family with independently switchable
// components:
//
//   y = alpha * (x - mu) / sqrt(var + eps) + beta
//
// Batch kind takes (mu, var) per feature over the batch axis in train mode
// and the exponential moving averages in eval mode; layer kind takes them
// per row over the feature axis. Variances use the biased 1/N estimator.
// A disabled mean subtracts nothing, a disabled variance divides by 1, and
// disabled scale/shift parameters do not exist at all.

#pragma once

#include <string>

#include "streamctr/tensor.h"

namespace streamctr::nn {

enum class NormKind { kNone, kBatch, kLayer };

struct NormConfig {
  NormKind kind = NormKind::kNone;
  bool use_mean = true;
  bool use_var = true;
  bool use_scale = true;  // alpha
  bool use_shift = true;  // beta
  double epsilon = 1e-5;
  double momentum = 0.9;  // EMA weight on the old running statistic

  bool enabled() const { return kind != NormKind::kNone; }
  bool use_affine() const { return use_scale && use_shift; }
  void validate() const;

  static NormConfig none();
  static NormConfig batch_norm();
  static NormConfig layer_norm();
  // Layer norm without affine parameters.
  static NormConfig simple_layer_norm();
  // y = x / sqrt(var + eps), per row.
  static NormConfig variance_only_layer_norm();
  // Accepts none|bn|ln|simple_ln|vo_ln.
  static NormConfig from_preset(const std::string& name);

  friend bool operator==(const NormConfig&, const NormConfig&) = default;
};

// Name of the preset equal to cfg, or empty when cfg is a custom combination.
std::string preset_name(const NormConfig& cfg);

// All tensors are 1 x width, or empty when the config does not use them.
struct NormState {
  Matrix alpha;
  Matrix beta;
  Matrix running_mean;
  Matrix running_var;

  static NormState init(const NormConfig& cfg, Eigen::Index width);
};

struct NormCache {
  NormConfig cfg;
  Mode mode = Mode::kTrain;
  // Group-major views: one row per normalized group (the transpose of x
  // for batch kind).
  Matrix deviation;  // x - group mean
  Matrix shifted;    // deviation when use_mean, x otherwise
  Matrix xhat;       // normalized input before scale/shift, shaped like x
  // Divisor sqrt(var + eps) (or 1) per group: per column for batch kind,
  // per row for layer kind.
  Vector scale;
  bool consumed = false;
};

struct NormGrads {
  Matrix input;
  Matrix alpha;  // empty when scale is disabled
  Matrix beta;   // empty when shift is disabled
};

// Train-mode batch kind updates the running statistics in `state`.
// Throws std::invalid_argument for batch kind in train mode with one row.
Matrix norm_forward(const Matrix& x, const NormConfig& cfg, NormState& state, Mode mode,
                    NormCache* cache);
// Inference path that never touches running statistics.
Matrix norm_forward_eval(const Matrix& x, const NormConfig& cfg, const NormState& state,
                         NormCache* cache);
NormGrads norm_backward(NormCache& cache, const NormConfig& cfg, const NormState& state,
                        const Matrix& grad_y);

}  // namespace streamctr::nn
