// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Forward/backward primitives with explicit caches. A cache is consumed by
// exactly one backward call; reuse throws std::logic_error.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "streamctr/random.h"
#include "streamctr/tensor.h"

namespace streamctr::nn {

// rows holds B * fields global table rows, sample-major. Output row b is the
// concatenation of the looked-up vectors in field order.
Matrix embed_forward(const Matrix& table, std::span<const std::int64_t> rows, std::size_t fields);

// Sums gradients of repeated rows; untouched rows are absent.
SparseRows embed_backward(const Matrix& grad_out, std::span<const std::int64_t> rows,
                          std::size_t fields, std::size_t dim);

struct AffineCache {
  Matrix input;
  const Matrix* weight = nullptr;
  bool consumed = false;
};

struct AffineGrads {
  Matrix input;
  Matrix weight;
  Matrix bias;  // 1 x out
};

// y = x W + b, with W in x out and b 1 x out.
Matrix affine_forward(const Matrix& x, const Matrix& weight, const Matrix& bias, AffineCache* cache);
AffineGrads affine_backward(AffineCache& cache, const Matrix& grad_y);

struct ReluCache {
  Matrix input;
  bool consumed = false;
};

Matrix relu_forward(const Matrix& x, ReluCache* cache);
Matrix relu_backward(ReluCache& cache, const Matrix& grad_y);

double sigmoid(double z);

struct LossGrad {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d z
};

// Binary cross-entropy on a logit, log-sum-exp form. Throws NumericError on a
// non-finite logit and std::invalid_argument on a label outside {0, 1}.
LossGrad bce_with_logits(double z, double y);

struct DropoutCache {
  Matrix mask;  // 0 or 1 / (1 - rate)
  bool consumed = false;
};

// Inverted dropout in train mode, identity in eval mode.
Matrix dropout_forward(const Matrix& x, double rate, Mode mode, Rng& rng, DropoutCache* cache);
Matrix dropout_backward(DropoutCache& cache, const Matrix& grad_y);

}  // namespace streamctr::nn
