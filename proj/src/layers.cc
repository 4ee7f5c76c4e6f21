// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/layers.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "streamctr/errors.h"

namespace streamctr::nn {
namespace {

void consume(bool& flag, const char* what) {
  if (flag) throw std::logic_error(std::string(what) + " cache already consumed");
  flag = true;
}

}  // namespace

Matrix embed_forward(const Matrix& table, std::span<const std::int64_t> rows, std::size_t fields) {
  if (fields == 0 || rows.size() % fields != 0) {
    throw std::invalid_argument("embed_forward: index count is not a multiple of the field count");
  }
  const auto dim = table.cols();
  const std::size_t batch = rows.size() / fields;
  Matrix out(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(fields) * dim);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < fields; ++f) {
      const std::int64_t r = rows[b * fields + f];
      if (r < 0 || r >= table.rows()) {
        throw std::out_of_range("embed_forward: row " + std::to_string(r) + " outside table of " +
                                std::to_string(table.rows()));
      }
      out.row(static_cast<Eigen::Index>(b)).segment(static_cast<Eigen::Index>(f) * dim, dim) =
          table.row(r);
    }
  }
  return out;
}

SparseRows embed_backward(const Matrix& grad_out, std::span<const std::int64_t> rows,
                          std::size_t fields, std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (fields == 0 || rows.size() % fields != 0 ||
      grad_out.rows() != static_cast<Eigen::Index>(rows.size() / fields) ||
      grad_out.cols() != static_cast<Eigen::Index>(fields) * d) {
    throw std::invalid_argument("embed_backward: gradient shape does not match the lookup");
  }
  SparseRows out;
  out.rows.assign(rows.begin(), rows.end());
  std::sort(out.rows.begin(), out.rows.end());
  out.rows.erase(std::unique(out.rows.begin(), out.rows.end()), out.rows.end());
  std::unordered_map<std::int64_t, Eigen::Index> slot;
  slot.reserve(out.rows.size());
  for (std::size_t i = 0; i < out.rows.size(); ++i) slot.emplace(out.rows[i], static_cast<Eigen::Index>(i));
  out.values = Matrix::Zero(static_cast<Eigen::Index>(out.rows.size()), d);
  const std::size_t batch = rows.size() / fields;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t f = 0; f < fields; ++f) {
      out.values.row(slot.at(rows[b * fields + f])) +=
          grad_out.row(static_cast<Eigen::Index>(b)).segment(static_cast<Eigen::Index>(f) * d, d);
    }
  }
  return out;
}

Matrix affine_forward(const Matrix& x, const Matrix& weight, const Matrix& bias, AffineCache* cache) {
  if (x.cols() != weight.rows() || bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw std::invalid_argument("affine_forward: shape mismatch (" + std::to_string(x.cols()) +
                                " inputs vs " + std::to_string(weight.rows()) + "x" +
                                std::to_string(weight.cols()) + " weight)");
  }
  Matrix y = x * weight;
  y.rowwise() += bias.row(0);
  if (cache != nullptr) {
    cache->input = x;
    cache->weight = &weight;
    cache->consumed = false;
  }
  return y;
}

AffineGrads affine_backward(AffineCache& cache, const Matrix& grad_y) {
  consume(cache.consumed, "affine");
  const Matrix& w = *cache.weight;
  if (grad_y.rows() != cache.input.rows() || grad_y.cols() != w.cols()) {
    throw std::invalid_argument("affine_backward: gradient shape mismatch");
  }
  AffineGrads g;
  g.input = grad_y * w.transpose();
  g.weight = cache.input.transpose() * grad_y;
  g.bias = grad_y.colwise().sum();
  return g;
}

Matrix relu_forward(const Matrix& x, ReluCache* cache) {
  if (cache != nullptr) {
    cache->input = x;
    cache->consumed = false;
  }
  return x.cwiseMax(0.0);
}

Matrix relu_backward(ReluCache& cache, const Matrix& grad_y) {
  consume(cache.consumed, "relu");
  if (grad_y.rows() != cache.input.rows() || grad_y.cols() != cache.input.cols()) {
    throw std::invalid_argument("relu_backward: gradient shape mismatch");
  }
  return (cache.input.array() > 0.0).select(grad_y, 0.0);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossGrad bce_with_logits(double z, double y) {
  if (!std::isfinite(z)) throw NumericError("non-finite logit");
  if (y != 0.0 && y != 1.0) throw std::invalid_argument("label must be 0 or 1");
  // -[y log p + (1-y) log(1-p)] = max(z,0) - z y + log(1 + exp(-|z|))
  LossGrad out;
  out.loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  out.grad = sigmoid(z) - y;
  return out;
}

Matrix dropout_forward(const Matrix& x, double rate, Mode mode, Rng& rng, DropoutCache* cache) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  if (mode == Mode::kEval || rate == 0.0) {
    if (cache != nullptr) {
      cache->mask = Matrix::Ones(x.rows(), x.cols());
      cache->consumed = false;
    }
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? keep_scale : 0.0;
  Matrix y = x.cwiseProduct(mask);
  if (cache != nullptr) {
    cache->mask = std::move(mask);
    cache->consumed = false;
  }
  return y;
}

Matrix dropout_backward(DropoutCache& cache, const Matrix& grad_y) {
  consume(cache.consumed, "dropout");
  if (grad_y.rows() != cache.mask.rows() || grad_y.cols() != cache.mask.cols()) {
    throw std::invalid_argument("dropout_backward: gradient shape mismatch");
  }
  return grad_y.cwiseProduct(cache.mask);
}

}  // namespace streamctr::nn
