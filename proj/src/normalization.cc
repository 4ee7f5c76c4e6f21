// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/normalization.h"

#include <cmath>
#include <stdexcept>

#include "streamctr/errors.h"

namespace streamctr::nn {

void NormConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("normalization epsilon must be > 0");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("normalization momentum must lie in [0, 1]");
  if (enabled() && !use_mean && !use_var) {
    throw ConfigError("normalization needs at least one of mean/var when enabled");
  }
}

NormConfig NormConfig::none() { return NormConfig{}; }

NormConfig NormConfig::batch_norm() {
  NormConfig cfg;
  cfg.kind = NormKind::kBatch;
  return cfg;
}

NormConfig NormConfig::layer_norm() {
  NormConfig cfg;
  cfg.kind = NormKind::kLayer;
  return cfg;
}

NormConfig NormConfig::simple_layer_norm() {
  NormConfig cfg = layer_norm();
  cfg.use_scale = false;
  cfg.use_shift = false;
  return cfg;
}

NormConfig NormConfig::variance_only_layer_norm() {
  NormConfig cfg = simple_layer_norm();
  cfg.use_mean = false;
  return cfg;
}

NormConfig NormConfig::from_preset(const std::string& name) {
  if (name == "none") return none();
  if (name == "bn") return batch_norm();
  if (name == "ln") return layer_norm();
  if (name == "simple_ln") return simple_layer_norm();
  if (name == "vo_ln") return variance_only_layer_norm();
  throw ConfigError("unknown normalization preset '" + name + "'");
}

std::string preset_name(const NormConfig& cfg) {
  for (const char* name : {"none", "bn", "ln", "simple_ln", "vo_ln"}) {
    if (NormConfig::from_preset(name) == cfg) return name;
  }
  if (!cfg.enabled()) return "none";
  return {};
}

NormState NormState::init(const NormConfig& cfg, Eigen::Index width) {
  NormState state;
  if (!cfg.enabled()) return state;
  if (cfg.use_scale) state.alpha = Matrix::Ones(1, width);
  if (cfg.use_shift) state.beta = Matrix::Zero(1, width);
  if (cfg.kind == NormKind::kBatch) {
    state.running_mean = Matrix::Zero(1, width);
    state.running_var = Matrix::Ones(1, width);
  }
  return state;
}

namespace {

// Rows of the returned matrix are normalization groups.
Matrix group_major(const Matrix& x, NormKind kind) {
  if (kind == NormKind::kBatch) return x.transpose();
  return x;
}

Matrix feature_major(const Matrix& g, NormKind kind) {
  if (kind == NormKind::kBatch) return g.transpose();
  return g;
}

void check_width(const Matrix& x, const NormConfig& cfg, const NormState& state) {
  auto check = [&](const Matrix& m, const char* name) {
    if (m.size() != 0 && m.cols() != x.cols()) {
      throw std::invalid_argument(std::string("norm: ") + name + " width does not match input");
    }
  };
  check(state.alpha, "alpha");
  check(state.beta, "beta");
  check(state.running_mean, "running_mean");
  check(state.running_var, "running_var");
  if (cfg.use_scale != (state.alpha.size() != 0) || cfg.use_shift != (state.beta.size() != 0)) {
    throw std::invalid_argument("norm: state does not match the affine flags");
  }
  if (cfg.kind == NormKind::kBatch && (state.running_mean.size() == 0 || state.running_var.size() == 0)) {
    throw std::invalid_argument("norm: batch kind needs running statistics");
  }
}

Matrix finish(const NormConfig& cfg, const NormState& state, Matrix xhat) {
  if (cfg.use_scale) xhat.array().rowwise() *= state.alpha.row(0).array();
  if (cfg.use_shift) xhat.rowwise() += state.beta.row(0);
  return xhat;
}

// mean/var given per group, or computed from the data when null.
Matrix normalize(const Matrix& x, const NormConfig& cfg, const NormState& state, const Vector* mean,
                 const Vector* var, NormCache* cache, Mode mode) {
  const Matrix g = group_major(x, cfg.kind);
  const Vector mu = mean != nullptr ? *mean : Vector(g.rowwise().mean());
  Matrix deviation = g.colwise() - mu;
  const Vector sigma2 = var != nullptr ? *var : Vector(deviation.array().square().rowwise().mean());
  Vector scale = Vector::Ones(g.rows());
  if (cfg.use_var) scale = (sigma2.array() + cfg.epsilon).sqrt();
  Matrix shifted = cfg.use_mean ? deviation : g;
  Matrix xhat_g = shifted.array().colwise() / scale.array();
  Matrix xhat = feature_major(xhat_g, cfg.kind);
  Matrix y = finish(cfg, state, xhat);
  if (cache != nullptr) {
    cache->cfg = cfg;
    cache->mode = mode;
    cache->deviation = std::move(deviation);
    cache->shifted = std::move(shifted);
    cache->xhat = std::move(xhat);
    cache->scale = std::move(scale);
    cache->consumed = false;
  }
  return y;
}

}  // namespace

Matrix norm_forward(const Matrix& x, const NormConfig& cfg, NormState& state, Mode mode,
                    NormCache* cache) {
  if (!cfg.enabled()) {
    if (cache != nullptr) {
      *cache = NormCache{};
      cache->cfg = cfg;
      cache->mode = mode;
    }
    return x;
  }
  if (mode == Mode::kEval) return norm_forward_eval(x, cfg, state, cache);
  check_width(x, cfg, state);
  if (cfg.kind == NormKind::kBatch) {
    if (x.rows() < 2) throw std::invalid_argument("batch normalization in train mode needs >= 2 rows");
    const RowVector mu = x.colwise().mean();
    const RowVector sigma2 = (x.rowwise() - mu).array().square().colwise().mean();
    Matrix y = normalize(x, cfg, state, nullptr, nullptr, cache, mode);
    const double lambda = cfg.momentum;
    state.running_mean.row(0) = lambda * state.running_mean.row(0) + (1.0 - lambda) * mu;
    state.running_var.row(0) = lambda * state.running_var.row(0) + (1.0 - lambda) * sigma2;
    return y;
  }
  return normalize(x, cfg, state, nullptr, nullptr, cache, mode);
}

Matrix norm_forward_eval(const Matrix& x, const NormConfig& cfg, const NormState& state,
                         NormCache* cache) {
  if (!cfg.enabled()) {
    if (cache != nullptr) {
      *cache = NormCache{};
      cache->cfg = cfg;
      cache->mode = Mode::kEval;
    }
    return x;
  }
  check_width(x, cfg, state);
  if (cfg.kind == NormKind::kBatch) {
    const Vector mu = state.running_mean.row(0).transpose();
    const Vector sigma2 = state.running_var.row(0).transpose();
    return normalize(x, cfg, state, &mu, &sigma2, cache, Mode::kEval);
  }
  return normalize(x, cfg, state, nullptr, nullptr, cache, Mode::kEval);
}

NormGrads norm_backward(NormCache& cache, const NormConfig& cfg, const NormState& state,
                        const Matrix& grad_y) {
  if (cache.consumed) throw std::logic_error("norm cache already consumed");
  cache.consumed = true;
  if (!(cache.cfg == cfg)) throw std::invalid_argument("norm_backward: cache was built with other flags");
  NormGrads grads;
  if (!cfg.enabled()) {
    grads.input = grad_y;
    return grads;
  }
  if (grad_y.rows() != cache.xhat.rows() || grad_y.cols() != cache.xhat.cols()) {
    throw std::invalid_argument("norm_backward: gradient shape mismatch");
  }
  if (cfg.use_scale) grads.alpha = grad_y.cwiseProduct(cache.xhat).colwise().sum();
  if (cfg.use_shift) grads.beta = grad_y.colwise().sum();

  Matrix upstream = grad_y;
  if (cfg.use_scale) upstream.array().rowwise() *= state.alpha.row(0).array();
  const Matrix g = group_major(upstream, cfg.kind);
  const Vector& s = cache.scale;
  Matrix dx = g.array().colwise() / s.array();

  // Batch statistics are functions of x only when they were computed from
  // the batch; eval-mode batch kind uses constants.
  const bool stats_from_data = !(cfg.kind == NormKind::kBatch && cache.mode == Mode::kEval);
  if (stats_from_data) {
    const double n = static_cast<double>(g.cols());
    if (cfg.use_mean) {
      const Vector mean_g = g.rowwise().sum() / n;
      dx.colwise() -= Vector(mean_g.array() / s.array());
    }
    if (cfg.use_var) {
      const Vector dot = g.cwiseProduct(cache.shifted).rowwise().sum();
      const Vector coef = dot.array() / (n * s.array().cube());
      dx -= Matrix(cache.deviation.array().colwise() * coef.array());
    }
  }
  grads.input = feature_major(dx, cfg.kind);
  return grads;
}

}  // namespace streamctr::nn
