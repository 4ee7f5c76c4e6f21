// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/optim.h"

#include <cmath>
#include <stdexcept>

#include "streamctr/errors.h"

namespace streamctr::optim {

std::string to_string(OptimKind kind) {
  switch (kind) {
    case OptimKind::kSgd: return "sgd";
    case OptimKind::kAdam: return "adam";
    case OptimKind::kAdamW: return "adamw";
    case OptimKind::kRmsProp: return "rmsprop";
  }
  return "unknown";
}

OptimKind optim_kind_from_string(const std::string& name) {
  if (name == "sgd") return OptimKind::kSgd;
  if (name == "adam") return OptimKind::kAdam;
  if (name == "adamw") return OptimKind::kAdamW;
  if (name == "rmsprop") return OptimKind::kRmsProp;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd|adam|adamw|rmsprop)");
}

void OptimSpec::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("optim.learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("optim betas must lie in [0, 1)");
  }
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("optim.rho must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optim.eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("optim.weight_decay must be >= 0");
}

namespace {

struct StepConstants {
  double lr;
  double correction1 = 1.0;
  double correction2 = 1.0;
};

// Updates n contiguous parameters in place.
void update_span(double* theta, const double* g, double* m, double* v, Eigen::Index n,
                 const OptimSpec& spec, const StepConstants& c) {
  switch (spec.kind) {
    case OptimKind::kSgd:
      for (Eigen::Index i = 0; i < n; ++i) theta[i] -= c.lr * g[i];
      return;
    case OptimKind::kRmsProp:
      for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = spec.rho * v[i] + (1.0 - spec.rho) * g[i] * g[i];
        theta[i] -= c.lr * g[i] / (std::sqrt(v[i]) + spec.eps);
      }
      return;
    case OptimKind::kAdam:
    case OptimKind::kAdamW:
      for (Eigen::Index i = 0; i < n; ++i) {
        if (spec.kind == OptimKind::kAdamW) theta[i] -= c.lr * spec.weight_decay * theta[i];
        m[i] = spec.beta1 * m[i] + (1.0 - spec.beta1) * g[i];
        v[i] = spec.beta2 * v[i] + (1.0 - spec.beta2) * g[i] * g[i];
        const double m_hat = m[i] / c.correction1;
        const double v_hat = v[i] / c.correction2;
        theta[i] -= c.lr * m_hat / (std::sqrt(v_hat) + spec.eps);
      }
      return;
  }
}

Moments& moments_for(OptimState& opt, const std::string& name, const Matrix& param) {
  Moments& mo = opt.moments[name];
  if (mo.first.rows() != param.rows() || mo.first.cols() != param.cols()) {
    mo.first = Matrix::Zero(param.rows(), param.cols());
    mo.second = Matrix::Zero(param.rows(), param.cols());
  }
  return mo;
}

Matrix& param_for(models::ModelState& model, const std::string& name) {
  Matrix* p = model.find(name);
  if (p == nullptr) throw std::invalid_argument("gradient for unknown tensor '" + name + "'");
  return *p;
}

}  // namespace

void step(OptimState& opt, models::ModelState& model, const models::Gradients& grads,
          const OptimSpec& spec) {
  for (const auto& d : grads.dense) {
    if (!d.value.allFinite()) throw NumericError("non-finite gradient in tensor '" + d.name + "'");
  }
  for (const auto& s : grads.sparse) {
    if (!s.value.values.allFinite()) throw NumericError("non-finite gradient in tensor '" + s.name + "'");
  }

  opt.step += 1;
  StepConstants c{spec.learning_rate};
  const double t = static_cast<double>(opt.step);
  c.correction1 = 1.0 - std::pow(spec.beta1, t);
  c.correction2 = 1.0 - std::pow(spec.beta2, t);

  for (const auto& d : grads.dense) {
    Matrix& param = param_for(model, d.name);
    if (param.rows() != d.value.rows() || param.cols() != d.value.cols()) {
      throw std::invalid_argument("gradient shape mismatch for '" + d.name + "'");
    }
    Moments& mo = moments_for(opt, d.name, param);
    update_span(param.data(), d.value.data(), mo.first.data(), mo.second.data(), param.size(), spec, c);
  }
  for (const auto& s : grads.sparse) {
    Matrix& param = param_for(model, s.name);
    if (param.cols() != s.value.values.cols() ||
        static_cast<Eigen::Index>(s.value.rows.size()) != s.value.values.rows()) {
      throw std::invalid_argument("sparse gradient shape mismatch for '" + s.name + "'");
    }
    Moments& mo = moments_for(opt, s.name, param);
    const Eigen::Index width = param.cols();
    for (std::size_t i = 0; i < s.value.rows.size(); ++i) {
      const std::int64_t r = s.value.rows[i];
      if (r < 0 || r >= param.rows()) throw std::out_of_range("sparse gradient row outside '" + s.name + "'");
      update_span(param.row(r).data(), s.value.values.row(static_cast<Eigen::Index>(i)).data(),
                  mo.first.row(r).data(), mo.second.row(r).data(), width, spec, c);
    }
  }
}

}  // namespace streamctr::optim
