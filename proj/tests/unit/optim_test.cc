// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/optim.h"

#include <doctest.h>

#include <cmath>
#include <limits>

#include "streamctr/errors.h"

using namespace streamctr;
using namespace streamctr::optim;
using models::Gradients;
using models::ModelState;

namespace {

ModelState tiny_fm() {
  models::ModelSpec spec;
  spec.kind = models::ModelKind::kFm;
  spec.embed_dim = 2;
  return models::init_model(spec, std::vector<std::int32_t>{3, 2}, 1);
}

Gradients dense_bias_grad(double g) {
  Gradients grads;
  grads.dense.push_back({"bias", Matrix::Constant(1, 1, g)});
  return grads;
}

Gradients sparse_row_grad(std::int64_t row, double g) {
  Gradients grads;
  nn::SparseRows s;
  s.rows = {row};
  s.values = Matrix::Constant(1, 2, g);
  grads.sparse.push_back({"embedding", s});
  return grads;
}

// Scalar Adam written out longhand.
struct AdamOracle {
  double m = 0, v = 0, theta;
  int t = 0;
  double lr, b1, b2, eps, wd = 0.0;
  void update(double g) {
    ++t;
    theta -= lr * wd * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_SUITE("optim") {
TEST_CASE("sgd takes a plain gradient step") {
  ModelState m = tiny_fm();
  OptimState st;
  OptimSpec spec;
  spec.kind = OptimKind::kSgd;
  spec.learning_rate = 0.5;
  step(st, m, dense_bias_grad(2.0), spec);
  CHECK(m.bias(0, 0) == doctest::Approx(-1.0));
  CHECK(st.step == 1);
}

TEST_CASE("adam matches a longhand scalar oracle over many steps") {
  ModelState m = tiny_fm();
  OptimState st;
  OptimSpec spec;
  AdamOracle o{0, 0, 0.0, 0, spec.learning_rate, spec.beta1, spec.beta2, spec.eps};
  for (int i = 0; i < 50; ++i) {
    const double g = std::sin(0.3 * i) + 0.1;
    step(st, m, dense_bias_grad(g), spec);
    o.update(g);
  }
  CHECK(m.bias(0, 0) == doctest::Approx(o.theta).epsilon(1e-13));
}

TEST_CASE("adamw decays before the adam update") {
  ModelState m = tiny_fm();
  m.bias(0, 0) = 2.0;
  OptimState st;
  OptimSpec spec;
  spec.kind = OptimKind::kAdamW;
  spec.learning_rate = 0.1;
  CHECK(spec.weight_decay == 0.01);
  AdamOracle o{0, 0, 2.0, 0, spec.learning_rate, spec.beta1, spec.beta2, spec.eps, spec.weight_decay};
  for (int i = 0; i < 5; ++i) {
    step(st, m, dense_bias_grad(0.5), spec);
    o.update(0.5);
  }
  CHECK(m.bias(0, 0) == doctest::Approx(o.theta).epsilon(1e-13));
}

TEST_CASE("rmsprop matches its recurrence") {
  ModelState m = tiny_fm();
  OptimState st;
  OptimSpec spec;
  spec.kind = OptimKind::kRmsProp;
  spec.learning_rate = 0.01;
  double v = 0, theta = 0;
  for (double g : {1.0, -2.0, 0.5}) {
    step(st, m, dense_bias_grad(g), spec);
    v = 0.9 * v + 0.1 * g * g;
    theta -= 0.01 * g / (std::sqrt(v) + 1e-8);
  }
  CHECK(m.bias(0, 0) == doctest::Approx(theta).epsilon(1e-13));
}

TEST_CASE("sparse updates are lazy: untouched rows and moments stay put") {
  ModelState m = tiny_fm();
  const Matrix before = m.embedding;
  OptimState st;
  OptimSpec spec;
  step(st, m, sparse_row_grad(1, 0.3), spec);
  step(st, m, sparse_row_grad(4, -0.2), spec);
  for (Eigen::Index r = 0; r < before.rows(); ++r) {
    if (r == 1 || r == 4) {
      CHECK(m.embedding.row(r) != before.row(r));
    } else {
      CHECK(m.embedding.row(r) == before.row(r));
    }
  }
  const Moments& mo = st.moments.at("embedding");
  CHECK(mo.first.row(0).isZero());
  CHECK(mo.first(1, 0) == doctest::Approx(0.1 * 0.3));
  // Row 4 saw its first gradient at global step 2; bias correction uses the global step.
  AdamOracle o{0, 0, before(4, 0), 1, spec.learning_rate, spec.beta1, spec.beta2, spec.eps};
  o.update(-0.2);
  CHECK(m.embedding(4, 0) == doctest::Approx(o.theta).epsilon(1e-13));
  CHECK(st.step == 2);
}

TEST_CASE("non-finite gradients throw naming the tensor and change nothing") {
  ModelState m = tiny_fm();
  const std::uint64_t h = m.hash();
  OptimState st;
  Gradients g = dense_bias_grad(1.0);
  nn::SparseRows s;
  s.rows = {0};
  s.values = Matrix::Constant(1, 2, std::numeric_limits<double>::infinity());
  g.sparse.push_back({"embedding", s});
  try {
    step(st, m, g, OptimSpec{});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("embedding") != std::string::npos);
  }
  CHECK(m.hash() == h);
  CHECK(st.step == 0);
  CHECK(st.moments.empty());
}

TEST_CASE("reset clears moments and the step counter") {
  ModelState m = tiny_fm();
  OptimState st;
  step(st, m, dense_bias_grad(1.0), OptimSpec{});
  st.reset();
  CHECK(st.step == 0);
  CHECK(st.moments.empty());
}

TEST_CASE("spec validation and names") {
  OptimSpec s;
  s.learning_rate = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.beta2 = 1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  for (auto k : {OptimKind::kSgd, OptimKind::kAdam, OptimKind::kAdamW, OptimKind::kRmsProp}) {
    CHECK(optim_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(optim_kind_from_string("lamb"), ConfigError);
}
}
