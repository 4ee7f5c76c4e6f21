// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "streamctr/checkpoint.h"
#include "streamctr/errors.h"
#include "streamctr/layers.h"
#include "streamctr/normalization.h"

using namespace streamctr;
using namespace streamctr::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Element-by-element normalization of a single group.
std::vector<double> naive_norm_group(const std::vector<double>& x, const NormConfig& cfg, double mean_in, double var_in,
                                     bool use_given) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  if (use_given) {
    mu = mean_in;
    var = var_in;
  }
  std::vector<double> out;
  for (double v : x) {
    double y = cfg.use_mean ? v - mu : v;
    if (cfg.use_var) y /= std::sqrt(var + cfg.epsilon);
    out.push_back(y);
  }
  return out;
}

// Sum of weighted outputs, for finite differences through norm_forward.
double weighted_norm(const Matrix& x, const NormConfig& cfg, NormState state, const Matrix& w) {
  return norm_forward(x, cfg, state, Mode::kTrain, nullptr).cwiseProduct(w).sum();
}

std::vector<NormConfig> all_norm_configs() {
  std::vector<NormConfig> out;
  for (NormKind kind : {NormKind::kBatch, NormKind::kLayer}) {
    for (int mask = 0; mask < 16; ++mask) {
      NormConfig c;
      c.kind = kind;
      c.use_mean = mask & 1;
      c.use_var = mask & 2;
      c.use_scale = mask & 4;
      c.use_shift = mask & 8;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("layers") {
TEST_CASE("embedding lookup concatenates rows in field order") {
  Matrix table(4, 2);
  table << 0, 1, 10, 11, 20, 21, 30, 31;
  const std::vector<std::int64_t> rows = {1, 3, 0, 0};
  const Matrix out = embed_forward(table, rows, 2);
  Matrix expect(2, 4);
  expect << 10, 11, 30, 31, 0, 1, 0, 1;
  CHECK(out == expect);
}

TEST_CASE("embedding backward sums repeated rows and omits untouched ones") {
  Matrix grad(2, 4);
  grad << 1, 2, 3, 4, 5, 6, 7, 8;
  const std::vector<std::int64_t> rows = {1, 3, 0, 0};
  const SparseRows g = embed_backward(grad, rows, 2, 2);
  CHECK(g.rows == std::vector<std::int64_t>{0, 1, 3});
  Matrix expect(3, 2);
  expect << 12, 14, 1, 2, 3, 4;
  CHECK(g.values == expect);
}

TEST_CASE("embedding lookup equals a one-hot matmul") {
  const Matrix table = random_matrix(9, 3, 1);
  const std::vector<std::int64_t> rows = {2, 7, 0, 5, 8, 8};
  const Matrix out = embed_forward(table, rows, 2);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t f = 0; f < 2; ++f) {
      Matrix onehot = Matrix::Zero(1, 9);
      onehot(0, rows[b * 2 + f]) = 1.0;
      const Matrix e = onehot * table;
      CHECK((out.block(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f * 3), 1, 3) - e).norm() < 1e-15);
    }
  }
}

TEST_CASE("affine backward matches finite differences") {
  const Matrix x = random_matrix(4, 3, 2);
  Matrix w = random_matrix(3, 2, 3);
  Matrix bias = random_matrix(1, 2, 4);
  const Matrix gy = random_matrix(4, 2, 5);
  AffineCache cache;
  affine_forward(x, w, bias, &cache);
  const AffineGrads g = affine_backward(cache, gy);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Matrix wp = w, wm = w;
    wp.data()[i] += h;
    wm.data()[i] -= h;
    const double fd = ((affine_forward(x, wp, bias, nullptr) - affine_forward(x, wm, bias, nullptr)).cwiseProduct(gy).sum()) / (2 * h);
    CHECK(g.weight.data()[i] == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK((g.bias - gy.colwise().sum()).norm() < 1e-12);
  CHECK((g.input - gy * w.transpose()).norm() < 1e-12);
}

TEST_CASE("caches are single use") {
  const Matrix x = random_matrix(2, 2, 1);
  ReluCache rc;
  relu_forward(x, &rc);
  relu_backward(rc, x);
  CHECK_THROWS_AS(relu_backward(rc, x), std::logic_error);
  AffineCache ac;
  const Matrix w = random_matrix(2, 2, 2);
  const Matrix b = Matrix::Zero(1, 2);
  affine_forward(x, w, b, &ac);
  affine_backward(ac, x);
  CHECK_THROWS_AS(affine_backward(ac, x), std::logic_error);
}

TEST_CASE("relu masks negatives") {
  Matrix x(1, 3);
  x << -1, 0, 2;
  ReluCache c;
  const Matrix y = relu_forward(x, &c);
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 2) == 2.0);
  const Matrix g = relu_backward(c, Matrix::Ones(1, 3));
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 2) == 1.0);
}

TEST_CASE("bce with logits is stable and correct") {
  for (double z : {-800.0, -30.0, -1.0, 0.0, 0.5, 30.0, 800.0}) {
    for (double y : {0.0, 1.0}) {
      const LossGrad lg = bce_with_logits(z, y);
      CHECK(std::isfinite(lg.loss));
      CHECK(lg.grad == doctest::Approx(sigmoid(z) - y));
      if (std::abs(z) < 30) {
        const double p = 1.0 / (1.0 + std::exp(-z));
        CHECK(lg.loss == doctest::Approx(y == 1.0 ? -std::log(p) : -std::log(1.0 - p)));
      }
    }
  }
  CHECK(bce_with_logits(800.0, 0.0).loss == doctest::Approx(800.0));
  CHECK_THROWS_AS(bce_with_logits(std::nan(""), 1.0), NumericError);
  CHECK_THROWS_AS(bce_with_logits(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("dropout is inverted in train mode and the identity in eval mode") {
  const Matrix x = Matrix::Ones(200, 50);
  Rng rng(3);
  DropoutCache cache;
  const Matrix y = dropout_forward(x, 0.2, Mode::kTrain, rng, &cache);
  CHECK(y.mean() == doctest::Approx(1.0).epsilon(0.02));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    CHECK((y.data()[i] == 0.0 || y.data()[i] == doctest::Approx(1.25)));
  }
  const Matrix g = dropout_backward(cache, Matrix::Ones(200, 50));
  CHECK(g == y);
  Rng other(3);
  CHECK(dropout_forward(x, 0.2, Mode::kEval, other, nullptr) == x);
  CHECK(dropout_forward(x, 0.0, Mode::kTrain, other, nullptr) == x);
}
}

TEST_SUITE("normalization") {
TEST_CASE("presets map to the expected flags") {
  CHECK_FALSE(NormConfig::from_preset("none").enabled());
  const NormConfig bn = NormConfig::from_preset("bn");
  CHECK(bn.kind == NormKind::kBatch);
  CHECK(bn.use_affine());
  const NormConfig sln = NormConfig::from_preset("simple_ln");
  CHECK(sln.kind == NormKind::kLayer);
  CHECK(sln.use_mean);
  CHECK(sln.use_var);
  CHECK_FALSE(sln.use_scale);
  CHECK_FALSE(sln.use_shift);
  const NormConfig vo = NormConfig::from_preset("vo_ln");
  CHECK_FALSE(vo.use_mean);
  CHECK(vo.use_var);
  CHECK_FALSE(vo.use_scale);
  CHECK_FALSE(vo.use_shift);
  CHECK(bn.epsilon == 1e-5);
  CHECK(bn.momentum == 0.9);
  for (const char* p : {"none", "bn", "ln", "simple_ln", "vo_ln"}) CHECK(preset_name(NormConfig::from_preset(p)) == p);
  CHECK_THROWS_AS(NormConfig::from_preset("group"), ConfigError);
}

TEST_CASE("disabled affine parameters are not allocated") {
  const NormState s = NormState::init(NormConfig::variance_only_layer_norm(), 5);
  CHECK(s.alpha.size() == 0);
  CHECK(s.beta.size() == 0);
  CHECK(s.running_mean.size() == 0);
  const NormState b = NormState::init(NormConfig::batch_norm(), 5);
  CHECK(b.alpha == Matrix::Ones(1, 5));
  CHECK(b.beta == Matrix::Zero(1, 5));
  CHECK(b.running_var == Matrix::Ones(1, 5));
}

TEST_CASE("forward matches a naive per-group computation") {
  const Matrix x = random_matrix(5, 4, 8);
  for (const NormConfig& cfg : all_norm_configs()) {
    NormState state = NormState::init(cfg, 4);
    if (cfg.use_scale) state.alpha = random_matrix(1, 4, 9);
    if (cfg.use_shift) state.beta = random_matrix(1, 4, 10);
    const Matrix y = norm_forward(x, cfg, state, Mode::kTrain, nullptr);
    for (Eigen::Index r = 0; r < 5; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) {
        std::vector<double> group;
        std::size_t pos;
        if (cfg.kind == NormKind::kBatch) {
          for (Eigen::Index i = 0; i < 5; ++i) group.push_back(x(i, c));
          pos = static_cast<std::size_t>(r);
        } else {
          for (Eigen::Index i = 0; i < 4; ++i) group.push_back(x(r, i));
          pos = static_cast<std::size_t>(c);
        }
        double expect = naive_norm_group(group, cfg, 0, 0, false)[pos];
        if (cfg.use_scale) expect *= state.alpha(0, c);
        if (cfg.use_shift) expect += state.beta(0, c);
        CHECK(y(r, c) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("batch norm eval uses running statistics and mutates nothing") {
  const NormConfig cfg = NormConfig::batch_norm();
  NormState state = NormState::init(cfg, 3);
  state.running_mean << 1, 2, 3;
  state.running_var << 4, 1, 0.25;
  const NormState before = state;
  Matrix x(1, 3);
  x << 3, 2, 4;
  const Matrix y = norm_forward(x, cfg, state, Mode::kEval, nullptr);
  CHECK(y(0, 0) == doctest::Approx(2.0 / std::sqrt(4 + 1e-5)));
  CHECK(y(0, 1) == doctest::Approx(0.0));
  CHECK(y(0, 2) == doctest::Approx(1.0 / std::sqrt(0.25 + 1e-5)));
  CHECK(state.running_mean == before.running_mean);
  CHECK(state.running_var == before.running_var);
}

TEST_CASE("batch norm running statistics follow the EMA with biased variance") {
  const NormConfig cfg = NormConfig::batch_norm();
  NormState state = NormState::init(cfg, 2);
  Matrix x(4, 2);
  x << 1, 0, 2, 0, 3, 0, 6, 4;
  norm_forward(x, cfg, state, Mode::kTrain, nullptr);
  CHECK(state.running_mean(0, 0) == doctest::Approx(0.1 * 3.0));
  CHECK(state.running_mean(0, 1) == doctest::Approx(0.1 * 1.0));
  // biased variance of {1,2,3,6} is 3.5; of {0,0,0,4} is 3
  CHECK(state.running_var(0, 0) == doctest::Approx(0.9 + 0.1 * 3.5));
  CHECK(state.running_var(0, 1) == doctest::Approx(0.9 + 0.1 * 3.0));
}

TEST_CASE("layer norm statistics are per row and keep no running state") {
  const NormConfig cfg = NormConfig::layer_norm();
  NormState state = NormState::init(cfg, 3);
  Matrix x(1, 3);
  x << 1, 2, 3;
  const Matrix y = norm_forward(x, cfg, state, Mode::kTrain, nullptr);
  CHECK(y.sum() == doctest::Approx(0.0));
  CHECK(norm_forward(x, cfg, state, Mode::kEval, nullptr) == y);
}

TEST_CASE("train-mode batch norm rejects a single row") {
  NormState state = NormState::init(NormConfig::batch_norm(), 3);
  CHECK_THROWS_AS(norm_forward(Matrix::Ones(1, 3), NormConfig::batch_norm(), state, Mode::kTrain, nullptr),
                  std::invalid_argument);
}

TEST_CASE("backward matches finite differences for every flag combination") {
  const Matrix x = random_matrix(4, 3, 21);
  const Matrix w = random_matrix(4, 3, 22);
  const double h = 1e-5;
  for (const NormConfig& cfg : all_norm_configs()) {
    CAPTURE(static_cast<int>(cfg.kind));
    CAPTURE(cfg.use_mean);
    CAPTURE(cfg.use_var);
    CAPTURE(cfg.use_scale);
    CAPTURE(cfg.use_shift);
    NormState state = NormState::init(cfg, 3);
    if (cfg.use_scale) state.alpha = random_matrix(1, 3, 23);
    if (cfg.use_shift) state.beta = random_matrix(1, 3, 24);
    NormState work = state;
    NormCache cache;
    norm_forward(x, cfg, work, Mode::kTrain, &cache);
    const NormGrads g = norm_backward(cache, cfg, state, w);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Matrix xp = x, xm = x;
      xp.data()[i] += h;
      xm.data()[i] -= h;
      const double fd = (weighted_norm(xp, cfg, state, w) - weighted_norm(xm, cfg, state, w)) / (2 * h);
      CHECK(g.input.data()[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    if (cfg.use_scale) {
      for (Eigen::Index i = 0; i < 3; ++i) {
        NormState sp = state, sm = state;
        sp.alpha(0, i) += h;
        sm.alpha(0, i) -= h;
        const double fd = (weighted_norm(x, cfg, sp, w) - weighted_norm(x, cfg, sm, w)) / (2 * h);
        CHECK(g.alpha(0, i) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    } else {
      CHECK(g.alpha.size() == 0);
    }
    if (cfg.use_shift) {
      CHECK((g.beta - w.colwise().sum()).norm() < 1e-12);
    } else {
      CHECK(g.beta.size() == 0);
    }
  }
}

TEST_CASE("eval-mode batch norm backward matches finite differences") {
  const NormConfig cfg = NormConfig::batch_norm();
  NormState state = NormState::init(cfg, 3);
  state.running_mean << 0.5, -1, 2;
  state.running_var << 2, 0.5, 1.5;
  const Matrix x = random_matrix(2, 3, 30);
  const Matrix w = random_matrix(2, 3, 31);
  NormCache cache;
  norm_forward_eval(x, cfg, state, &cache);
  const NormGrads g = norm_backward(cache, cfg, state, w);
  for (Eigen::Index c = 0; c < 3; ++c) {
    CHECK(g.input(0, c) == doctest::Approx(w(0, c) / std::sqrt(state.running_var(0, c) + 1e-5)));
  }
}
}

TEST_SUITE("checkpoint") {
TEST_CASE("checkpoints round-trip bit-exactly") {
  const Matrix a = random_matrix(3, 4, 1);
  const Matrix b = random_matrix(1, 1, 2);
  const Matrix empty;
  const std::vector<TensorView> views = {{"a", &a}, {"b", &b}, {"empty", &empty}};
  std::stringstream buf;
  write_checkpoint(buf, views);
  const NamedTensors back = read_checkpoint(buf);
  REQUIRE(back.size() == 3);
  CHECK(back[0].first == "a");
  CHECK(back[0].second == a);
  CHECK(back[1].second == b);
  CHECK(back[2].second.size() == 0);
  std::vector<TensorView> back_views;
  for (const auto& [n, m] : back) back_views.push_back({n, &m});
  CHECK(tensors_hash(back_views) == tensors_hash(views));
}

TEST_CASE("hash changes with any value or name") {
  Matrix a = random_matrix(2, 2, 1);
  const std::vector<TensorView> v1 = {{"a", &a}};
  const std::uint64_t h1 = tensors_hash(v1);
  const std::vector<TensorView> renamed = {{"b", &a}};
  CHECK(tensors_hash(renamed) != h1);
  a(1, 1) = std::nextafter(a(1, 1), 10.0);
  CHECK(tensors_hash(v1) != h1);
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::istringstream junk("not a checkpoint");
  CHECK_THROWS_AS(read_checkpoint(junk), DataError);
}
}
