// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/metrics.h"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "../oracles.h"

using namespace streamctr;
using metrics::EvalResult;

TEST_SUITE("metrics") {
TEST_CASE("average ranks share tied positions") {
  const std::vector<double> v = {3.0, 1.0, 3.0, 2.0, 3.0};
  const auto r = metrics::average_ranks(v);
  CHECK(r == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
}

TEST_CASE("auc on hand examples") {
  CHECK(*metrics::auc(std::vector<double>{0.1, 0.9}, std::vector<double>{0, 1}) == 1.0);
  CHECK(*metrics::auc(std::vector<double>{0.9, 0.1}, std::vector<double>{0, 1}) == 0.0);
  CHECK(*metrics::auc(std::vector<double>{0.5, 0.5}, std::vector<double>{0, 1}) == 0.5);
  // 2 positives, 2 negatives: pairs (0.8>0.3) (0.8>0.6) (0.4>0.3) (0.4<0.6) -> 3/4
  CHECK(*metrics::auc(std::vector<double>{0.8, 0.4, 0.3, 0.6}, std::vector<double>{1, 1, 0, 0}) == doctest::Approx(0.75));
}

TEST_CASE("auc is undefined for a single class or empty input") {
  CHECK_FALSE(metrics::auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 1}).has_value());
  CHECK_FALSE(metrics::auc(std::vector<double>{0.1, 0.2}, std::vector<double>{0, 0}).has_value());
  CHECK_FALSE(metrics::auc(std::vector<double>{}, std::vector<double>{}).has_value());
}

TEST_CASE("auc matches the pairwise oracle with heavy ties") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 7) / 7.0;
      y[i] = static_cast<double>(rng() % 2);
    }
    const auto a = metrics::auc(s, y);
    const auto o = oracle::pairwise_auc(s, y);
    REQUIRE(a.has_value() == o.has_value());
    if (a) CHECK(std::abs(*a - *o) < 1e-12);
  }
}

TEST_CASE("auc is invariant to strictly increasing transforms") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  std::vector<double> s(300), t(300), y(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = g(rng);
    t[i] = std::exp(3.0 * s[i]) + 2.0;
    y[i] = rng() % 3 == 0 ? 1.0 : 0.0;
  }
  CHECK(*metrics::auc(s, y) == doctest::Approx(*metrics::auc(t, y)).epsilon(1e-14));
}

TEST_CASE("auc of negated scores is one minus auc") {
  std::mt19937_64 rng(12);
  std::vector<double> s(100), neg(100), y(100);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = static_cast<double>(rng() % 10);
    neg[i] = -s[i];
    y[i] = static_cast<double>(rng() % 2);
  }
  CHECK(*metrics::auc(s, y) + *metrics::auc(neg, y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("logloss clips and matches the naive oracle") {
  const std::vector<double> p = {0.0, 1.0, 0.5, 0.9};
  const std::vector<double> y = {0, 1, 1, 0};
  CHECK(metrics::logloss(p, y) == doctest::Approx(oracle::naive_logloss(p, y)).epsilon(1e-12));
  // Confident mistakes are capped by the clip.
  const double worst = metrics::logloss(std::vector<double>{0.0}, std::vector<double>{1});
  CHECK(worst == doctest::Approx(-std::log(1e-7)));
}

TEST_CASE("evaluate counts classes") {
  const EvalResult e = metrics::evaluate(std::vector<double>{0.2, 0.7, 0.4}, std::vector<double>{0, 1, 1});
  CHECK(e.n_pos == 2);
  CHECK(e.n_neg == 1);
  CHECK(e.size() == 3);
  CHECK(*e.auc == 1.0);
}

EvalResult with_auc(std::optional<double> a, std::size_t n = 10) {
  EvalResult e;
  e.auc = a;
  e.n_pos = n / 2;
  e.n_neg = n - n / 2;
  return e;
}

TEST_CASE("assemble_series uses the index ranges of the protocol") {
  const std::size_t T = 4;
  std::vector<std::optional<EvalResult>> online = {with_auc(0.6), with_auc(0.7), with_auc(0.8)};
  std::vector<std::optional<EvalResult>> current = {with_auc(0.9), with_auc(0.9), with_auc(0.9), with_auc(0.9)};
  std::vector<std::optional<EvalResult>> backward = {with_auc(0.5), with_auc(0.6), with_auc(0.7), with_auc(0.8)};
  std::vector<std::optional<EvalResult>> initial = {with_auc(0.55), with_auc(0.65), with_auc(0.75)};
  const auto s = metrics::assemble_series(T, online, current, backward, initial, with_auc(0.77));
  CHECK(s.oauc.terms == 3);
  CHECK(*s.oauc.value == doctest::Approx(0.7));
  CHECK(s.cauc.terms == 4);
  CHECK(s.bauc.terms == 4);
  CHECK(*s.bauc.value == doctest::Approx(0.65));
  CHECK(s.iauc.terms == 3);
  CHECK(*s.iauc.value == doctest::Approx(0.65));
  CHECK(*s.pauc == 0.77);
  CHECK_FALSE(s.records[T - 1].online.has_value());
  CHECK_FALSE(s.records[0].initial.has_value());
}

TEST_CASE("undefined terms shrink the divisor and are reported") {
  std::vector<std::optional<EvalResult>> online = {with_auc(0.6), with_auc(std::nullopt)};
  std::vector<std::optional<EvalResult>> three = {with_auc(0.5), with_auc(0.7), with_auc(std::nullopt)};
  const auto s = metrics::assemble_series(3, online, three, three, {}, std::nullopt);
  CHECK(s.oauc.terms == 1);
  CHECK(*s.oauc.value == doctest::Approx(0.6));
  CHECK(s.oauc.skipped == std::vector<std::size_t>{2});
  CHECK(s.cauc.terms == 2);
  CHECK(*s.cauc.value == doctest::Approx(0.6));
  CHECK(s.iauc.terms == 0);
  CHECK_FALSE(s.iauc.value.has_value());
  CHECK_FALSE(s.pauc.has_value());
}

TEST_CASE("test-size weighting weights by test set size") {
  std::vector<std::optional<EvalResult>> online = {with_auc(0.6, 10), with_auc(0.9, 30)};
  std::vector<std::optional<EvalResult>> three = {with_auc(0.5), with_auc(0.5), with_auc(0.5)};
  const auto s = metrics::assemble_series(3, online, three, three, {}, std::nullopt, metrics::Weighting::kTestSize);
  CHECK(*s.oauc.value == doctest::Approx((0.6 * 10 + 0.9 * 30) / 40.0));
}

TEST_CASE("assemble_series rejects cardinality mismatches") {
  std::vector<std::optional<EvalResult>> two = {with_auc(0.5), with_auc(0.5)};
  std::vector<std::optional<EvalResult>> three = {with_auc(0.5), with_auc(0.5), with_auc(0.5)};
  CHECK_THROWS_AS(metrics::assemble_series(3, three, three, three, {}, std::nullopt), std::invalid_argument);
  CHECK_THROWS_AS(metrics::assemble_series(3, two, two, three, {}, std::nullopt), std::invalid_argument);
  CHECK_THROWS_AS(metrics::assemble_series(1, {}, std::vector<std::optional<EvalResult>>{with_auc(0.5)},
                                           std::vector<std::optional<EvalResult>>{with_auc(0.5)}, {}, std::nullopt),
                  std::invalid_argument);
}

TEST_CASE("recompute_aggregates reproduces assembled aggregates") {
  std::vector<std::optional<EvalResult>> online = {with_auc(0.61), with_auc(0.72)};
  std::vector<std::optional<EvalResult>> three = {with_auc(0.5), with_auc(0.66), with_auc(0.71)};
  auto s = metrics::assemble_series(3, online, three, three, online, std::nullopt);
  const auto copy = s;
  s.oauc = {};
  s.iauc = {};
  metrics::recompute_aggregates(s);
  CHECK(*s.oauc.value == *copy.oauc.value);
  CHECK(*s.iauc.value == *copy.iauc.value);
}

TEST_CASE("spearman and ols slope") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2, 4, 6, 8, 10};
  CHECK(*metrics::spearman(x, y) == doctest::Approx(1.0));
  CHECK(*metrics::ols_slope(x, y) == doctest::Approx(2.0));
  const std::vector<double> r = {5, 4, 3, 2, 1};
  CHECK(*metrics::spearman(x, r) == doctest::Approx(-1.0));
  const std::vector<double> flat = {1, 1, 1, 1, 1};
  CHECK_FALSE(metrics::spearman(flat, y).has_value());
  CHECK_FALSE(metrics::ols_slope(flat, y).has_value());
  CHECK_FALSE(metrics::spearman(std::vector<double>{1}, std::vector<double>{1}).has_value());
}

TEST_CASE("perf_drop and optimal_step") {
  const std::vector<double> curve = {0.70, 0.75, 0.75, 0.72};
  CHECK(metrics::optimal_step(curve) == 2);
  CHECK(metrics::perf_drop(curve) == doctest::Approx(100.0 * 0.03 / 0.75));
  const std::vector<double> rising = {0.6, 0.7};
  CHECK(metrics::perf_drop(rising) == 0.0);
  CHECK(metrics::optimal_step(rising) == 2);
  CHECK_THROWS_AS(metrics::perf_drop(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("relative improvement") {
  CHECK(metrics::relative_improvement(0.75, 0.78) == doctest::Approx(4.0));
  CHECK_THROWS(metrics::relative_improvement(0.0, 0.5));
}

TEST_CASE("positive ratio and feature presence per hour") {
  std::vector<data::EncodedSample> s = {{{1}, 1, 0}, {{2}, 0, 0}, {{1}, 0, 2}};
  const auto pr = metrics::positive_ratio_per_hour(s, 3);
  CHECK(*pr[0] == 0.5);
  CHECK_FALSE(pr[1].has_value());
  CHECK(*pr[2] == 0.0);
  const std::vector<std::int32_t> tokens = {1, 2};
  const auto fp = metrics::feature_presence(s, 3, 0, tokens);
  CHECK(fp[0] == std::vector<bool>{true, false, true});
  CHECK(fp[1] == std::vector<bool>{true, false, false});
}
}
