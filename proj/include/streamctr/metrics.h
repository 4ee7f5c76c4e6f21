// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation primitives and the streaming aggregates. Undefined values are
// std::nullopt, never NaN.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamctr/data_pipeline.h"

namespace streamctr::metrics {

inline constexpr double kProbClip = 1e-7;

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Mann-Whitney AUC, (R+ - P(P+1)/2) / (P N). nullopt unless both classes occur.
std::optional<double> auc(std::span<const double> scores, std::span<const double> labels);

// Mean negative log-likelihood with probabilities clipped to [1e-7, 1 - 1e-7].
double logloss(std::span<const double> probs, std::span<const double> labels);

struct EvalResult {
  std::optional<double> auc;
  double logloss = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  std::size_t size() const { return n_pos + n_neg; }
};

EvalResult evaluate(std::span<const double> probs, std::span<const double> labels);

enum class Weighting { kUniform, kTestSize };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& name);

struct Aggregate {
  std::optional<double> value;
  std::size_t terms = 0;           // averaged entries
  std::vector<std::size_t> skipped;  // timestamps excluded from the mean
};

// One entry per streaming timestamp t = 1..T. An absent EvalResult means the
// evaluation was not scheduled (e.g. oAUC at t = T).
struct TimestampRecord {
  std::size_t t = 0;
  std::optional<EvalResult> online;    // M_t on D_{t+1} test
  std::optional<EvalResult> current;   // M_t on D_t test
  std::optional<EvalResult> backward;  // M_t on D_{t-1} test
  std::optional<EvalResult> initial;   // M_0 on D_t test
};

struct MetricSeries {
  std::size_t horizon = 0;
  Weighting weighting = Weighting::kUniform;
  std::vector<TimestampRecord> records;
  std::optional<EvalResult> pretrain;
  Aggregate oauc;
  Aggregate cauc;
  Aggregate bauc;
  Aggregate iauc;
  std::optional<double> pauc;
};

// online: T-1 entries for t = 1..T-1; current/backward: T entries for
// t = 1..T; initial: T-1 entries for t = 2..T (or empty when iAUC is off).
// Throws std::invalid_argument on any cardinality mismatch or T < 2.
MetricSeries assemble_series(std::size_t horizon, std::span<const std::optional<EvalResult>> online,
                             std::span<const std::optional<EvalResult>> current,
                             std::span<const std::optional<EvalResult>> backward,
                             std::span<const std::optional<EvalResult>> initial,
                             std::optional<EvalResult> pretrain,
                             Weighting weighting = Weighting::kUniform);

// Recomputes every aggregate from series.records.
void recompute_aggregates(MetricSeries& series);

std::optional<double> spearman(std::span<const double> x, std::span<const double> y);
std::optional<double> ols_slope(std::span<const double> x, std::span<const double> y);

// 100 * (max - last) / max. Throws std::invalid_argument on an empty curve.
double perf_drop(std::span<const double> curve);
// 1-based argmax, earliest on ties. Throws std::invalid_argument on an empty curve.
std::size_t optimal_step(std::span<const double> curve);

// Share of positives per hour index in [0, total_hours); nullopt for empty hours.
std::vector<std::optional<double>> positive_ratio_per_hour(std::span<const data::EncodedSample> samples,
                                                           std::size_t total_hours);
std::vector<std::optional<double>> positive_ratio_per_hour(const data::StreamSchedule& schedule);

// presence[i][h] is true when tokens[i] occurs in `field` during hour h.
std::vector<std::vector<bool>> feature_presence(std::span<const data::EncodedSample> samples,
                                                std::size_t total_hours, std::size_t field,
                                                std::span<const std::int32_t> tokens);
std::vector<std::vector<bool>> feature_presence(const data::StreamSchedule& schedule, std::size_t field,
                                                std::span<const std::int32_t> tokens);

// 100 * (value - baseline) / baseline.
double relative_improvement(double baseline, double value);

}  // namespace streamctr::metrics
