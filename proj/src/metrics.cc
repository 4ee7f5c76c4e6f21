// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "streamctr/errors.h"

namespace streamctr::metrics {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i+1 .. j share their mean
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

void check_labels(std::span<const double> labels) {
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("labels must be 0 or 1");
  }
}

}  // namespace

std::optional<double> auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: scores and labels differ in length");
  check_labels(labels);
  const std::vector<double> ranks = average_ranks(scores);
  double rank_sum = 0.0;
  double pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1.0) {
      rank_sum += ranks[i];
      pos += 1.0;
    }
  }
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double logloss(std::span<const double> probs, std::span<const double> labels) {
  if (probs.size() != labels.size()) throw std::invalid_argument("logloss: probs and labels differ in length");
  if (probs.empty()) throw std::invalid_argument("logloss of an empty set");
  check_labels(labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClip, 1.0 - kProbClip);
    total -= labels[i] == 1.0 ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(probs.size());
}

EvalResult evaluate(std::span<const double> probs, std::span<const double> labels) {
  EvalResult r;
  for (double y : labels) (y == 1.0 ? r.n_pos : r.n_neg) += 1;
  r.auc = auc(probs, labels);
  if (!probs.empty()) r.logloss = logloss(probs, labels);
  return r;
}

std::string to_string(Weighting w) { return w == Weighting::kUniform ? "uniform" : "test_size"; }

Weighting weighting_from_string(const std::string& name) {
  if (name == "uniform") return Weighting::kUniform;
  if (name == "test_size") return Weighting::kTestSize;
  throw ConfigError("unknown averaging weighting '" + name + "' (expected uniform|test_size)");
}

namespace {

template <typename Pick>
Aggregate aggregate(const std::vector<TimestampRecord>& records, std::size_t first, std::size_t last,
                    Weighting weighting, Pick pick) {
  Aggregate agg;
  double sum = 0.0;
  double weight = 0.0;
  for (const TimestampRecord& r : records) {
    if (r.t < first || r.t > last) continue;
    const std::optional<EvalResult>& e = pick(r);
    if (!e.has_value() || !e->auc.has_value()) {
      agg.skipped.push_back(r.t);
      continue;
    }
    const double w = weighting == Weighting::kUniform ? 1.0 : static_cast<double>(e->size());
    sum += w * *e->auc;
    weight += w;
    agg.terms += 1;
  }
  if (agg.terms > 0) agg.value = sum / weight;
  return agg;
}

}  // namespace

void recompute_aggregates(MetricSeries& s) {
  const std::size_t T = s.horizon;
  s.oauc = aggregate(s.records, 1, T - 1, s.weighting, [](const TimestampRecord& r) -> const auto& { return r.online; });
  s.cauc = aggregate(s.records, 1, T, s.weighting, [](const TimestampRecord& r) -> const auto& { return r.current; });
  s.bauc = aggregate(s.records, 1, T, s.weighting, [](const TimestampRecord& r) -> const auto& { return r.backward; });
  s.iauc = aggregate(s.records, 2, T, s.weighting, [](const TimestampRecord& r) -> const auto& { return r.initial; });
  s.pauc = s.pretrain.has_value() ? s.pretrain->auc : std::nullopt;
}

MetricSeries assemble_series(std::size_t horizon, std::span<const std::optional<EvalResult>> online,
                             std::span<const std::optional<EvalResult>> current,
                             std::span<const std::optional<EvalResult>> backward,
                             std::span<const std::optional<EvalResult>> initial,
                             std::optional<EvalResult> pretrain, Weighting weighting) {
  if (horizon < 2) throw std::invalid_argument("assemble_series needs T >= 2");
  auto expect = [](std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
      throw std::invalid_argument(std::string("assemble_series: ") + what + " has " + std::to_string(got) +
                                  " entries, expected " + std::to_string(want));
    }
  };
  expect(online.size(), horizon - 1, "online");
  expect(current.size(), horizon, "current");
  expect(backward.size(), horizon, "backward");
  if (!initial.empty()) expect(initial.size(), horizon - 1, "initial");

  MetricSeries s;
  s.horizon = horizon;
  s.weighting = weighting;
  s.pretrain = std::move(pretrain);
  s.records.resize(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    TimestampRecord& r = s.records[t - 1];
    r.t = t;
    if (t <= horizon - 1) r.online = online[t - 1];
    r.current = current[t - 1];
    r.backward = backward[t - 1];
    if (t >= 2 && !initial.empty()) r.initial = initial[t - 2];
  }
  recompute_aggregates(s);
  return s;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols_slope: lengths differ");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

double perf_drop(std::span<const double> curve) {
  if (curve.empty()) throw std::invalid_argument("perf_drop of an empty curve");
  const double best = *std::max_element(curve.begin(), curve.end());
  return 100.0 * (best - curve.back()) / best;
}

std::size_t optimal_step(std::span<const double> curve) {
  if (curve.empty()) throw std::invalid_argument("optimal_step of an empty curve");
  return static_cast<std::size_t>(std::max_element(curve.begin(), curve.end()) - curve.begin()) + 1;
}

namespace {

std::vector<data::EncodedSample> all_samples(const data::StreamSchedule& schedule) {
  std::vector<data::EncodedSample> out = schedule.pretrain_train;
  out.insert(out.end(), schedule.pretrain_test.begin(), schedule.pretrain_test.end());
  for (const data::HourBucket& b : schedule.buckets) {
    out.insert(out.end(), b.train.begin(), b.train.end());
    out.insert(out.end(), b.test.begin(), b.test.end());
  }
  return out;
}

std::size_t hour_of(const data::EncodedSample& s, std::size_t total_hours) {
  if (s.hour_index < 0 || static_cast<std::size_t>(s.hour_index) >= total_hours) {
    throw std::out_of_range("sample hour " + std::to_string(s.hour_index) + " outside the dataset");
  }
  return static_cast<std::size_t>(s.hour_index);
}

}  // namespace

std::vector<std::optional<double>> positive_ratio_per_hour(std::span<const data::EncodedSample> samples,
                                                           std::size_t total_hours) {
  std::vector<std::size_t> pos(total_hours, 0);
  std::vector<std::size_t> count(total_hours, 0);
  for (const data::EncodedSample& s : samples) {
    const std::size_t h = hour_of(s, total_hours);
    count[h] += 1;
    pos[h] += s.label == 1 ? 1 : 0;
  }
  std::vector<std::optional<double>> out(total_hours);
  for (std::size_t h = 0; h < total_hours; ++h) {
    if (count[h] > 0) out[h] = static_cast<double>(pos[h]) / static_cast<double>(count[h]);
  }
  return out;
}

std::vector<std::optional<double>> positive_ratio_per_hour(const data::StreamSchedule& schedule) {
  const auto samples = all_samples(schedule);
  return positive_ratio_per_hour(samples, static_cast<std::size_t>(schedule.total_hours));
}

std::vector<std::vector<bool>> feature_presence(std::span<const data::EncodedSample> samples,
                                                std::size_t total_hours, std::size_t field,
                                                std::span<const std::int32_t> tokens) {
  std::vector<std::vector<bool>> out(tokens.size(), std::vector<bool>(total_hours, false));
  for (const data::EncodedSample& s : samples) {
    if (field >= s.field_indices.size()) throw std::out_of_range("feature_presence: field out of range");
    const std::size_t h = hour_of(s, total_hours);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (s.field_indices[field] == tokens[i]) out[i][h] = true;
    }
  }
  return out;
}

std::vector<std::vector<bool>> feature_presence(const data::StreamSchedule& schedule, std::size_t field,
                                                std::span<const std::int32_t> tokens) {
  const auto samples = all_samples(schedule);
  return feature_presence(samples, static_cast<std::size_t>(schedule.total_hours), field, tokens);
}

double relative_improvement(double baseline, double value) {
  if (baseline == 0.0) throw std::invalid_argument("relative_improvement with a zero baseline");
  return 100.0 * (value - baseline) / baseline;
}

}  // namespace streamctr::metrics
