// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Pretraining and the hourly inference -> updating loop.
//
// For t = 1..T the loop first scores M_{t-1} on D_t test (the online AUC of
// M_{t-1}), then trains on D_t train to obtain M_t, then scores M_t on D_t
// test (current) and on D_{t-1} test (backward). The frozen M_0 is scored on
// D_2..D_T test after the loop.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "streamctr/data_pipeline.h"
#include "streamctr/metrics.h"
#include "streamctr/models.h"
#include "streamctr/optim.h"
#include "streamctr/replay.h"

namespace streamctr::engine {

inline constexpr const char* kEngineVersion = "streamctr-engine/1";

struct ReplayConfig {
  bool enabled = false;
  std::size_t capacity = 50000;
  double mix_ratio = 0.25;
  ReplayPolicy policy = ReplayPolicy::kReservoir;
};

enum class FirstBackward {
  kPretrainTest,  // bAUC at t = 1 scores D_0 test
  kSkip,
};

struct EvalPlan {
  bool online = true;
  bool current = true;
  bool backward = true;
  bool initial = true;
  FirstBackward first_backward = FirstBackward::kPretrainTest;
  metrics::Weighting weighting = metrics::Weighting::kUniform;
};

struct RunConfig {
  models::ModelSpec model;
  optim::OptimSpec optim;
  std::optional<double> stream_learning_rate;  // defaults to optim.learning_rate
  std::size_t batch_size = 1000;
  std::size_t pretrain_epochs = 1;
  std::size_t stream_epochs_per_hour = 1;
  std::uint64_t seed = 0;
  bool reset_optimizer_each_hour = false;
  ReplayConfig replay;
  EvalPlan eval;
  std::size_t eval_chunk = 8192;  // rows per inference call
  bool trace_hashes = true;

  void validate() const;
};

// Scores `samples` in eval mode.
metrics::EvalResult evaluate_model(const models::ModelState& state, const models::ModelSpec& spec,
                                   const std::vector<data::EncodedSample>& samples, std::size_t chunk = 8192);
std::vector<double> predict_probs(const models::ModelState& state, const models::ModelSpec& spec,
                                  const std::vector<data::EncodedSample>& samples, std::size_t chunk = 8192);

struct TrainStats {
  std::size_t samples = 0;  // forward passes in train mode
  std::size_t steps = 0;    // optimizer steps
  std::size_t skipped = 0;  // samples that could not form a valid batch
  double loss_sum = 0.0;    // sum of per-step objective values
};

// One pass over `samples` in a permutation seeded by `shuffle_seed`. A
// trailing batch of one sample is merged into the previous batch when batch
// normalization is active.
TrainStats train_epoch(models::ModelState& state, optim::OptimState& opt, const models::ModelSpec& spec,
                       const optim::OptimSpec& optim, const std::vector<data::EncodedSample>& samples,
                       std::size_t batch_size, std::uint64_t shuffle_seed, Rng& dropout_rng);

struct PretrainResult {
  models::ModelState model;
  optim::OptimState optimizer;
  metrics::EvalResult pretrain_eval;
  std::vector<TrainStats> epochs;
  std::uint64_t model_hash = 0;
};

PretrainResult pretrain(const data::StreamSchedule& schedule, const RunConfig& cfg);

enum class EvalKind { kOnline, kCurrent, kBackward, kInitial, kPretrain };
std::string to_string(EvalKind kind);

// Which model (by timestamp and checkpoint hash) scored which test set.
struct EvalTrace {
  EvalKind kind;
  std::size_t model_t;  // M_t that was scored
  std::size_t test_t;   // test set index (0 = pretraining test)
  std::uint64_t model_hash;
};

struct HourTrace {
  std::size_t t = 0;
  std::uint64_t hash_before = 0;
  std::uint64_t hash_after = 0;
  std::size_t hour_train = 0;
  std::size_t replayed = 0;
  TrainStats train;
};

struct ReplayStats {
  std::size_t capacity = 0;
  std::size_t stored = 0;
  std::size_t seen = 0;
  std::size_t drawn = 0;
};

struct StreamResult {
  metrics::MetricSeries series;
  models::ModelState final_model;
  std::vector<HourTrace> hours;
  std::vector<EvalTrace> evals;
  ReplayStats replay;
  std::uint64_t m0_hash_before = 0;
  std::uint64_t m0_hash_after = 0;
};

// Called after M_t is produced, before its evaluations.
using HourObserver = std::function<void(std::size_t t, const models::ModelState&)>;

StreamResult stream_run(const PretrainResult& pretrained, const data::StreamSchedule& schedule,
                        const RunConfig& cfg, const HourObserver& observer = {});

struct EpochSweepRecord {
  std::size_t t = 0;
  std::vector<double> online_curve;   // per-epoch AUC on D_{t+1} test (empty at t = T)
  std::vector<double> current_curve;  // per-epoch AUC on D_t test
  std::optional<double> online_pd;
  std::optional<std::size_t> online_os;
  std::optional<double> current_pd;
  std::optional<std::size_t> current_os;
  std::uint64_t last_snapshot_hash = 0;
  std::uint64_t carried_hash = 0;
};

// Trains `epochs` passes per hour and scores a snapshot after each epoch at
// every stride-th timestamp (t = 1, 1 + stride, ...). The last epoch's model
// is carried forward.
std::vector<EpochSweepRecord> epoch_sweep(const PretrainResult& pretrained, const data::StreamSchedule& schedule,
                                          const RunConfig& cfg, std::size_t epochs, std::size_t stride = 1);

}  // namespace streamctr::engine
