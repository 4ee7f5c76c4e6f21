// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/engine.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "streamctr/errors.h"
#include "streamctr/layers.h"

namespace streamctr::engine {

void RunConfig::validate() const {
  model.validate();
  optim.validate();
  if (stream_learning_rate.has_value() && !(*stream_learning_rate > 0.0)) {
    throw ConfigError("stream_learning_rate must be > 0");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (stream_epochs_per_hour < 1) throw ConfigError("stream_epochs_per_hour must be >= 1");
  if (!(replay.mix_ratio >= 0.0)) throw ConfigError("replay.mix_ratio must be >= 0");
  if (eval_chunk < 1) throw ConfigError("eval_chunk must be >= 1");
}

std::string to_string(EvalKind kind) {
  switch (kind) {
    case EvalKind::kOnline: return "online";
    case EvalKind::kCurrent: return "current";
    case EvalKind::kBackward: return "backward";
    case EvalKind::kInitial: return "initial";
    case EvalKind::kPretrain: return "pretrain";
  }
  return "unknown";
}

std::vector<double> predict_probs(const models::ModelState& state, const models::ModelSpec& spec,
                                  const std::vector<data::EncodedSample>& samples, std::size_t chunk) {
  std::vector<double> probs(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const std::size_t end = std::min(samples.size(), start + chunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const models::Batch batch = models::make_batch(samples, idx, state.field_offsets);
    const nn::Vector z = models::predict_logits(state, spec, batch);
    for (std::size_t i = start; i < end; ++i) probs[i] = nn::sigmoid(z[static_cast<Eigen::Index>(i - start)]);
  }
  return probs;
}

metrics::EvalResult evaluate_model(const models::ModelState& state, const models::ModelSpec& spec,
                                   const std::vector<data::EncodedSample>& samples, std::size_t chunk) {
  const std::vector<double> probs = predict_probs(state, spec, samples, chunk);
  std::vector<double> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
  return metrics::evaluate(probs, labels);
}

namespace {

bool uses_batch_norm(const models::ModelSpec& spec) {
  return spec.has_mlp() &&
         (spec.norm_embed.kind == nn::NormKind::kBatch || spec.norm_mlp.kind == nn::NormKind::kBatch);
}

}  // namespace

TrainStats train_epoch(models::ModelState& state, optim::OptimState& opt, const models::ModelSpec& spec,
                       const optim::OptimSpec& optim, const std::vector<data::EncodedSample>& samples,
                       std::size_t batch_size, std::uint64_t shuffle_seed, Rng& dropout_rng) {
  TrainStats stats;
  if (samples.empty()) return stats;
  std::vector<std::vector<std::size_t>> order = data::batches(samples.size(), batch_size, shuffle_seed);
  if (uses_batch_norm(spec) && order.back().size() == 1) {
    if (order.size() == 1) {
      stats.skipped = 1;
      return stats;
    }
    order[order.size() - 2].push_back(order.back().front());
    order.pop_back();
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    try {
      const models::Batch batch = models::make_batch(samples, order[i], state.field_offsets);
      models::ForwardOutput fo = models::forward(state, spec, batch, nn::Mode::kTrain, &dropout_rng);
      const models::Gradients grads = models::backward(state, spec, fo.cache, batch.labels);
      optim::step(opt, state, grads, optim);
      stats.samples += batch.size;
      stats.steps += 1;
      stats.loss_sum += grads.loss;
    } catch (const NumericError& e) {
      throw NumericError("batch " + std::to_string(i) + ": " + e.what());
    }
  }
  return stats;
}

PretrainResult pretrain(const data::StreamSchedule& schedule, const RunConfig& cfg) {
  cfg.validate();
  if (schedule.pretrain_train.empty() && cfg.pretrain_epochs > 0) {
    throw DataError("pretraining block has no training samples");
  }
  PretrainResult r;
  r.model = models::init_model(cfg.model, schedule.field_sizes, derive_seed(cfg.seed, {1}));
  Rng dropout_rng = derive_rng(cfg.seed, {3});
  for (std::size_t e = 0; e < cfg.pretrain_epochs; ++e) {
    try {
      r.epochs.push_back(train_epoch(r.model, r.optimizer, cfg.model, cfg.optim, schedule.pretrain_train,
                                     cfg.batch_size, derive_seed(cfg.seed, {2, e}), dropout_rng));
    } catch (const NumericError& ex) {
      throw NumericError("pretrain epoch " + std::to_string(e + 1) + ", " + ex.what());
    }
  }
  r.pretrain_eval = evaluate_model(r.model, cfg.model, schedule.pretrain_test, cfg.eval_chunk);
  r.model_hash = r.model.hash();
  return r;
}

namespace {

class Tracer {
 public:
  explicit Tracer(bool enabled) : enabled_(enabled) {}
  std::uint64_t hash(const models::ModelState& m) const { return enabled_ ? m.hash() : 0; }

 private:
  bool enabled_;
};

std::optional<double> curve_value(const metrics::EvalResult& e) { return e.auc; }

}  // namespace

StreamResult stream_run(const PretrainResult& pretrained, const data::StreamSchedule& schedule,
                        const RunConfig& cfg, const HourObserver& observer) {
  cfg.validate();
  const auto T = static_cast<std::size_t>(schedule.horizon());
  if (T < 2) throw DataError("streaming needs at least 2 hours, schedule has " + std::to_string(T));
  const Tracer tracer(cfg.trace_hashes);

  StreamResult result;
  result.m0_hash_before = pretrained.model.hash();
  models::ModelState m = pretrained.model;
  optim::OptimState opt = pretrained.optimizer;
  optim::OptimSpec stream_optim = cfg.optim;
  if (cfg.stream_learning_rate.has_value()) stream_optim.learning_rate = *cfg.stream_learning_rate;

  ExemplarBuffer buffer(cfg.replay.enabled ? cfg.replay.capacity : 0, cfg.replay.policy,
                        derive_seed(cfg.seed, {5}));
  if (cfg.replay.enabled) buffer.update(schedule.pretrain_train);
  Rng replay_rng = derive_rng(cfg.seed, {6});
  Rng dropout_rng = derive_rng(cfg.seed, {7});

  std::vector<std::optional<metrics::EvalResult>> online(T - 1);
  std::vector<std::optional<metrics::EvalResult>> current(T);
  std::vector<std::optional<metrics::EvalResult>> backward(T);
  std::vector<std::optional<metrics::EvalResult>> initial;

  auto score = [&](const models::ModelState& model, std::size_t test_t, EvalKind kind, std::size_t model_t,
                   std::uint64_t hash) {
    result.evals.push_back({kind, model_t, test_t, hash});
    return evaluate_model(model, cfg.model, schedule.test_set(static_cast<std::int32_t>(test_t)), cfg.eval_chunk);
  };

  for (std::size_t t = 1; t <= T; ++t) {
    HourTrace hour;
    hour.t = t;
    hour.hash_before = tracer.hash(m);
    if (t >= 2 && cfg.eval.online) online[t - 2] = score(m, t, EvalKind::kOnline, t - 1, hour.hash_before);

    const auto& hour_train = schedule.train_set(static_cast<std::int32_t>(t));
    hour.hour_train = hour_train.size();
    std::vector<data::EncodedSample> mixed;
    const std::vector<data::EncodedSample>* train = &hour_train;
    if (cfg.replay.enabled) {
      mixed = replay_mix(hour_train, buffer, cfg.replay.mix_ratio, replay_rng);
      hour.replayed = mixed.size() - hour_train.size();
      result.replay.drawn += hour.replayed;
      train = &mixed;
    }
    if (cfg.reset_optimizer_each_hour) opt.reset();
    for (std::size_t e = 0; e < cfg.stream_epochs_per_hour; ++e) {
      try {
        const TrainStats s = train_epoch(m, opt, cfg.model, stream_optim, *train, cfg.batch_size,
                                         derive_seed(cfg.seed, {4, t, e}), dropout_rng);
        hour.train.samples += s.samples;
        hour.train.steps += s.steps;
        hour.train.skipped += s.skipped;
        hour.train.loss_sum += s.loss_sum;
      } catch (const NumericError& ex) {
        throw NumericError("hour " + std::to_string(t) + ", epoch " + std::to_string(e + 1) + ", " + ex.what());
      }
    }
    hour.hash_after = tracer.hash(m);
    if (observer) observer(t, m);

    if (cfg.eval.current) current[t - 1] = score(m, t, EvalKind::kCurrent, t, hour.hash_after);
    if (cfg.eval.backward && !(t == 1 && cfg.eval.first_backward == FirstBackward::kSkip)) {
      backward[t - 1] = score(m, t - 1, EvalKind::kBackward, t, hour.hash_after);
    }
    result.hours.push_back(hour);
  }

  if (cfg.eval.initial) {
    const std::uint64_t h0 = tracer.hash(pretrained.model);
    for (std::size_t t = 2; t <= T; ++t) initial.push_back(score(pretrained.model, t, EvalKind::kInitial, 0, h0));
  }
  result.m0_hash_after = pretrained.model.hash();
  result.series = metrics::assemble_series(T, online, current, backward, initial, pretrained.pretrain_eval,
                                           cfg.eval.weighting);
  result.replay.capacity = buffer.capacity();
  result.replay.stored = buffer.items().size();
  result.replay.seen = buffer.seen();
  result.final_model = std::move(m);
  return result;
}

std::vector<EpochSweepRecord> epoch_sweep(const PretrainResult& pretrained, const data::StreamSchedule& schedule,
                                          const RunConfig& cfg, std::size_t epochs, std::size_t stride) {
  cfg.validate();
  if (epochs < 1) throw ConfigError("epoch sweep needs >= 1 epoch");
  if (stride < 1) throw ConfigError("epoch sweep stride must be >= 1");
  const auto T = static_cast<std::size_t>(schedule.horizon());
  models::ModelState m = pretrained.model;
  optim::OptimState opt = pretrained.optimizer;
  optim::OptimSpec stream_optim = cfg.optim;
  if (cfg.stream_learning_rate.has_value()) stream_optim.learning_rate = *cfg.stream_learning_rate;
  ExemplarBuffer buffer(cfg.replay.enabled ? cfg.replay.capacity : 0, cfg.replay.policy,
                        derive_seed(cfg.seed, {5}));
  if (cfg.replay.enabled) buffer.update(schedule.pretrain_train);
  Rng replay_rng = derive_rng(cfg.seed, {6});
  Rng dropout_rng = derive_rng(cfg.seed, {7});

  std::vector<EpochSweepRecord> records;
  for (std::size_t t = 1; t <= T; ++t) {
    const auto& hour_train = schedule.train_set(static_cast<std::int32_t>(t));
    std::vector<data::EncodedSample> mixed;
    const std::vector<data::EncodedSample>* train = &hour_train;
    if (cfg.replay.enabled) {
      mixed = replay_mix(hour_train, buffer, cfg.replay.mix_ratio, replay_rng);
      train = &mixed;
    }
    if (cfg.reset_optimizer_each_hour) opt.reset();
    const bool sampled = (t - 1) % stride == 0;
    EpochSweepRecord rec;
    rec.t = t;
    bool online_defined = t < T;
    bool current_defined = true;
    for (std::size_t e = 0; e < epochs; ++e) {
      train_epoch(m, opt, cfg.model, stream_optim, *train, cfg.batch_size, derive_seed(cfg.seed, {4, t, e}),
                  dropout_rng);
      if (!sampled) continue;
      if (current_defined) {
        const auto v = curve_value(
            evaluate_model(m, cfg.model, schedule.test_set(static_cast<std::int32_t>(t)), cfg.eval_chunk));
        if (v.has_value()) {
          rec.current_curve.push_back(*v);
        } else {
          current_defined = false;
        }
      }
      if (online_defined) {
        const auto v = curve_value(
            evaluate_model(m, cfg.model, schedule.test_set(static_cast<std::int32_t>(t + 1)), cfg.eval_chunk));
        if (v.has_value()) {
          rec.online_curve.push_back(*v);
        } else {
          online_defined = false;
        }
      }
      if (e + 1 == epochs) rec.last_snapshot_hash = m.hash();
    }
    if (!sampled) continue;
    if (!current_defined) rec.current_curve.clear();
    if (!online_defined) rec.online_curve.clear();
    if (!rec.current_curve.empty()) {
      rec.current_pd = metrics::perf_drop(rec.current_curve);
      rec.current_os = metrics::optimal_step(rec.current_curve);
    }
    if (!rec.online_curve.empty()) {
      rec.online_pd = metrics::perf_drop(rec.online_curve);
      rec.online_os = metrics::optimal_step(rec.online_curve);
    }
    rec.carried_hash = m.hash();
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace streamctr::engine
