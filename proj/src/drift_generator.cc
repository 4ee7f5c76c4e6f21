// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/drift_generator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "streamctr/errors.h"
#include "streamctr/layers.h"
#include "streamctr/metrics.h"
#include "streamctr/random.h"

namespace streamctr::engine {

std::int32_t DriftGeneratorSpec::cardinality(std::size_t field) const {
  return cardinalities.empty() ? default_cardinality : cardinalities[field];
}

void DriftGeneratorSpec::validate() const {
  if (num_fields < 1) throw ConfigError("generator.num_fields must be >= 1");
  if (!cardinalities.empty() && cardinalities.size() != num_fields) {
    throw ConfigError("generator.cardinalities must list one entry per field");
  }
  for (std::size_t f = 0; f < num_fields; ++f) {
    if (cardinality(f) < 1) throw ConfigError("generator cardinality must be >= 1 (field " + std::to_string(f) + ")");
  }
  if (total_hours < 1) throw ConfigError("generator.total_hours must be >= 1");
  if (samples_per_hour < 1) throw ConfigError("generator.samples_per_hour must be >= 1");
  if (!mode_angles.empty() && mode_period < 1) throw ConfigError("generator.mode_period must be >= 1");
  for (double p : label_prior) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("generator.label_prior entries must lie in (0, 1)");
  }
  if (!(active_fraction > 0.0 && active_fraction <= 1.0)) throw ConfigError("generator.active_fraction must lie in (0, 1]");
  if (!(turnover_rate >= 0.0 && turnover_rate <= 1.0)) throw ConfigError("generator.turnover_rate must lie in [0, 1]");
  if (!(angle_jitter >= 0.0)) throw ConfigError("generator.angle_jitter must be >= 0");
  if (!(zipf_exponent >= 0.0)) throw ConfigError("generator.zipf_exponent must be >= 0");
  if (interaction_scale != 0.0 && interaction_dim < 1) throw ConfigError("generator.interaction_dim must be >= 1");
}

std::vector<data::RawRecord> GeneratedStream::raw_records() const {
  std::vector<data::RawRecord> out;
  out.reserve(samples.size());
  for (const data::EncodedSample& s : samples) {
    data::RawRecord r;
    r.label = s.label;
    r.hour_stamp = hour_stamps[static_cast<std::size_t>(s.hour_index)];
    r.fields.reserve(s.field_indices.size());
    for (std::size_t f = 0; f < s.field_indices.size(); ++f) {
      r.fields.push_back("f" + std::to_string(f) + "_" + std::to_string(s.field_indices[f] - 1));
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct FieldTruth {
  std::vector<double> static_score;
  std::vector<double> u0;
  std::vector<double> u1;
  std::vector<std::vector<double>> q;
  std::vector<std::int32_t> active;   // ordered; position sets popularity
  std::vector<std::int32_t> dormant;
};

double angle_at(const DriftGeneratorSpec& spec, std::int32_t hour) {
  if (!spec.mode_angles.empty()) {
    const auto mode = static_cast<std::size_t>(hour / spec.mode_period) % spec.mode_angles.size();
    return spec.mode_angles[mode];
  }
  return spec.rotation_per_hour * static_cast<double>(hour);
}

// Bias b such that mean sigmoid(b + z_i) equals target.
double calibrate_bias(const std::vector<double>& z, double target) {
  auto rate = [&](double b) {
    double total = 0.0;
    for (double v : z) total += nn::sigmoid(b + v);
    return total / static_cast<double>(z.size());
  };
  double lo = -50.0;
  double hi = 50.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

GeneratedStream generate_drift_stream(const DriftGeneratorSpec& spec) {
  spec.validate();
  const std::size_t F = spec.num_fields;
  GeneratedStream out;

  std::vector<FieldTruth> truth(F);
  {
    Rng rng = derive_rng(spec.seed, {10});
    std::normal_distribution<double> normal(0.0, 1.0);
    const double q_scale = spec.interaction_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(spec.interaction_dim)) : 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      const std::int32_t K = spec.cardinality(f);
      FieldTruth& ft = truth[f];
      ft.static_score.resize(static_cast<std::size_t>(K));
      ft.u0.resize(static_cast<std::size_t>(K));
      ft.u1.resize(static_cast<std::size_t>(K));
      for (std::int32_t k = 0; k < K; ++k) {
        ft.static_score[static_cast<std::size_t>(k)] = normal(rng);
        ft.u0[static_cast<std::size_t>(k)] = normal(rng);
        ft.u1[static_cast<std::size_t>(k)] = normal(rng);
      }
      if (spec.interaction_scale != 0.0) {
        ft.q.assign(static_cast<std::size_t>(K), std::vector<double>(spec.interaction_dim));
        for (auto& v : ft.q) {
          for (double& x : v) x = q_scale * normal(rng);
        }
      }
      std::vector<std::int32_t> order(static_cast<std::size_t>(K));
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      const auto n_active = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(spec.active_fraction * static_cast<double>(K))));
      ft.active.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_active));
      ft.dormant.assign(order.begin() + static_cast<std::ptrdiff_t>(n_active), order.end());
    }
  }

  for (std::size_t f = 0; f < F; ++f) {
    out.field_names.push_back("C" + std::to_string(f + 1));
    out.field_sizes.push_back(spec.cardinality(f) + 1);
  }
  const std::int64_t first_hour = data::parse_hour_stamp(kSyntheticFirstHour);
  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(F));

  out.samples.reserve(static_cast<std::size_t>(spec.total_hours) * spec.samples_per_hour);
  for (std::int32_t h = 0; h < spec.total_hours; ++h) {
    Rng rng = derive_rng(spec.seed, {11, static_cast<std::uint64_t>(h)});
    if (h > 0 && spec.turnover_rate > 0.0) {
      std::bernoulli_distribution retire(spec.turnover_rate);
      for (FieldTruth& ft : truth) {
        for (std::int32_t& slot : ft.active) {
          if (ft.dormant.empty() || !retire(rng)) continue;
          std::uniform_int_distribution<std::size_t> pick(0, ft.dormant.size() - 1);
          std::swap(slot, ft.dormant[pick(rng)]);
        }
      }
    }
    double theta = angle_at(spec, h);
    if (spec.angle_jitter > 0.0) theta += std::normal_distribution<double>(0.0, spec.angle_jitter)(rng);
    const double c = std::cos(theta);
    const double s = std::sin(theta);

    std::vector<std::discrete_distribution<std::size_t>> draw;
    for (const FieldTruth& ft : truth) {
      std::vector<double> w(ft.active.size());
      for (std::size_t r = 0; r < w.size(); ++r) w[r] = std::pow(static_cast<double>(r + 1), -spec.zipf_exponent);
      draw.emplace_back(w.begin(), w.end());
    }

    std::vector<data::EncodedSample> hour(spec.samples_per_hour);
    std::vector<double> z(spec.samples_per_hour);
    for (std::size_t i = 0; i < spec.samples_per_hour; ++i) {
      data::EncodedSample& smp = hour[i];
      smp.hour_index = h;
      smp.field_indices.resize(F);
      double logit = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        const FieldTruth& ft = truth[f];
        const std::int32_t k = ft.active[draw[f](rng)];
        smp.field_indices[f] = k + 1;
        const auto ku = static_cast<std::size_t>(k);
        logit += spec.static_scale * ft.static_score[ku] + spec.drift_scale * (c * ft.u0[ku] + s * ft.u1[ku]);
      }
      if (spec.interaction_scale != 0.0) {
        double inter = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
          for (std::size_t g = f + 1; g < F; ++g) {
            const auto& a = truth[f].q[static_cast<std::size_t>(smp.field_indices[f] - 1)];
            const auto& b = truth[g].q[static_cast<std::size_t>(smp.field_indices[g] - 1)];
            for (std::size_t k = 0; k < spec.interaction_dim; ++k) inter += a[k] * b[k];
          }
        }
        logit += spec.interaction_scale * inter * inv_sqrt_f;
      }
      z[i] = logit;
    }

    double bias = spec.base_bias;
    if (!spec.label_prior.empty()) {
      bias = calibrate_bias(z, spec.label_prior[static_cast<std::size_t>(h) % spec.label_prior.size()]);
    }
    std::vector<double> probs(spec.samples_per_hour);
    std::vector<double> labels(spec.samples_per_hour);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < spec.samples_per_hour; ++i) {
      probs[i] = nn::sigmoid(bias + z[i]);
      hour[i].label = unit(rng) < probs[i] ? 1 : 0;
      labels[i] = hour[i].label;
      positives += static_cast<std::size_t>(hour[i].label);
    }

    out.hour_stamps.push_back(data::format_hour_stamp(first_hour + h));
    out.angle.push_back(theta);
    out.hour_bias.push_back(bias);
    out.oracle_auc.push_back(metrics::auc(probs, labels).value_or(0.5));
    out.positive_rate.push_back(static_cast<double>(positives) / static_cast<double>(spec.samples_per_hour));
    for (auto& smp : hour) out.samples.push_back(std::move(smp));
  }
  return out;
}

}  // namespace streamctr::engine
