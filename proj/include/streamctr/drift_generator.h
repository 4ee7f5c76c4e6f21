// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic hour-bucketed CTR stream with controllable drift.
//
// Token k of field f carries a static score s_fk and a 2-D latent u_fk. At
// hour t the ground-truth logit is
//
//   z = b_t + sum_f [static_scale * s_fk + drift_scale * <u_fk, (cos th_t, sin th_t)>]
//         + interaction_scale * sum_{f<g} <q_f, q_g> / sqrt(F)
//
// th_t either rotates by a fixed angle per hour or cycles through a list of
// recurring mode angles, plus an optional independent Gaussian offset per hour. b_t is calibrated per hour so the expected positive
// rate follows the label-prior schedule. Tokens are drawn from a Zipf law
// over each field's active set; turnover retires active tokens and revives
// dormant ones.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamctr/data_pipeline.h"

namespace streamctr::engine {

struct DriftGeneratorSpec {
  std::size_t num_fields = 8;
  std::vector<std::int32_t> cardinalities = {};  // empty: default_cardinality for every field
  std::int32_t default_cardinality = 50;
  std::int32_t total_hours = 36;
  std::size_t samples_per_hour = 10000;
  std::uint64_t seed = 0;

  double static_scale = 0.5;
  double drift_scale = 1.0;
  double interaction_scale = 0.0;
  std::size_t interaction_dim = 4;

  double rotation_per_hour = 0.0;       // radians
  std::vector<double> mode_angles = {};  // nonempty: recurring modes instead of rotation
  std::int32_t mode_period = 1;          // hours spent in each mode
  double angle_jitter = 0.0;             // std dev of an independent per-hour angle offset

  double base_bias = 0.0;                 // used when label_prior is empty
  std::vector<double> label_prior = {};   // cyclic per-hour target positive rate

  double active_fraction = 1.0;  // share of each vocabulary active at hour 0
  double turnover_rate = 0.0;    // per-hour chance an active token is replaced
  double zipf_exponent = 1.0;

  std::int32_t cardinality(std::size_t field) const;
  void validate() const;
};

struct GeneratedStream {
  std::vector<std::string> field_names;
  std::vector<std::int32_t> field_sizes;  // cardinality + 1 (index 0 stays the OOV slot)
  std::vector<data::EncodedSample> samples;
  std::vector<std::string> hour_stamps;   // YYMMDDHH per hour index
  std::vector<double> angle;              // th_t
  std::vector<double> hour_bias;          // b_t
  std::vector<double> oracle_auc;         // ground-truth AUC per hour; 0.5 for a single-class hour
  std::vector<double> positive_rate;      // realized

  // CSV-shaped records: token k of field f is spelled "f<f>_<k>".
  std::vector<data::RawRecord> raw_records() const;
};

inline constexpr const char* kSyntheticFirstHour = "14102100";

GeneratedStream generate_drift_stream(const DriftGeneratorSpec& spec);

}  // namespace streamctr::engine
