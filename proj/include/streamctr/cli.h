// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Subcommands behind the streamctr tool. Each writes its outputs under the
// given directory and returns a JSON summary of what it did.
//
// Output layout of a run directory:
//   manifest.json      experiment manifest (the only file with wall-clock times)
//   metrics.jsonl      one record per (model, test set, metric)
//   summary.json       aggregates recomputable from metrics.jsonl
//   hours.jsonl        per-hour training counters and checkpoint hashes
//   epoch_sweep.jsonl  per-timestamp epoch curves (only with an epoch sweep)
//   checkpoints/       model checkpoints (only with a checkpoint stride)

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "streamctr/config.h"

namespace streamctr::cli {

using engine::Json;

int exit_code_for_current_exception();

struct PrepareOptions {
  std::string data_path;
  std::string out_dir;
  std::string format_path;  // optional column-mapping descriptor (JSON)
  double pretrain_fraction = 0.7;
  double holdout_fraction = 0.5;
  std::int64_t min_count = 2;
  std::uint64_t seed = 0;
  std::string vocab_scope = "all";  // all|pretrain
};

// Writes schedule.bin and schedule_manifest.json.
Json cmd_prepare(const PrepareOptions& options);

struct RunOptions {
  std::string schedule_dir;
  std::string config_path;  // optional; defaults apply when empty
  std::vector<std::string> overrides;
  std::vector<std::string> presets;
  std::string out_dir;
  std::size_t checkpoint_stride = 0;
  std::size_t epoch_sweep = 0;  // epochs per hour for an epoch sweep; 0 runs the normal protocol
  std::size_t sweep_stride = 1;
  Json extra_manifest = Json::object();
};

// Resolves file, presets and overrides into one config, in that order.
engine::RunConfig resolve_run_config(const std::string& config_path, const std::vector<std::string>& presets,
                                     const std::vector<std::string>& overrides);

Json cmd_run(const RunOptions& options);

struct SweepOptions {
  std::string schedule_dir;
  std::string sweep_path;
  std::string out_dir;
  std::size_t parallelism = 1;
};

// Sweep file: {"schema_version": 1, "base": {run config}, "axes": {"model.embed_dim": [4, 32, 60], ...},
// "seeds": [0, 1, 2]}. Writes one run directory per cell and seed plus
// comparison.csv / comparison.json.
Json cmd_sweep(const SweepOptions& options);

struct AnalyzeOptions {
  std::vector<std::string> patterns;
  std::string out_dir;
};

// Writes analysis.json, scatter.csv, trends.csv and pd_os.csv.
Json cmd_analyze(const AnalyzeOptions& options);

struct SynthOptions {
  std::string spec_path;
  std::string out_path;
};

// Writes the CSV and <out>.oracle.json with per-hour generator truth.
Json cmd_synth(const SynthOptions& options);

}  // namespace streamctr::cli
