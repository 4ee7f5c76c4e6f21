// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "streamctr/cli.h"
#include "streamctr/config.h"

namespace cli = streamctr::cli;

int main(int argc, char** argv) {
  CLI::App app{"Streaming CTR training and evaluation"};
  app.require_subcommand(1);

  cli::PrepareOptions prep;
  auto* prepare = app.add_subcommand("prepare", "Ingest a CSV log and write an hourly stream schedule");
  prepare->add_option("--data", prep.data_path, "Input CSV")->required();
  prepare->add_option("--out", prep.out_dir, "Output directory")->required();
  prepare->add_option("--format", prep.format_path, "Column-mapping descriptor (JSON)");
  prepare->add_option("--pretrain-fraction", prep.pretrain_fraction, "Fraction of hours used for pretraining");
  prepare->add_option("--holdout-fraction", prep.holdout_fraction, "Per-hour test fraction");
  prepare->add_option("--min-count", prep.min_count, "Minimum token count for a vocabulary entry");
  prepare->add_option("--seed", prep.seed, "Split seed");
  prepare->add_option("--vocab-scope", prep.vocab_scope, "all|pretrain")->check(CLI::IsMember({"all", "pretrain"}));

  cli::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Pretrain and stream over a prepared schedule");
  run_cmd->add_option("--schedule", run.schedule_dir, "Directory written by prepare")->required();
  run_cmd->add_option("--config", run.config_path, "Run config (JSON)");
  run_cmd->add_option("--set", run.overrides, "Override a config key, e.g. model.dropout=0.1");
  run_cmd->add_option("--preset", run.presets, "Apply a named preset");
  run_cmd->add_option("--out", run.out_dir, "Run directory")->required();
  run_cmd->add_option("--checkpoint-stride", run.checkpoint_stride, "Save M_t every N hours (0 = none)");
  run_cmd->add_option("--epoch-sweep", run.epoch_sweep, "Epochs per hour for an epoch sweep (0 = off)");
  run_cmd->add_option("--sweep-stride", run.sweep_stride, "Score every N-th timestamp during an epoch sweep");

  cli::SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a grid of configs and seeds");
  sweep_cmd->add_option("--schedule", sweep.schedule_dir, "Directory written by prepare")->required();
  sweep_cmd->add_option("--sweep", sweep.sweep_path, "Sweep file (JSON)")->required();
  sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->required();
  sweep_cmd->add_option("-j,--parallelism", sweep.parallelism, "Concurrent runs");

  cli::AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Correlate and tabulate finished runs");
  analyze->add_option("--runs", an.patterns, "Run directory glob(s)")->required();
  analyze->add_option("--out", an.out_dir, "Output directory")->required();

  cli::SynthOptions syn;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic drifting CTR log");
  synth->add_option("--spec", syn.spec_path, "Generator spec (JSON)")->required();
  synth->add_option("--out", syn.out_path, "Output CSV")->required();

  auto* presets = app.add_subcommand("presets", "List tuning presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    streamctr::engine::Json result;
    if (*prepare) {
      result = cli::cmd_prepare(prep);
    } else if (*run_cmd) {
      result = cli::cmd_run(run);
    } else if (*sweep_cmd) {
      result = cli::cmd_sweep(sweep);
    } else if (*analyze) {
      result = cli::cmd_analyze(an);
    } else if (*synth) {
      result = cli::cmd_synth(syn);
    } else if (*presets) {
      result = streamctr::engine::Json::array();
      for (const auto& p : streamctr::engine::free_lunch_presets()) {
        result.push_back({{"name", p.name}, {"description", p.description}, {"patch", p.patch}});
      }
    }
    std::cout << result.dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for_current_exception();
  }
}
