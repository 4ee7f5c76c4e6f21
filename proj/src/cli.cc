// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/cli.h"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "streamctr/drift_generator.h"
#include "streamctr/errors.h"
#include "streamctr/hashing.h"

namespace streamctr::cli {
namespace fs = std::filesystem;

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const ConfigError&) {
    return 2;
  } catch (const DataError&) {
    return 3;
  } catch (const NumericError&) {
    return 4;
  } catch (...) {
    return 1;
  }
}

namespace {

std::string number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("'" + path.string() + "' is not valid JSON");
  return j;
}

data::FormatDescriptor load_format(const std::string& path) {
  data::FormatDescriptor fmt;
  if (path.empty()) return fmt;
  const Json j = engine::load_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    try {
      if (key == "label_column") {
        fmt.label_column = it->get<std::string>();
      } else if (key == "hour_column") {
        fmt.hour_column = it->get<std::string>();
      } else if (key == "ignored_columns") {
        fmt.ignored_columns = it->get<std::vector<std::string>>();
      } else if (key == "feature_columns") {
        fmt.feature_columns = it->get<std::vector<std::string>>();
      } else if (key == "delimiter") {
        const auto d = it->get<std::string>();
        if (d.size() != 1) throw ConfigError(path + ": delimiter must be one character");
        fmt.delimiter = d[0];
      } else {
        throw ConfigError(path + ": unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path + ": wrong type for '" + key + "'");
    }
  }
  return fmt;
}

data::StreamSchedule load_schedule(const std::string& dir) {
  const fs::path p = fs::path(dir) / "schedule.bin";
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open schedule '" + p.string() + "' (run `streamctr prepare` first)");
  return data::read_schedule(in);
}

Json eval_json(const std::optional<metrics::EvalResult>& e) {
  if (!e.has_value()) return nullptr;
  return Json{{"auc", e->auc.has_value() ? Json(*e->auc) : Json(nullptr)},
              {"logloss", e->logloss},
              {"n_pos", e->n_pos},
              {"n_neg", e->n_neg}};
}

Json aggregate_json(const metrics::Aggregate& a) {
  return Json{{"value", a.value.has_value() ? Json(*a.value) : Json(nullptr)},
              {"terms", a.terms},
              {"skipped", a.skipped}};
}

void emit_eval(std::ostream& out, const std::string& manifest_id, const std::string& kind, std::size_t timestamp,
               std::size_t model_t, std::size_t test_t, const metrics::EvalResult& e) {
  const std::string model = "M_" + std::to_string(model_t);
  const std::string test = "D_" + std::to_string(test_t) + "_test";
  auto line = [&](const char* metric, Json value) {
    Json rec{{"manifest_id", manifest_id}, {"model_id", model},     {"timestamp", timestamp},
             {"test_set", test},           {"kind", kind},          {"metric", metric},
             {"value", std::move(value)}};
    out << rec.dump() << '\n';
  };
  line("auc", e.auc.has_value() ? Json(*e.auc) : Json(nullptr));
  line("logloss", e.logloss);
  line("n_pos", e.n_pos);
  line("n_neg", e.n_neg);
}

std::string metrics_jsonl(const std::string& manifest_id, const metrics::MetricSeries& s) {
  std::ostringstream out;
  if (s.pretrain.has_value()) emit_eval(out, manifest_id, "pretrain", 0, 0, 0, *s.pretrain);
  for (const metrics::TimestampRecord& r : s.records) {
    if (r.online) emit_eval(out, manifest_id, "online", r.t, r.t, r.t + 1, *r.online);
    if (r.current) emit_eval(out, manifest_id, "current", r.t, r.t, r.t, *r.current);
    if (r.backward) emit_eval(out, manifest_id, "backward", r.t, r.t, r.t - 1, *r.backward);
    if (r.initial) emit_eval(out, manifest_id, "initial", r.t, 0, r.t, *r.initial);
  }
  return out.str();
}

void ensure_fresh_run_dir(const fs::path& dir) {
  fs::create_directories(dir);
  if (fs::exists(dir / "manifest.json")) {
    throw ConfigError("'" + dir.string() + "' already holds a run manifest; manifests are append-only, choose a new --out");
  }
}

void save_checkpoint(const fs::path& path, const models::ModelState& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  models::save_model(out, m);
}

struct RunRequest {
  Json config;
  const data::StreamSchedule* schedule = nullptr;
  std::string schedule_dir;
  fs::path out_dir;
  std::size_t checkpoint_stride = 0;
  std::size_t epoch_sweep = 0;
  std::size_t sweep_stride = 1;
  Json extra_manifest = Json::object();
};

Json execute_run(const RunRequest& req) {
  const engine::RunConfig cfg = engine::run_config_from_json(req.config);
  const Json resolved = engine::to_json(cfg);
  const data::StreamSchedule& schedule = *req.schedule;
  const std::string fingerprint = hex_digest(data::schedule_fingerprint(schedule));

  Fnv1a64 id_hash;
  id_hash.update(resolved.dump());
  id_hash.update(fingerprint);
  id_hash.update(engine::kEngineVersion);
  id_hash.update(req.extra_manifest.dump());
  const std::string manifest_id = hex_digest(id_hash.digest());

  ensure_fresh_run_dir(req.out_dir);
  const std::string started = utc_now();
  std::vector<std::string> outputs;

  engine::PretrainResult pre = engine::pretrain(schedule, cfg);
  if (req.checkpoint_stride > 0) {
    fs::create_directories(req.out_dir / "checkpoints");
    save_checkpoint(req.out_dir / "checkpoints" / "m_0.ckpt", pre.model);
    outputs.push_back("checkpoints/m_0.ckpt");
  }
  std::size_t pretrain_samples = 0;
  for (const auto& e : pre.epochs) pretrain_samples += e.samples;

  Json summary{{"manifest_id", manifest_id}, {"horizon", schedule.horizon()}};
  if (req.epoch_sweep > 0) {
    const auto records = engine::epoch_sweep(pre, schedule, cfg, req.epoch_sweep, req.sweep_stride);
    std::ostringstream out;
    double os_o = 0, os_c = 0, pd_o = 0, pd_c = 0;
    std::size_t n_o = 0, n_c = 0;
    for (const auto& r : records) {
      Json rec{{"manifest_id", manifest_id},
               {"timestamp", r.t},
               {"online_curve", r.online_curve},
               {"current_curve", r.current_curve},
               {"online_pd", r.online_pd ? Json(*r.online_pd) : Json(nullptr)},
               {"online_os", r.online_os ? Json(*r.online_os) : Json(nullptr)},
               {"current_pd", r.current_pd ? Json(*r.current_pd) : Json(nullptr)},
               {"current_os", r.current_os ? Json(*r.current_os) : Json(nullptr)}};
      out << rec.dump() << '\n';
      if (r.online_os) {
        os_o += static_cast<double>(*r.online_os);
        pd_o += *r.online_pd;
        ++n_o;
      }
      if (r.current_os) {
        os_c += static_cast<double>(*r.current_os);
        pd_c += *r.current_pd;
        ++n_c;
      }
    }
    write_file(req.out_dir / "epoch_sweep.jsonl", out.str());
    outputs.push_back("epoch_sweep.jsonl");
    auto mean = [](double s, std::size_t n) { return n > 0 ? Json(s / static_cast<double>(n)) : Json(nullptr); };
    summary["epoch_sweep"] = Json{{"epochs", req.epoch_sweep},
                                  {"stride", req.sweep_stride},
                                  {"timestamps", records.size()},
                                  {"mean_online_os", mean(os_o, n_o)},
                                  {"mean_current_os", mean(os_c, n_c)},
                                  {"mean_online_pd", mean(pd_o, n_o)},
                                  {"mean_current_pd", mean(pd_c, n_c)}};
    summary["pAUC"] = pre.pretrain_eval.auc ? Json(*pre.pretrain_eval.auc) : Json(nullptr);
  } else {
    engine::HourObserver observer;
    if (req.checkpoint_stride > 0) {
      observer = [&](std::size_t t, const models::ModelState& m) {
        if (t % req.checkpoint_stride != 0) return;
        const std::string name = "checkpoints/m_" + std::to_string(t) + ".ckpt";
        save_checkpoint(req.out_dir / name, m);
        outputs.push_back(name);
      };
    }
    const engine::StreamResult res = engine::stream_run(pre, schedule, cfg, observer);
    const metrics::MetricSeries& s = res.series;
    write_file(req.out_dir / "metrics.jsonl", metrics_jsonl(manifest_id, s));
    outputs.push_back("metrics.jsonl");

    std::ostringstream hours;
    std::size_t stream_samples = 0, steps = 0, skipped = 0;
    for (const engine::HourTrace& h : res.hours) {
      hours << Json{{"manifest_id", manifest_id},
                    {"timestamp", h.t},
                    {"hash_before", hex_digest(h.hash_before)},
                    {"hash_after", hex_digest(h.hash_after)},
                    {"hour_train", h.hour_train},
                    {"replayed", h.replayed},
                    {"trained_samples", h.train.samples},
                    {"steps", h.train.steps},
                    {"skipped", h.train.skipped},
                    {"mean_loss", h.train.steps > 0 ? Json(h.train.loss_sum / static_cast<double>(h.train.steps))
                                                    : Json(nullptr)}}
                   .dump()
            << '\n';
      stream_samples += h.train.samples;
      steps += h.train.steps;
      skipped += h.train.skipped;
    }
    write_file(req.out_dir / "hours.jsonl", hours.str());
    outputs.push_back("hours.jsonl");

    bool ordering_ok = true;
    for (const engine::EvalTrace& e : res.evals) {
      if (e.kind == engine::EvalKind::kOnline && e.model_hash != res.hours[e.test_t - 1].hash_before) ordering_ok = false;
    }
    summary["weighting"] = metrics::to_string(s.weighting);
    summary["aggregates"] = Json{{"oAUC", aggregate_json(s.oauc)},
                                 {"cAUC", aggregate_json(s.cauc)},
                                 {"bAUC", aggregate_json(s.bauc)},
                                 {"iAUC", aggregate_json(s.iauc)}};
    summary["pAUC"] = s.pauc ? Json(*s.pauc) : Json(nullptr);
    summary["pretrain"] = eval_json(s.pretrain);
    summary["train"] = Json{{"pretrain_samples", pretrain_samples},
                            {"stream_samples", stream_samples},
                            {"stream_steps", steps},
                            {"skipped_samples", skipped}};
    summary["replay"] = Json{{"enabled", cfg.replay.enabled},
                             {"capacity", res.replay.capacity},
                             {"stored", res.replay.stored},
                             {"seen", res.replay.seen},
                             {"drawn", res.replay.drawn}};
    summary["hashes"] = Json{{"m0_before", hex_digest(res.m0_hash_before)},
                             {"m0_after", hex_digest(res.m0_hash_after)},
                             {"final", hex_digest(res.final_model.hash())},
                             {"online_uses_pre_update_model", ordering_ok}};
    summary["skipped_timestamps"] = schedule.degenerate_timestamps;
  }
  write_file(req.out_dir / "summary.json", summary.dump(2) + "\n");
  outputs.push_back("summary.json");

  Json manifest{{"manifest_id", manifest_id},
                {"engine_version", engine::kEngineVersion},
                {"config", resolved},
                {"dataset", {{"schedule_dir", req.schedule_dir}, {"fingerprint", fingerprint}}},
                {"protocol", req.epoch_sweep > 0 ? "epoch_sweep" : "stream"},
                {"started_utc", started},
                {"finished_utc", utc_now()},
                {"outputs", outputs}};
  for (auto it = req.extra_manifest.begin(); it != req.extra_manifest.end(); ++it) manifest[it.key()] = it.value();
  write_file(req.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

}  // namespace

Json cmd_prepare(const PrepareOptions& o) {
  if (o.vocab_scope != "all" && o.vocab_scope != "pretrain") {
    throw ConfigError("--vocab-scope must be all or pretrain");
  }
  if (o.min_count < 1) throw ConfigError("--min-count must be >= 1");
  if (!(o.pretrain_fraction > 0.0 && o.pretrain_fraction < 1.0)) throw ConfigError("--pretrain-fraction must lie in (0, 1)");
  if (!(o.holdout_fraction > 0.0 && o.holdout_fraction < 1.0)) throw ConfigError("--holdout-fraction must lie in (0, 1)");
  std::ifstream in(o.data_path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + o.data_path + "'");
  const data::FormatDescriptor fmt = load_format(o.format_path);
  const data::RawDataset ds = data::ingest(in, fmt);
  if (ds.records.empty()) throw DataError("'" + o.data_path + "' has no records");

  const std::int64_t origin = data::earliest_hour(ds.records);
  std::int64_t last = origin;
  for (const auto& r : ds.records) last = std::max(last, data::parse_hour_stamp(r.hour_stamp));
  const auto total_hours = static_cast<std::int32_t>(last - origin + 1);
  const std::int32_t pretrain_hours = data::pretrain_hour_count(o.pretrain_fraction, total_hours);

  data::VocabMap vocab;
  if (o.vocab_scope == "all") {
    vocab = data::build_vocab(ds.records, ds.field_names.size(), o.min_count);
  } else {
    std::vector<data::RawRecord> early;
    for (const auto& r : ds.records) {
      if (data::parse_hour_stamp(r.hour_stamp) - origin < pretrain_hours) early.push_back(r);
    }
    vocab = data::build_vocab(early, ds.field_names.size(), o.min_count);
  }
  std::vector<data::EncodedSample> samples = data::encode(ds.records, vocab, origin);
  data::ScheduleOptions so;
  so.pretrain_fraction = o.pretrain_fraction;
  so.holdout_fraction = o.holdout_fraction;
  so.seed = o.seed;
  so.total_hours = total_hours;
  const data::StreamSchedule schedule = data::make_schedule(std::move(samples), vocab.sizes(), so);

  const fs::path out(o.out_dir);
  fs::create_directories(out);
  {
    std::ofstream bin(out / "schedule.bin", std::ios::binary);
    if (!bin) throw DataError("cannot write '" + (out / "schedule.bin").string() + "'");
    data::write_schedule(bin, schedule);
  }
  Json hours = Json::array();
  for (std::size_t t = 1; t <= schedule.buckets.size(); ++t) {
    const auto& b = schedule.buckets[t - 1];
    hours.push_back(Json{{"t", t},
                         {"hour_index", b.hour_index},
                         {"stamp", data::format_hour_stamp(origin + b.hour_index)},
                         {"train", b.train.size()},
                         {"test", b.test.size()}});
  }
  Json manifest{{"schema_version", 1},
                {"source", o.data_path},
                {"first_hour", data::format_hour_stamp(origin)},
                {"total_hours", schedule.total_hours},
                {"pretrain_hours", schedule.pretrain_hours},
                {"streaming_hours", schedule.horizon()},
                {"pretrain_fraction", o.pretrain_fraction},
                {"holdout_fraction", o.holdout_fraction},
                {"seed", o.seed},
                {"min_count", o.min_count},
                {"vocab_scope", o.vocab_scope},
                {"field_names", ds.field_names},
                {"vocab_sizes", vocab.sizes()},
                {"records", ds.records.size()},
                {"pretrain_train", schedule.pretrain_train.size()},
                {"pretrain_test", schedule.pretrain_test.size()},
                {"hours", hours},
                {"skipped_timestamps", schedule.degenerate_timestamps},
                {"fingerprint", hex_digest(data::schedule_fingerprint(schedule))}};
  write_file(out / "schedule_manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

engine::RunConfig resolve_run_config(const std::string& config_path, const std::vector<std::string>& presets,
                                     const std::vector<std::string>& overrides) {
  Json j = config_path.empty() ? engine::to_json(engine::RunConfig{}) : engine::load_json_file(config_path);
  for (const std::string& p : presets) j.merge_patch(engine::find_preset(p).patch);
  for (const std::string& o : overrides) engine::apply_override(j, o);
  return engine::run_config_from_json(j);
}

Json cmd_run(const RunOptions& o) {
  const data::StreamSchedule schedule = load_schedule(o.schedule_dir);
  RunRequest req;
  req.config = engine::to_json(resolve_run_config(o.config_path, o.presets, o.overrides));
  req.schedule = &schedule;
  req.schedule_dir = o.schedule_dir;
  req.out_dir = o.out_dir;
  req.checkpoint_stride = o.checkpoint_stride;
  req.epoch_sweep = o.epoch_sweep;
  req.sweep_stride = o.sweep_stride;
  req.extra_manifest = o.extra_manifest;
  if (!o.presets.empty()) req.extra_manifest["presets"] = o.presets;
  return execute_run(req);
}

namespace {

std::string cell_label(const Json& values) {
  std::string out;
  for (auto it = values.begin(); it != values.end(); ++it) {
    if (!out.empty()) out += ";";
    out += it.key() + "=" + it.value().dump();
  }
  return out;
}

std::optional<double> summary_value(const Json& summary, const std::string& metric) {
  const Json* v = nullptr;
  if (metric == "pAUC") {
    v = summary.contains("pAUC") ? &summary["pAUC"] : nullptr;
  } else if (summary.contains("aggregates")) {
    v = &summary["aggregates"][metric]["value"];
  }
  if (v == nullptr || v->is_null()) return std::nullopt;
  return v->get<double>();
}

}  // namespace

Json cmd_sweep(const SweepOptions& o) {
  const Json spec = engine::load_json_file(o.sweep_path);
  if (!spec.is_object()) throw ConfigError(o.sweep_path + ": expected an object");
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    if (it.key() != "schema_version" && it.key() != "base" && it.key() != "axes" && it.key() != "seeds") {
      throw ConfigError(o.sweep_path + ": unknown key '" + it.key() + "'");
    }
  }
  if (spec.value("schema_version", 1) != 1) throw ConfigError(o.sweep_path + ": unsupported schema_version");
  const Json base = spec.value("base", engine::to_json(engine::RunConfig{}));
  const Json axes = spec.value("axes", Json::object());
  if (!axes.is_object()) throw ConfigError(o.sweep_path + ": axes must be an object of value lists");
  std::vector<std::uint64_t> seeds = {0};
  if (spec.contains("seeds")) {
    const Json& s = spec["seeds"];
    if (s.is_number_unsigned()) {
      seeds.clear();
      for (std::uint64_t i = 0; i < s.get<std::uint64_t>(); ++i) seeds.push_back(i);
    } else if (s.is_array()) {
      seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      throw ConfigError(o.sweep_path + ": seeds must be a count or a list");
    }
  }
  if (seeds.empty()) throw ConfigError(o.sweep_path + ": at least one seed is required");
  if (o.parallelism < 1) throw ConfigError("--parallelism must be >= 1");

  std::vector<Json> cells = {Json::object()};
  for (auto it = axes.begin(); it != axes.end(); ++it) {
    if (!it->is_array() || it->empty()) throw ConfigError(o.sweep_path + ": axis '" + it.key() + "' needs a nonempty list");
    std::vector<Json> next;
    for (const Json& cell : cells) {
      for (const Json& v : *it) {
        Json c = cell;
        c[it.key()] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  // Validate every cell before launching anything.
  std::vector<Json> configs;
  for (const Json& cell : cells) {
    Json c = base;
    for (auto it = cell.begin(); it != cell.end(); ++it) engine::set_path(c, it.key(), it.value());
    engine::run_config_from_json(c);
    configs.push_back(std::move(c));
  }
  std::cerr << "sweep: " << cells.size() << " cells x " << seeds.size() << " seeds = " << cells.size() * seeds.size()
            << " runs\n";

  const data::StreamSchedule schedule = load_schedule(o.schedule_dir);
  const fs::path out(o.out_dir);
  fs::create_directories(out);

  struct Task {
    std::size_t cell;
    std::uint64_t seed;
    Json summary;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::uint64_t s : seeds) tasks.push_back({c, s, nullptr});
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        Task& task = tasks[i];
        RunRequest req;
        req.config = configs[task.cell];
        req.config["seed"] = task.seed;
        req.schedule = &schedule;
        req.schedule_dir = o.schedule_dir;
        char name[64];
        std::snprintf(name, sizeof name, "cell_%03zu/seed_%llu", task.cell,
                      static_cast<unsigned long long>(task.seed));
        req.out_dir = out / name;
        req.extra_manifest = Json{{"sweep", {{"cell", task.cell}, {"axes", cells[task.cell]}, {"seed", task.seed}}}};
        task.summary = execute_run(req);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min(o.parallelism, tasks.size());
  for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::vector<std::string> metric_names = {"pAUC", "oAUC", "cAUC", "bAUC", "iAUC"};
  std::vector<std::map<std::string, std::optional<double>>> means(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const std::string& m : metric_names) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const Task& t : tasks) {
        if (t.cell != c) continue;
        if (auto v = summary_value(t.summary, m)) {
          sum += *v;
          ++n;
        }
      }
      if (n > 0) means[c][m] = sum / static_cast<double>(n);
    }
  }

  std::ostringstream csv;
  csv << "cell";
  for (auto it = axes.begin(); it != axes.end(); ++it) csv << ',' << it.key();
  csv << ",seeds";
  for (const auto& m : metric_names) csv << ',' << m;
  for (const auto& m : metric_names) csv << ",rel_" << m << "_pct";
  csv << '\n';
  Json table = Json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Json row{{"cell", c}, {"axes", cells[c]}, {"label", cell_label(cells[c])}, {"seeds", seeds.size()}};
    csv << c;
    for (auto it = cells[c].begin(); it != cells[c].end(); ++it) {
      std::string v = it.value().dump();
      std::replace(v.begin(), v.end(), ',', ' ');
      csv << ',' << v;
    }
    csv << ',' << seeds.size();
    for (const auto& m : metric_names) {
      const auto v = means[c][m];
      row["mean"][m] = v ? Json(*v) : Json(nullptr);
      csv << ',' << (v ? number(*v) : "");
    }
    for (const auto& m : metric_names) {
      const auto b = means[0][m];
      const auto v = means[c][m];
      std::optional<double> rel;
      if (b && v && *b != 0.0) rel = metrics::relative_improvement(*b, *v);
      row["relative_improvement_pct"][m] = rel ? Json(*rel) : Json(nullptr);
      csv << ',' << (rel ? number(*rel) : "");
    }
    csv << '\n';
    table.push_back(std::move(row));
  }
  write_file(out / "comparison.csv", csv.str());
  Json result{{"cells", cells.size()}, {"seeds", seeds}, {"baseline_cell", 0}, {"table", table}};
  write_file(out / "comparison.json", result.dump(2) + "\n");
  return result;
}

namespace {

std::vector<fs::path> expand_patterns(const std::vector<std::string>& patterns) {
  std::set<fs::path> dirs;
  for (const std::string& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) {
        const fs::path p(g.gl_pathv[i]);
        if (fs::is_directory(p) && fs::exists(p / "summary.json")) {
          dirs.insert(p);
        } else if (p.filename() == "summary.json") {
          dirs.insert(p.parent_path());
        }
      }
    }
    globfree(&g);
  }
  return {dirs.begin(), dirs.end()};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json cmd_analyze(const AnalyzeOptions& o) {
  const std::vector<fs::path> runs = expand_patterns(o.patterns);
  if (runs.empty()) throw DataError("no run directories (with summary.json) match the given patterns");
  const fs::path out(o.out_dir);
  fs::create_directories(out);

  struct RunInfo {
    std::string name;
    std::string group;
    std::map<std::string, std::optional<double>> agg;
  };
  std::vector<RunInfo> infos;
  std::ostringstream scatter;
  scatter << "run,group,pAUC,oAUC,cAUC,bAUC,iAUC\n";
  std::ostringstream trends;
  trends << "run,timestamp,kind,model_id,test_set,auc\n";
  std::ostringstream pdos;
  pdos << "run,timestamp,online_pd,online_os,current_pd,current_os\n";

  for (const fs::path& dir : runs) {
    RunInfo info;
    info.name = dir.string();
    const Json summary = read_json(dir / "summary.json");
    info.group = "ungrouped";
    if (fs::exists(dir / "manifest.json")) {
      const Json manifest = read_json(dir / "manifest.json");
      if (manifest.contains("sweep")) {
        std::string g;
        for (auto it = manifest["sweep"]["axes"].begin(); it != manifest["sweep"]["axes"].end(); ++it) {
          if (!g.empty()) g += "+";
          g += it.key();
        }
        info.group = g.empty() ? "sweep" : g;
      }
    }
    for (const char* m : {"pAUC", "oAUC", "cAUC", "bAUC", "iAUC"}) info.agg[m] = summary_value(summary, m);
    scatter << info.name << ',' << info.group;
    for (const char* m : {"pAUC", "oAUC", "cAUC", "bAUC", "iAUC"}) {
      scatter << ',' << (info.agg[m] ? number(*info.agg[m]) : "");
    }
    scatter << '\n';

    if (fs::exists(dir / "metrics.jsonl")) {
      std::istringstream lines(read_file(dir / "metrics.jsonl"));
      std::string line;
      while (std::getline(lines, line)) {
        const Json rec = Json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw DataError((dir / "metrics.jsonl").string() + ": malformed record");
        if (rec["metric"] != "auc") continue;
        trends << info.name << ',' << rec["timestamp"].get<std::size_t>() << ',' << rec["kind"].get<std::string>()
               << ',' << rec["model_id"].get<std::string>() << ',' << rec["test_set"].get<std::string>() << ','
               << (rec["value"].is_null() ? "" : number(rec["value"].get<double>())) << '\n';
      }
    }
    if (fs::exists(dir / "epoch_sweep.jsonl")) {
      std::istringstream lines(read_file(dir / "epoch_sweep.jsonl"));
      std::string line;
      while (std::getline(lines, line)) {
        const Json rec = Json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw DataError((dir / "epoch_sweep.jsonl").string() + ": malformed record");
        auto cell = [&](const char* k) { return rec[k].is_null() ? std::string() : rec[k].dump(); };
        pdos << info.name << ',' << rec["timestamp"].get<std::size_t>() << ',' << cell("online_pd") << ','
             << cell("online_os") << ',' << cell("current_pd") << ',' << cell("current_os") << '\n';
      }
    }
    infos.push_back(std::move(info));
  }

  std::map<std::string, std::vector<const RunInfo*>> groups;
  for (const RunInfo& r : infos) {
    groups["all"].push_back(&r);
    if (r.group != "ungrouped") groups[r.group].push_back(&r);
  }
  Json group_json = Json::array();
  for (const auto& [name, members] : groups) {
    std::vector<double> b, oo;
    for (const RunInfo* r : members) {
      const auto bv = r->agg.at("bAUC");
      const auto ov = r->agg.at("oAUC");
      if (bv && ov) {
        b.push_back(*bv);
        oo.push_back(*ov);
      }
    }
    const auto rho = metrics::spearman(b, oo);
    const auto k = metrics::ols_slope(b, oo);
    group_json.push_back(Json{{"group", name},
                              {"runs", members.size()},
                              {"points", b.size()},
                              {"spearman_bauc_oauc", optional_json(rho)},
                              {"spearman_undefined", !rho.has_value()},
                              {"ols_slope_oauc_on_bauc", optional_json(k)},
                              {"ols_slope_undefined", !k.has_value()}});
  }
  write_file(out / "scatter.csv", scatter.str());
  write_file(out / "trends.csv", trends.str());
  write_file(out / "pd_os.csv", pdos.str());
  Json analysis{{"runs", infos.size()}, {"groups", group_json}};
  write_file(out / "analysis.json", analysis.dump(2) + "\n");
  return analysis;
}

Json cmd_synth(const SynthOptions& o) {
  const engine::DriftGeneratorSpec spec = engine::drift_spec_from_json(engine::load_json_file(o.spec_path));
  const engine::GeneratedStream stream = engine::generate_drift_stream(spec);
  const std::vector<data::RawRecord> records = stream.raw_records();
  std::ostringstream csv;
  csv << "id,click,hour";
  for (const std::string& f : stream.field_names) csv << ',' << f;
  csv << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    csv << i << ',' << records[i].label << ',' << records[i].hour_stamp;
    for (const std::string& tok : records[i].fields) csv << ',' << tok;
    csv << '\n';
  }
  const fs::path out(o.out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file(out, csv.str());
  Json oracle{{"generator", engine::to_json(spec)},
              {"hour_stamps", stream.hour_stamps},
              {"angle", stream.angle},
              {"hour_bias", stream.hour_bias},
              {"oracle_auc", stream.oracle_auc},
              {"positive_rate", stream.positive_rate}};
  write_file(out.string() + ".oracle.json", oracle.dump(2) + "\n");
  return Json{{"records", records.size()}, {"hours", spec.total_hours}, {"fields", spec.num_fields},
              {"csv", o.out_path}, {"oracle", o.out_path + ".oracle.json"}};
}

}  // namespace streamctr::cli
