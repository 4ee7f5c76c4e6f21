// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "streamctr/config.h"

#include <fstream>
#include <set>

#include "streamctr/errors.h"

namespace streamctr::engine {
namespace {

// Reads keys of one JSON object and rejects anything left unread.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where(key) + ": wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  template <typename T>
  void get_positive_count(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_integer() || (!it->is_number_unsigned() && it->template get<std::int64_t>() < 0)) {
      throw ConfigError(where(key) + ": expected a non-negative integer");
    }
    out = it->template get<T>();
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + where(it.key().c_str()) + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string kind_name(nn::NormKind k) {
  switch (k) {
    case nn::NormKind::kNone: return "none";
    case nn::NormKind::kBatch: return "batch";
    case nn::NormKind::kLayer: return "layer";
  }
  return "none";
}

nn::NormKind kind_from_name(const std::string& s, const std::string& path) {
  if (s == "none") return nn::NormKind::kNone;
  if (s == "batch") return nn::NormKind::kBatch;
  if (s == "layer") return nn::NormKind::kLayer;
  throw ConfigError(path + ".kind: expected none|batch|layer, got '" + s + "'");
}

}  // namespace

Json to_json(const nn::NormConfig& cfg) {
  return Json{{"kind", kind_name(cfg.kind)}, {"use_mean", cfg.use_mean}, {"use_var", cfg.use_var},
              {"use_scale", cfg.use_scale}, {"use_shift", cfg.use_shift}, {"epsilon", cfg.epsilon},
              {"momentum", cfg.momentum}};
}

nn::NormConfig norm_config_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return nn::NormConfig::from_preset(j.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  ObjectReader r(j, path);
  nn::NormConfig cfg;
  std::string kind = kind_name(cfg.kind);
  r.get("kind", kind);
  cfg.kind = kind_from_name(kind, path);
  r.get("use_mean", cfg.use_mean);
  r.get("use_var", cfg.use_var);
  r.get("use_scale", cfg.use_scale);
  r.get("use_shift", cfg.use_shift);
  r.get("epsilon", cfg.epsilon);
  r.get("momentum", cfg.momentum);
  r.finish();
  return cfg;
}

Json to_json(const RunConfig& cfg) {
  Json model{{"kind", models::to_string(cfg.model.kind)},
             {"embed_dim", cfg.model.embed_dim},
             {"mlp_widths", cfg.model.mlp_widths},
             {"dropout", cfg.model.dropout},
             {"norm_embed", to_json(cfg.model.norm_embed)},
             {"norm_mlp", to_json(cfg.model.norm_mlp)},
             {"l2_embed", cfg.model.l2_embed},
             {"l2_mlp", cfg.model.l2_mlp},
             {"embed_init_scale", cfg.model.embed_init_scale}};
  Json optim{{"kind", optim::to_string(cfg.optim.kind)},
             {"learning_rate", cfg.optim.learning_rate},
             {"beta1", cfg.optim.beta1},
             {"beta2", cfg.optim.beta2},
             {"rho", cfg.optim.rho},
             {"eps", cfg.optim.eps},
             {"weight_decay", cfg.optim.weight_decay}};
  Json replay{{"enabled", cfg.replay.enabled},
              {"capacity", cfg.replay.capacity},
              {"mix_ratio", cfg.replay.mix_ratio},
              {"policy", to_string(cfg.replay.policy)}};
  Json eval{{"online", cfg.eval.online},
            {"current", cfg.eval.current},
            {"backward", cfg.eval.backward},
            {"initial", cfg.eval.initial},
            {"first_backward", cfg.eval.first_backward == FirstBackward::kSkip ? "skip" : "pretrain_test"},
            {"weighting", metrics::to_string(cfg.eval.weighting)}};
  Json j{{"schema_version", kConfigSchemaVersion},
         {"model", model},
         {"optim", optim},
         {"stream_learning_rate", nullptr},
         {"batch_size", cfg.batch_size},
         {"pretrain_epochs", cfg.pretrain_epochs},
         {"stream_epochs_per_hour", cfg.stream_epochs_per_hour},
         {"seed", cfg.seed},
         {"reset_optimizer_each_hour", cfg.reset_optimizer_each_hour},
         {"replay", replay},
         {"eval", eval},
         {"eval_chunk", cfg.eval_chunk},
         {"trace_hashes", cfg.trace_hashes}};
  if (cfg.stream_learning_rate.has_value()) j["stream_learning_rate"] = *cfg.stream_learning_rate;
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig cfg;
  ObjectReader r(j, "");
  int version = kConfigSchemaVersion;
  r.get("schema_version", version);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  if (const Json* m = r.child("model")) {
    ObjectReader mr(*m, "model");
    std::string kind = models::to_string(cfg.model.kind);
    mr.get("kind", kind);
    cfg.model.kind = models::model_kind_from_string(kind);
    mr.get_positive_count("embed_dim", cfg.model.embed_dim);
    mr.get("mlp_widths", cfg.model.mlp_widths);
    mr.get("dropout", cfg.model.dropout);
    if (const Json* n = mr.child("norm_embed")) cfg.model.norm_embed = norm_config_from_json(*n, "model.norm_embed");
    if (const Json* n = mr.child("norm_mlp")) cfg.model.norm_mlp = norm_config_from_json(*n, "model.norm_mlp");
    mr.get("l2_embed", cfg.model.l2_embed);
    mr.get("l2_mlp", cfg.model.l2_mlp);
    mr.get("embed_init_scale", cfg.model.embed_init_scale);
    mr.finish();
  }
  if (const Json* o = r.child("optim")) {
    ObjectReader orr(*o, "optim");
    std::string kind = optim::to_string(cfg.optim.kind);
    orr.get("kind", kind);
    cfg.optim.kind = optim::optim_kind_from_string(kind);
    orr.get("learning_rate", cfg.optim.learning_rate);
    orr.get("beta1", cfg.optim.beta1);
    orr.get("beta2", cfg.optim.beta2);
    orr.get("rho", cfg.optim.rho);
    orr.get("eps", cfg.optim.eps);
    orr.get("weight_decay", cfg.optim.weight_decay);
    orr.finish();
  }
  if (const Json* s = r.child("stream_learning_rate"); s != nullptr && !s->is_null()) {
    if (!s->is_number()) throw ConfigError("stream_learning_rate: expected a number or null");
    cfg.stream_learning_rate = s->get<double>();
  }
  r.get_positive_count("batch_size", cfg.batch_size);
  r.get_positive_count("pretrain_epochs", cfg.pretrain_epochs);
  r.get_positive_count("stream_epochs_per_hour", cfg.stream_epochs_per_hour);
  r.get_positive_count("seed", cfg.seed);
  r.get("reset_optimizer_each_hour", cfg.reset_optimizer_each_hour);
  if (const Json* rp = r.child("replay")) {
    ObjectReader rr(*rp, "replay");
    rr.get("enabled", cfg.replay.enabled);
    rr.get_positive_count("capacity", cfg.replay.capacity);
    rr.get("mix_ratio", cfg.replay.mix_ratio);
    std::string policy = to_string(cfg.replay.policy);
    rr.get("policy", policy);
    cfg.replay.policy = replay_policy_from_string(policy);
    rr.finish();
  }
  if (const Json* e = r.child("eval")) {
    ObjectReader er(*e, "eval");
    er.get("online", cfg.eval.online);
    er.get("current", cfg.eval.current);
    er.get("backward", cfg.eval.backward);
    er.get("initial", cfg.eval.initial);
    std::string first = cfg.eval.first_backward == FirstBackward::kSkip ? "skip" : "pretrain_test";
    er.get("first_backward", first);
    if (first == "skip") {
      cfg.eval.first_backward = FirstBackward::kSkip;
    } else if (first == "pretrain_test") {
      cfg.eval.first_backward = FirstBackward::kPretrainTest;
    } else {
      throw ConfigError("eval.first_backward: expected pretrain_test|skip, got '" + first + "'");
    }
    std::string weighting = metrics::to_string(cfg.eval.weighting);
    er.get("weighting", weighting);
    cfg.eval.weighting = metrics::weighting_from_string(weighting);
    er.finish();
  }
  r.get_positive_count("eval_chunk", cfg.eval_chunk);
  r.get("trace_hashes", cfg.trace_hashes);
  r.finish();
  cfg.validate();
  return cfg;
}

Json to_json(const DriftGeneratorSpec& s) {
  return Json{{"schema_version", kConfigSchemaVersion},
              {"num_fields", s.num_fields},
              {"cardinalities", s.cardinalities},
              {"default_cardinality", s.default_cardinality},
              {"total_hours", s.total_hours},
              {"samples_per_hour", s.samples_per_hour},
              {"seed", s.seed},
              {"static_scale", s.static_scale},
              {"drift_scale", s.drift_scale},
              {"interaction_scale", s.interaction_scale},
              {"interaction_dim", s.interaction_dim},
              {"rotation_per_hour", s.rotation_per_hour},
              {"mode_angles", s.mode_angles},
              {"mode_period", s.mode_period},
              {"angle_jitter", s.angle_jitter},
              {"base_bias", s.base_bias},
              {"label_prior", s.label_prior},
              {"active_fraction", s.active_fraction},
              {"turnover_rate", s.turnover_rate},
              {"zipf_exponent", s.zipf_exponent}};
}

DriftGeneratorSpec drift_spec_from_json(const Json& j) {
  DriftGeneratorSpec s;
  ObjectReader r(j, "");
  int version = kConfigSchemaVersion;
  r.get("schema_version", version);
  if (version != kConfigSchemaVersion) throw ConfigError("generator schema_version " + std::to_string(version) + " is not supported");
  r.get_positive_count("num_fields", s.num_fields);
  r.get("cardinalities", s.cardinalities);
  r.get("default_cardinality", s.default_cardinality);
  r.get("total_hours", s.total_hours);
  r.get_positive_count("samples_per_hour", s.samples_per_hour);
  r.get_positive_count("seed", s.seed);
  r.get("static_scale", s.static_scale);
  r.get("drift_scale", s.drift_scale);
  r.get("interaction_scale", s.interaction_scale);
  r.get_positive_count("interaction_dim", s.interaction_dim);
  r.get("rotation_per_hour", s.rotation_per_hour);
  r.get("mode_angles", s.mode_angles);
  r.get("mode_period", s.mode_period);
  r.get("angle_jitter", s.angle_jitter);
  r.get("base_bias", s.base_bias);
  r.get("label_prior", s.label_prior);
  r.get("active_fraction", s.active_fraction);
  r.get("turnover_rate", s.turnover_rate);
  r.get("zipf_exponent", s.zipf_exponent);
  r.finish();
  s.validate();
  return s;
}

void set_path(Json& j, const std::string& path, Json value) {
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("key path '" + path + "' has an empty component");
    if (!node->is_object()) *node = Json::object();
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void apply_override(Json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key.path=value");
  }
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_path(j, std::string(assignment.substr(0, eq)), std::move(value));
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return j;
}

std::vector<Preset> free_lunch_presets() {
  std::vector<Preset> out;
  out.push_back({"mlp_norm_none", "no normalization inside the MLP",
                 Json{{"model", {{"norm_mlp", to_json(nn::NormConfig::none())}}}}});
  out.push_back({"dropout_zero", "dropout disabled", Json{{"model", {{"dropout", 0.0}}}}});
  out.push_back({"embed_l2_online", "no embedding L2 (favours oAUC)", Json{{"model", {{"l2_embed", 0.0}}}}});
  out.push_back({"embed_l2_generalization", "small embedding L2 (favours iAUC)",
                 Json{{"model", {{"l2_embed", 5e-6}}}}});
  out.push_back({"batch_size_saturating", "batch size where oAUC stops improving", Json{{"batch_size", 5000}}});
  out.push_back({"mlp_knee", "MLP depth and width at the oAUC saturation point",
                 Json{{"model", {{"mlp_widths", {400, 400, 400}}}}}});
  Json combined = Json::object();
  for (const char* name : {"mlp_norm_none", "dropout_zero", "embed_l2_online", "batch_size_saturating", "mlp_knee"}) {
    for (const Preset& p : out) {
      if (p.name == name) combined.merge_patch(p.patch);
    }
  }
  out.push_back({"free_lunch", "all online-favouring presets together", combined});
  return out;
}

const Preset& find_preset(const std::string& name) {
  static const std::vector<Preset> presets = free_lunch_presets();
  for (const Preset& p : presets) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

RunConfig apply_preset(const RunConfig& base, const Preset& preset) {
  Json j = to_json(base);
  j.merge_patch(preset.patch);
  return run_config_from_json(j);
}

}  // namespace streamctr::engine
