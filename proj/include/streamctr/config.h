// Copyright 2026 The streamctr Authors.
// SPDX-License-Identifier: Apache-2.0
//
// JSON form of run and generator configs. Missing keys keep their defaults;
// unknown keys and wrong types raise ConfigError with the offending path.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streamctr/drift_generator.h"
#include "streamctr/engine.h"

namespace streamctr::engine {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

Json to_json(const nn::NormConfig& cfg);
// Accepts a preset name (none|bn|ln|simple_ln|vo_ln) or an object.
nn::NormConfig norm_config_from_json(const Json& j, const std::string& path = "norm");

Json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const Json& j);

Json to_json(const DriftGeneratorSpec& spec);
DriftGeneratorSpec drift_spec_from_json(const Json& j);

// Writes value at a dotted key path, creating intermediate objects.
void set_path(Json& j, const std::string& path, Json value);

// Parses "a.b.c=value" and writes value (JSON literal, or a bare string) at
// that path. Intermediate objects are created as needed.
void apply_override(Json& j, std::string_view assignment);

Json load_json_file(const std::string& path);

struct Preset {
  std::string name;
  std::string description;
  Json patch;  // JSON merge patch over to_json(RunConfig)
};

// Tuning presets for streaming performance. Each is data applied over a
// base config; "free_lunch" combines the others.
std::vector<Preset> free_lunch_presets();
const Preset& find_preset(const std::string& name);
RunConfig apply_preset(const RunConfig& base, const Preset& preset);

}  // namespace streamctr::engine
