// Copyright 2026 The Longform RL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Run configuration: a JSON tree of defaults overlaid by a YAML file and
// `section.key=value` overrides.

#ifndef LONGFORM_ORCHESTRATOR_CONFIG_H_
#define LONGFORM_ORCHESTRATOR_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "longform/common/jsonl.h"

namespace longform::orchestrator {

// Every tunable with its default value.
Json DefaultConfig();

// True for sections whose keys are user-chosen (string -> string).
bool IsOpenMap(std::string_view dotted_path);

// Overlays a parsed YAML (or JSON) document onto `config`. Scalars take the
// type of the default they replace. ConfigError names the dotted path of an
// unknown key or a mistyped value.
void MergeYamlText(Json& config, std::string_view yaml_text);

// Applies one `a.b.c=value` override.
void ApplyOverride(Json& config, std::string_view assignment);

// Defaults, then the file (when given), then the overrides in order.
Json LoadConfig(const std::optional<std::filesystem::path>& path,
                const std::vector<std::string>& overrides);

// Typed lookup of a dotted path; ConfigError when absent.
const Json& At(const Json& config, std::string_view dotted_path);

}  // namespace longform::orchestrator

#endif  // LONGFORM_ORCHESTRATOR_CONFIG_H_
