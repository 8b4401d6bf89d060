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

#include "longform/orchestrator/config.h"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include <yaml-cpp/yaml.h>

#include "longform/common/error.h"
#include "longform/common/text.h"

namespace longform::orchestrator {
namespace {

std::vector<std::string> SplitPath(std::string_view dotted) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    const size_t dot = dotted.find('.', start);
    parts.emplace_back(dotted.substr(start, dot - start));
    if (parts.back().empty()) {
      throw ConfigError("malformed key '" + std::string(dotted) + "'");
    }
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

std::string Join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

Json ParseScalar(const Json& current, const std::string& text,
                 const std::string& path) {
  auto bad = [&](std::string_view expected) {
    return ConfigError(path + ": expected " + std::string(expected) +
                       ", got '" + text + "'");
  };
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  switch (current.type()) {
    case Json::value_t::boolean: {
      const std::string lower = ToLower(text);
      if (lower == "true") return true;
      if (lower == "false") return false;
      throw bad("true or false");
    }
    case Json::value_t::number_unsigned: {
      uint64_t value = 0;
      const auto r = std::from_chars(begin, end, value);
      if (r.ec != std::errc() || r.ptr != end) throw bad("a non-negative integer");
      return value;
    }
    case Json::value_t::number_integer: {
      int64_t value = 0;
      const auto r = std::from_chars(begin, end, value);
      if (r.ec != std::errc() || r.ptr != end) throw bad("an integer");
      return value;
    }
    case Json::value_t::number_float: {
      char* stop = nullptr;
      const double value = std::strtod(text.c_str(), &stop);
      if (text.empty() || stop != end || !std::isfinite(value)) {
        throw bad("a number");
      }
      return value;
    }
    case Json::value_t::string:
      return text;
    default:
      throw ConfigError(path + ": is a section, not a value");
  }
}

void MergeNode(Json& target, const YAML::Node& node, const std::string& path) {
  if (node.IsNull()) return;
  if (!node.IsMap()) {
    throw ConfigError((path.empty() ? std::string("config") : path) +
                      ": expected a mapping");
  }
  const bool open = IsOpenMap(path);
  for (const auto& entry : node) {
    const std::string key = entry.first.as<std::string>();
    const std::string child = Join(path, key);
    const YAML::Node& value = entry.second;
    if (open) {
      if (!value.IsScalar()) throw ConfigError(child + ": expected a string");
      target[key] = value.Scalar();
      continue;
    }
    if (!target.contains(key)) throw ConfigError(child + ": unknown key");
    Json& slot = target[key];
    if (slot.is_object()) {
      MergeNode(slot, value, child);
    } else {
      if (!value.IsScalar()) throw ConfigError(child + ": expected a value");
      slot = ParseScalar(slot, value.Scalar(), child);
    }
  }
}

}  // namespace

Json DefaultConfig() {
  return Json::parse(R"({
  "seed": 0,
  "run_dir": "runs/default",
  "corpus": {
    "inputs": {},
    "min_ref_words": 50,
    "exclude_code": true,
    "test_fraction": 0.1
  },
  "reward": {
    "likert_data": "",
    "pairs_data": "",
    "synthetic_examples": 0,
    "synthetic_vocabulary": 40,
    "preset": "tiny",
    "pooling": "mean",
    "max_length": 256,
    "learning_rate": 2e-5,
    "batch_size": 32,
    "epochs": 3,
    "heldout_fraction": 0.2,
    "freeze_encoder": false,
    "weight_decay": 0.0,
    "vocab_max_words": 30000,
    "vocab_min_count": 1,
    "hash_buckets": 512
  },
  "policy": {
    "vocabulary": 20,
    "max_tokens": 32,
    "prompt_slots": 0,
    "init_scale": 0.0,
    "init_path": ""
  },
  "grpo": {
    "prompts": "",
    "synthetic_prompts": 8,
    "group_size": 4,
    "clip_epsilon": 0.2,
    "kl_beta": 0.01,
    "learning_rate": 1e-6,
    "max_prompt_tokens": 1024,
    "max_gen_tokens": 1024,
    "batch_size": 128,
    "advantage_std_floor": 1e-6,
    "token_level_ratio": false,
    "log_ratio_clamp": 80.0,
    "steps": 100,
    "temperature": 1.0,
    "format_gate": true,
    "signal": {
      "name": "rouge_l",
      "model_path": "",
      "embedding_dim": 64,
      "target_words": 12,
      "length_cap_words": 64
    }
  },
  "sft": {
    "data": "",
    "epochs": 3,
    "learning_rate": 1e-5,
    "batch_size": 128,
    "max_tokens": 4096,
    "heldout_fraction": 0.0
  },
  "eval": {
    "prompts": "",
    "responses": "",
    "checkpoints": {},
    "temperature": 1.0,
    "threshold": 4,
    "tie_weight": 0.5,
    "smoothing": 0.5,
    "tolerance": 1e-10,
    "max_iterations": 10000,
    "per_dataset": true,
    "judge": {
      "kind": "recorded",
      "recorded_path": "",
      "model": "gpt-4",
      "temperature": 0.0,
      "max_tokens": 512,
      "timeout_seconds": 120,
      "concurrency": 4,
      "max_retries": 3,
      "initial_backoff_ms": 500,
      "backoff_factor": 2.0,
      "reprompt": true
    }
  },
  "serve": {
    "host": "127.0.0.1",
    "port": 8080,
    "store_dir": "",
    "tokens": {},
    "admin_token": "",
    "cors_origin": "*",
    "sample_per_dataset": 0
  }
})");
}

bool IsOpenMap(std::string_view dotted_path) {
  return dotted_path == "corpus.inputs" || dotted_path == "serve.tokens" ||
         dotted_path == "eval.checkpoints";
}

void MergeYamlText(Json& config, std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  MergeNode(config, root, "");
}

void ApplyOverride(Json& config, std::string_view assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) +
                      "' is not of the form key=value");
  }
  const std::string key(Trim(assignment.substr(0, eq)));
  const std::string text(assignment.substr(eq + 1));
  const std::vector<std::string> parts = SplitPath(key);
  Json* node = &config;
  std::string path;
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    path = Join(path, parts[i]);
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) {
      throw ConfigError(path + ": unknown section");
    }
    node = &(*node)[parts[i]];
  }
  if (IsOpenMap(path)) {
    (*node)[parts.back()] = text;
    return;
  }
  if (!node->contains(parts.back())) throw ConfigError(key + ": unknown key");
  Json& slot = (*node)[parts.back()];
  slot = ParseScalar(slot, text, key);
}

Json LoadConfig(const std::optional<std::filesystem::path>& path,
                const std::vector<std::string>& overrides) {
  Json config = DefaultConfig();
  if (path) {
    std::string text;
    try {
      text = ReadTextFile(*path);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    MergeYamlText(config, text);
  }
  for (const std::string& o : overrides) ApplyOverride(config, o);
  return config;
}

const Json& At(const Json& config, std::string_view dotted_path) {
  const Json* node = &config;
  for (const std::string& part : SplitPath(dotted_path)) {
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError(std::string(dotted_path) + ": missing");
    }
    node = &(*node)[part];
  }
  return *node;
}

}  // namespace longform::orchestrator
