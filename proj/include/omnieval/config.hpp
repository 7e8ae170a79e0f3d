// Copyright 2026 The omnieval Authors.
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

#ifndef OMNIEVAL_CONFIG_HPP_
#define OMNIEVAL_CONFIG_HPP_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "omnieval/backend.hpp"
#include "omnieval/dataset.hpp"
#include "omnieval/filters.hpp"
#include "omnieval/http_backend.hpp"
#include "omnieval/runner.hpp"

namespace omnieval {

// {"type": "http" | "stub", base_url, model_name, api_key_env, timeout_s,
//  supports_generation, supports_loglikelihood, supports_images, script}
struct BackendDescriptor {
  std::string type = "http";
  HttpBackendConfig http;
  // Stub only: scripted replies and logprobs.
  std::optional<std::filesystem::path> script;
};

// Everything an `eval` invocation needs, as read from the configuration file.
struct EvalSettings {
  RunConfig run;
  BackendDescriptor backend;
  std::optional<BackendDescriptor> extractor;
  std::vector<ExtractionRule> extraction_rules;
  std::optional<std::filesystem::path> dataset;
  DatasetDefaults dataset_defaults;
};

// Throws ConfigError.
BackendDescriptor backend_from_json(const nlohmann::json& j);
EvalSettings settings_from_json(const nlohmann::json& j);
// Relative dataset and stub script paths resolve against the file's
// directory; output and cache directories against the working directory.
EvalSettings load_settings(const std::filesystem::path& path);

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d);

}  // namespace omnieval

#endif  // OMNIEVAL_CONFIG_HPP_
