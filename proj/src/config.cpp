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

#include "omnieval/config.hpp"

#include <fstream>

#include "omnieval/errors.hpp"
#include "omnieval/stub_backend.hpp"

namespace omnieval {

using nlohmann::json;

BackendDescriptor backend_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("backend descriptor must be an object");
  BackendDescriptor d;
  try {
    d.type = j.value("type", std::string("http"));
    if (d.type != "http" && d.type != "stub") {
      throw ConfigError("backend type must be \"http\" or \"stub\", got '" + d.type + "'");
    }
    const bool stub = d.type == "stub";
    auto& h = d.http;
    h.base_url = j.value("base_url", std::string());
    h.model_name = j.value("model_name", std::string(stub ? "stub" : ""));
    h.api_key_env = j.value("api_key_env", h.api_key_env);
    h.timeout_s = j.value("timeout_s", h.timeout_s);
    h.supports_generation = j.value("supports_generation", true);
    h.supports_loglikelihood = j.value("supports_loglikelihood", true);
    h.supports_images = j.value("supports_images", stub);
    if (auto it = j.find("script"); it != j.end() && !it->is_null()) {
      d.script = it->get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend descriptor: ") + e.what());
  }
  return d;
}

EvalSettings settings_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  EvalSettings s;
  RunConfig& c = s.run;
  try {
    const auto mode = j.value("mode", std::string("generate"));
    if (mode == "generate") {
      c.mode = RunMode::kGenerate;
    } else if (mode == "ppl") {
      c.mode = RunMode::kPpl;
    } else {
      throw ConfigError("mode must be \"generate\" or \"ppl\", got '" + mode + "'");
    }
    const auto shots = j.value("num_shots", 0);
    if (shots < 0) throw ConfigError("num_shots must be >= 0");
    c.num_shots = static_cast<std::size_t>(shots);
    c.use_cot = j.value("use_cot", c.use_cot);
    c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
    if (auto it = j.find("limit"); it != j.end() && !it->is_null()) {
      c.limit = it->get<std::size_t>();
    }
    if (auto it = j.find("cache_dir"); it != j.end() && !it->is_null()) {
      c.cache_dir = it->get<std::string>();
    }
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (auto it = j.find("generation"); it != j.end()) {
      c.generation = options_from_json(*it);
    }
    if (auto it = j.find("template"); it != j.end()) {
      c.prompt_template = template_from_json(*it);
    }
    if (auto it = j.find("backend"); it != j.end()) s.backend = backend_from_json(*it);
    if (auto it = j.find("extractor"); it != j.end() && !it->is_null()) {
      s.extractor = backend_from_json(*it);
    }
    for (const auto& r : j.value("extraction_rules", json::array())) {
      s.extraction_rules.push_back(rule_from_json(r));
    }
    if (auto it = j.find("dataset"); it != j.end() && !it->is_null()) {
      s.dataset = it->get<std::string>();
    }
    if (auto it = j.find("dataset_defaults"); it != j.end()) {
      auto& d = s.dataset_defaults;
      d.name = it->value("name", d.name);
      if (auto qt = it->find("question_type"); qt != it->end()) {
        d.question_type = question_type_from_string(qt->get<std::string>());
        if (!d.question_type) throw ConfigError("dataset_defaults: unknown question_type");
      }
      d.metrics = it->value("metrics", d.metrics);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration: ") + e.what());
  }
  s.run.validate();
  return s;
}

EvalSettings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  EvalSettings s;
  try {
    s = settings_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("configuration file " + path.string() + ": " + e.what());
  }
  // Inputs named in the file are relative to the file itself.
  const auto base = path.parent_path();
  auto anchor = [&base](std::optional<std::filesystem::path>& p) {
    if (p && p->is_relative()) p = base / *p;
  };
  anchor(s.dataset);
  anchor(s.backend.script);
  if (s.extractor) anchor(s.extractor->script);
  return s;
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& d) {
  if (d.type == "stub") {
    BackendCapabilities caps{d.http.supports_generation, d.http.supports_loglikelihood,
                             d.http.supports_images, d.http.model_name};
    return std::make_unique<StubBackend>(d.script ? load_stub_script(*d.script) : StubScript{},
                                         caps);
  }
  if (d.http.base_url.empty()) throw ConfigError("http backend needs a base_url");
  return std::make_unique<HttpBackend>(d.http);
}

}  // namespace omnieval
