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

#ifndef OMNIEVAL_HTTP_BACKEND_HPP_
#define OMNIEVAL_HTTP_BACKEND_HPP_

#include <string>
#include <string_view>

#include <json.hpp>

#include "omnieval/backend.hpp"

namespace omnieval {

struct HttpBackendConfig {
  // Scheme, host, optional port and path prefix, e.g. "http://localhost:8000".
  std::string base_url;
  std::string model_name;
  // Environment variable holding the bearer token; unset means no auth header.
  std::string api_key_env = "OMNIEVAL_API_KEY";
  bool supports_generation = true;
  bool supports_loglikelihood = true;
  bool supports_images = false;
  double timeout_s = 120.0;
};

// OpenAI-compatible request bodies. Image attachments become data-URI
// content parts; reading them may throw AttachmentError.
nlohmann::json build_chat_request(const std::string& model,
                                  const PromptBundle& bundle,
                                  const GenerationOptions& options);
nlohmann::json build_loglikelihood_request(const std::string& model,
                                           std::string_view context,
                                           std::string_view continuation);

// Throw MalformedReply when required fields are missing.
ModelResponse parse_chat_reply(const nlohmann::json& reply);
LoglikelihoodResult parse_loglikelihood_reply(const nlohmann::json& reply,
                                              std::string_view context,
                                              std::string_view continuation);

// "data:image/png;base64,...". Throws AttachmentError for unreadable files.
std::string image_data_uri(const std::string& path);

// Chat completions for generate(), completions with echoed prompt logprobs
// for loglikelihood(). Stateless between requests.
class HttpBackend : public Backend {
 public:
  // Throws ConfigError for an unusable base URL or empty capability set.
  explicit HttpBackend(HttpBackendConfig config);

  BackendCapabilities capabilities() const override;
  const HttpBackendConfig& config() const { return config_; }

 protected:
  ModelResponse do_generate(const PromptBundle& bundle,
                            const GenerationOptions& options) override;
  LoglikelihoodResult do_loglikelihood(std::string_view context,
                                       std::string_view continuation) override;

 private:
  nlohmann::json post(const std::string& endpoint, const nlohmann::json& body) const;

  HttpBackendConfig config_;
  std::string host_;         // scheme://host[:port]
  std::string path_prefix_;  // "" or "/prefix"
};

}  // namespace omnieval

#endif  // OMNIEVAL_HTTP_BACKEND_HPP_
