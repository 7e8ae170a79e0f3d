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

#ifndef OMNIEVAL_BACKEND_HPP_
#define OMNIEVAL_BACKEND_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace omnieval {

enum class Role { kUser, kAssistant };

std::string_view to_string(Role r);

struct Turn {
  Role role = Role::kUser;
  std::string text;
  // Image file paths; read and encoded only when a request is sent.
  std::vector<std::string> attachments;

  bool operator==(const Turn&) const = default;
};

// A fully assembled conversation. The last turn is always the user question;
// exemplar turns precede it in user/assistant pairs.
struct PromptBundle {
  std::optional<std::string> system_text;
  std::vector<Turn> turns;
  // Originating dataset item; used by the stub backend and cache keys.
  std::string item_id;

  std::size_t final_turn_index() const { return turns.size() - 1; }
  const Turn& final_turn() const { return turns.back(); }
  bool has_attachments() const;
  bool operator==(const PromptBundle&) const = default;
};

nlohmann::json bundle_to_json(const PromptBundle& bundle);

enum class DecodingMode { kGreedy, kSample, kBeam };

std::string_view to_string(DecodingMode m);
std::optional<DecodingMode> decoding_mode_from_string(std::string_view s);

struct GenerationOptions {
  double temperature = 0.0;
  int max_new_tokens = 512;
  std::vector<std::string> stop_sequences;
  DecodingMode decoding_mode = DecodingMode::kGreedy;
  std::optional<std::int64_t> seed;

  // Zero temperature always decodes greedily.
  DecodingMode effective_mode() const {
    return temperature == 0.0 ? DecodingMode::kGreedy : decoding_mode;
  }
  // Throws ConfigError on a negative temperature or non-positive token limit.
  void validate() const;
};

nlohmann::json options_to_json(const GenerationOptions& options);
GenerationOptions options_from_json(const nlohmann::json& j);

enum class FinishReason { kStop, kLength, kError };

std::string_view to_string(FinishReason f);

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;

  bool operator==(const TokenLogprob&) const = default;
};

struct ModelResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t latency_ms = 0;

  bool operator==(const ModelResponse&) const = default;
};

nlohmann::json response_to_json(const ModelResponse& r);
ModelResponse response_from_json(const nlohmann::json& j);

struct LoglikelihoodResult {
  double total_logprob = 0.0;
  std::int64_t token_count = 0;
  std::int64_t continuation_chars = 0;

  bool operator==(const LoglikelihoodResult&) const = default;
};

nlohmann::json loglikelihood_to_json(const LoglikelihoodResult& r);
LoglikelihoodResult loglikelihood_from_json(const nlohmann::json& j);

struct BackendCapabilities {
  bool supports_generation = true;
  bool supports_loglikelihood = true;
  bool supports_images = true;
  std::string model_name;

  // Throws ConfigError when every support flag is false.
  void validate() const;
  bool operator==(const BackendCapabilities&) const = default;
};

nlohmann::json capabilities_to_json(const BackendCapabilities& c);

// Uniform inference contract. Public entry points check preconditions and
// forward to the do_* hooks. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  // Throws UnsupportedCapability, TransportError, RateLimited, BackendRefused,
  // MalformedReply or AttachmentError.
  ModelResponse generate(const PromptBundle& bundle,
                         const GenerationOptions& options);

  // Sum of the continuation token logprobs given the context. Throws
  // PreconditionError on an empty continuation.
  LoglikelihoodResult loglikelihood(std::string_view context,
                                    std::string_view continuation);

  virtual BackendCapabilities capabilities() const = 0;

 protected:
  virtual ModelResponse do_generate(const PromptBundle& bundle,
                                    const GenerationOptions& options) = 0;
  virtual LoglikelihoodResult do_loglikelihood(std::string_view context,
                                               std::string_view continuation) = 0;
};

// One token of an echoed prompt, as returned by a completions endpoint.
struct EchoedToken {
  std::string token;
  std::optional<double> logprob;
  // Code-point offset of the token start within the echoed text.
  std::size_t char_offset = 0;
};

// Sums the logprobs of the tokens that end past `context_chars`. A token that
// straddles the context/continuation boundary counts toward the continuation.
// Throws MalformedReply on missing or non-finite logprobs in that range, or
// when no token covers the continuation.
LoglikelihoodResult sum_continuation_logprobs(std::span<const EchoedToken> tokens,
                                              std::size_t context_chars,
                                              std::size_t total_chars);

}  // namespace omnieval

#endif  // OMNIEVAL_BACKEND_HPP_
