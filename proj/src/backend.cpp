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

#include "omnieval/backend.hpp"

#include <cmath>

#include "omnieval/errors.hpp"

namespace omnieval {

using nlohmann::json;

std::string_view to_string(Role r) {
  return r == Role::kUser ? "user" : "assistant";
}

bool PromptBundle::has_attachments() const {
  for (const auto& t : turns) {
    if (!t.attachments.empty()) return true;
  }
  return false;
}

json bundle_to_json(const PromptBundle& bundle) {
  json turns = json::array();
  for (const auto& t : bundle.turns) {
    json turn = {{"role", std::string(to_string(t.role))}, {"text", t.text}};
    if (!t.attachments.empty()) turn["attachments"] = t.attachments;
    turns.push_back(std::move(turn));
  }
  json j = {{"item_id", bundle.item_id}, {"turns", std::move(turns)}};
  if (bundle.system_text) j["system_text"] = *bundle.system_text;
  return j;
}

std::string_view to_string(DecodingMode m) {
  switch (m) {
    case DecodingMode::kGreedy: return "greedy";
    case DecodingMode::kSample: return "sample";
    case DecodingMode::kBeam: return "beam";
  }
  return "greedy";
}

std::optional<DecodingMode> decoding_mode_from_string(std::string_view s) {
  if (s == "greedy") return DecodingMode::kGreedy;
  if (s == "sample") return DecodingMode::kSample;
  if (s == "beam") return DecodingMode::kBeam;
  return std::nullopt;
}

void GenerationOptions::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be a finite value >= 0");
  }
  if (max_new_tokens <= 0) throw ConfigError("max_new_tokens must be positive");
}

json options_to_json(const GenerationOptions& o) {
  json j = {{"temperature", o.temperature},
            {"max_new_tokens", o.max_new_tokens},
            {"stop_sequences", o.stop_sequences},
            {"decoding_mode", std::string(to_string(o.decoding_mode))}};
  if (o.seed) j["seed"] = *o.seed;
  return j;
}

GenerationOptions options_from_json(const json& j) {
  GenerationOptions o;
  try {
    o.temperature = j.value("temperature", o.temperature);
    o.max_new_tokens = j.value("max_new_tokens", o.max_new_tokens);
    o.stop_sequences = j.value("stop_sequences", o.stop_sequences);
    if (auto it = j.find("decoding_mode"); it != j.end()) {
      auto m = decoding_mode_from_string(it->get<std::string>());
      if (!m) throw ConfigError("unknown decoding_mode '" + it->get<std::string>() + "'");
      o.decoding_mode = *m;
    }
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
      o.seed = it->get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generation options: ") + e.what());
  }
  o.validate();
  return o;
}

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::kStop: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kError: return "error";
  }
  return "error";
}

json response_to_json(const ModelResponse& r) {
  json j = {{"text", r.text},
            {"finish_reason", std::string(to_string(r.finish_reason))},
            {"prompt_tokens", r.prompt_tokens},
            {"completion_tokens", r.completion_tokens},
            {"latency_ms", r.latency_ms}};
  if (r.token_logprobs) {
    json lp = json::array();
    for (const auto& t : *r.token_logprobs) lp.push_back({t.token, t.logprob});
    j["token_logprobs"] = std::move(lp);
  }
  return j;
}

ModelResponse response_from_json(const json& j) {
  ModelResponse r;
  r.text = j.at("text").get<std::string>();
  const auto reason = j.at("finish_reason").get<std::string>();
  r.finish_reason = reason == "stop"     ? FinishReason::kStop
                    : reason == "length" ? FinishReason::kLength
                                         : FinishReason::kError;
  r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  r.latency_ms = j.value("latency_ms", std::int64_t{0});
  if (auto it = j.find("token_logprobs"); it != j.end()) {
    std::vector<TokenLogprob> lp;
    for (const auto& e : *it) {
      lp.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
    }
    r.token_logprobs = std::move(lp);
  }
  return r;
}

json loglikelihood_to_json(const LoglikelihoodResult& r) {
  return {{"total_logprob", r.total_logprob},
          {"token_count", r.token_count},
          {"continuation_chars", r.continuation_chars}};
}

LoglikelihoodResult loglikelihood_from_json(const json& j) {
  return {j.at("total_logprob").get<double>(),
          j.at("token_count").get<std::int64_t>(),
          j.at("continuation_chars").get<std::int64_t>()};
}

void BackendCapabilities::validate() const {
  if (!supports_generation && !supports_loglikelihood && !supports_images) {
    throw ConfigError("backend '" + model_name +
                      "' declares no capabilities; enable at least one");
  }
}

json capabilities_to_json(const BackendCapabilities& c) {
  return {{"model_name", c.model_name},
          {"supports_generation", c.supports_generation},
          {"supports_loglikelihood", c.supports_loglikelihood},
          {"supports_images", c.supports_images}};
}

ModelResponse Backend::generate(const PromptBundle& bundle,
                                const GenerationOptions& options) {
  const auto caps = capabilities();
  if (!caps.supports_generation) {
    throw UnsupportedCapability("backend '" + caps.model_name +
                                "' does not support generation");
  }
  if (bundle.turns.empty() || bundle.final_turn().role != Role::kUser) {
    throw PreconditionError("prompt bundle must end with a user turn");
  }
  if (bundle.has_attachments() && !caps.supports_images) {
    throw UnsupportedCapability("backend '" + caps.model_name +
                                "' does not accept image attachments");
  }
  return do_generate(bundle, options);
}

LoglikelihoodResult Backend::loglikelihood(std::string_view context,
                                           std::string_view continuation) {
  const auto caps = capabilities();
  if (!caps.supports_loglikelihood) {
    throw UnsupportedCapability("backend '" + caps.model_name +
                                "' does not support loglikelihood scoring");
  }
  if (continuation.empty()) {
    throw PreconditionError("loglikelihood continuation must be non-empty");
  }
  return do_loglikelihood(context, continuation);
}

LoglikelihoodResult sum_continuation_logprobs(std::span<const EchoedToken> tokens,
                                              std::size_t context_chars,
                                              std::size_t total_chars) {
  if (context_chars >= total_chars) {
    throw PreconditionError("continuation is empty");
  }
  LoglikelihoodResult out;
  out.continuation_chars = static_cast<std::int64_t>(total_chars - context_chars);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t end =
        i + 1 < tokens.size() ? tokens[i + 1].char_offset : total_chars;
    if (end < tokens[i].char_offset) {
      throw MalformedReply("token offsets are not monotonic");
    }
    if (end <= context_chars) continue;
    const auto& lp = tokens[i].logprob;
    if (!lp || !std::isfinite(*lp)) {
      throw MalformedReply("missing logprob for continuation token " +
                           std::to_string(i));
    }
    out.total_logprob += *lp;
    ++out.token_count;
  }
  if (out.token_count == 0) {
    throw MalformedReply("no echoed token covers the continuation");
  }
  return out;
}

}  // namespace omnieval
