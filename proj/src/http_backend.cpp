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

#include "omnieval/http_backend.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "omnieval/errors.hpp"
#include "omnieval/text.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

std::string base64(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_for(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "png") return "image/png";
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "gif") return "image/gif";
  if (ext == "webp") return "image/webp";
  if (ext == "bmp") return "image/bmp";
  return "application/octet-stream";
}

json message_content(const Turn& turn) {
  if (turn.attachments.empty()) return turn.text;
  json parts = json::array();
  parts.push_back({{"type", "text"}, {"text", turn.text}});
  for (const auto& path : turn.attachments) {
    parts.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", image_data_uri(path)}}}});
  }
  return parts;
}

const json& require(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw MalformedReply(std::string(what) + ": missing field '" + key + "'");
  }
  return *it;
}

const json& first_choice(const json& reply) {
  if (!reply.is_object()) throw MalformedReply("reply is not a JSON object");
  const json& choices = require(reply, "choices", "reply");
  if (!choices.is_array() || choices.empty() || !choices[0].is_object()) {
    throw MalformedReply("reply: 'choices' must be a non-empty array");
  }
  return choices[0];
}

double retry_after_seconds(const httplib::Result& res) {
  if (!res->has_header("Retry-After")) return 0.0;
  try {
    return std::max(0.0, std::stod(res->get_header_value("Retry-After")));
  } catch (const std::exception&) {
    return 0.0;
  }
}

}  // namespace

std::string image_data_uri(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AttachmentError("cannot read image attachment '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return "data:" + mime_for(path) + ";base64," + base64(buf.str());
}

json build_chat_request(const std::string& model, const PromptBundle& bundle,
                        const GenerationOptions& options) {
  json messages = json::array();
  if (bundle.system_text) {
    messages.push_back({{"role", "system"}, {"content", *bundle.system_text}});
  }
  for (const auto& turn : bundle.turns) {
    messages.push_back(
        {{"role", std::string(to_string(turn.role))}, {"content", message_content(turn)}});
  }
  const DecodingMode mode = options.effective_mode();
  json body = {{"model", model},
               {"messages", std::move(messages)},
               {"temperature", mode == DecodingMode::kGreedy ? 0.0 : options.temperature},
               {"max_tokens", options.max_new_tokens}};
  if (!options.stop_sequences.empty()) body["stop"] = options.stop_sequences;
  if (options.seed) body["seed"] = *options.seed;
  if (mode == DecodingMode::kBeam) body["use_beam_search"] = true;
  return body;
}

json build_loglikelihood_request(const std::string& model, std::string_view context,
                                 std::string_view continuation) {
  return {{"model", model},
          {"prompt", std::string(context) + std::string(continuation)},
          {"max_tokens", 0},
          {"temperature", 0.0},
          {"echo", true},
          {"logprobs", 1}};
}

ModelResponse parse_chat_reply(const json& reply) {
  const json& choice = first_choice(reply);
  const json& message = require(choice, "message", "choice");
  if (!message.is_object()) throw MalformedReply("choice: 'message' is not an object");
  ModelResponse r;
  const json& content = require(message, "content", "message");
  if (content.is_string()) {
    r.text = content.get<std::string>();
  } else if (!content.is_null()) {
    throw MalformedReply("message: 'content' is not a string");
  }

  auto reason = choice.find("finish_reason");
  const std::string why =
      reason == choice.end() || !reason->is_string() ? "stop" : reason->get<std::string>();
  if (why == "length") {
    r.finish_reason = FinishReason::kLength;
  } else if (why == "stop" || why == "eos" || why == "tool_calls") {
    r.finish_reason = FinishReason::kStop;
  } else {
    r.finish_reason = FinishReason::kError;
  }

  if (auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object()) {
    if (auto content_lp = lp->find("content");
        content_lp != lp->end() && content_lp->is_array()) {
      std::vector<TokenLogprob> tokens;
      for (const auto& t : *content_lp) {
        if (!t.contains("token") || !t.contains("logprob") || !t["logprob"].is_number()) {
          throw MalformedReply("logprobs.content entry lacks token/logprob");
        }
        tokens.push_back({t["token"].get<std::string>(), t["logprob"].get<double>()});
      }
      r.token_logprobs = std::move(tokens);
    }
  }
  if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
    r.prompt_tokens = usage->value("prompt_tokens", std::int64_t{0});
    r.completion_tokens = usage->value("completion_tokens", std::int64_t{0});
  }
  return r;
}

LoglikelihoodResult parse_loglikelihood_reply(const json& reply,
                                              std::string_view context,
                                              std::string_view continuation) {
  const json& choice = first_choice(reply);
  const json& lp = require(choice, "logprobs", "choice");
  if (!lp.is_object()) throw MalformedReply("choice: 'logprobs' is not an object");
  const json& tokens = require(lp, "tokens", "logprobs");
  const json& logprobs = require(lp, "token_logprobs", "logprobs");
  const json& offsets = require(lp, "text_offset", "logprobs");
  if (!tokens.is_array() || !logprobs.is_array() || !offsets.is_array() ||
      tokens.size() != logprobs.size() || tokens.size() != offsets.size()) {
    throw MalformedReply("logprobs: tokens, token_logprobs and text_offset must be "
                         "arrays of equal length");
  }
  std::vector<EchoedToken> echoed;
  echoed.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].is_string() || !offsets[i].is_number_integer() ||
        offsets[i].get<std::int64_t>() < 0) {
      throw MalformedReply("logprobs: bad token or offset at position " +
                           std::to_string(i));
    }
    EchoedToken t;
    t.token = tokens[i].get<std::string>();
    if (logprobs[i].is_number()) {
      t.logprob = logprobs[i].get<double>();
    } else if (!logprobs[i].is_null()) {
      throw MalformedReply("logprobs: non-numeric logprob at position " +
                           std::to_string(i));
    }
    t.char_offset = offsets[i].get<std::size_t>();
    echoed.push_back(std::move(t));
  }
  const std::size_t context_chars = utf8_length(context);
  return sum_continuation_logprobs(echoed, context_chars,
                                   context_chars + utf8_length(continuation));
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  capabilities().validate();
  const auto scheme = config_.base_url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("base_url must include a scheme: '" + config_.base_url + "'");
  }
  const auto path = config_.base_url.find('/', scheme + 3);
  host_ = config_.base_url.substr(0, path);
  if (path != std::string::npos) {
    path_prefix_ = config_.base_url.substr(path);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (config_.model_name.empty()) throw ConfigError("model_name must be set");
}

BackendCapabilities HttpBackend::capabilities() const {
  return {config_.supports_generation, config_.supports_loglikelihood,
          config_.supports_images, config_.model_name};
}

json HttpBackend::post(const std::string& endpoint, const json& body) const {
  httplib::Client client(host_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  auto res = client.Post(path_prefix_ + endpoint, headers, body.dump(),
                         "application/json");
  if (!res) {
    throw TransportError("POST " + endpoint + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status == 429) throw RateLimited(retry_after_seconds(res));
  if (res->status >= 400 && res->status < 500) {
    throw BackendRefused(res->status, res->body.substr(0, 512));
  }
  if (res->status >= 500) {
    throw TransportError("POST " + endpoint + " returned status " +
                         std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw MalformedReply(std::string("reply is not JSON: ") + e.what());
  }
}

ModelResponse HttpBackend::do_generate(const PromptBundle& bundle,
                                       const GenerationOptions& options) {
  const json body = build_chat_request(config_.model_name, bundle, options);
  const auto start = std::chrono::steady_clock::now();
  ModelResponse r = parse_chat_reply(post("/v1/chat/completions", body));
  r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  return r;
}

LoglikelihoodResult HttpBackend::do_loglikelihood(std::string_view context,
                                                  std::string_view continuation) {
  const json body = build_loglikelihood_request(config_.model_name, context, continuation);
  return parse_loglikelihood_reply(post("/v1/completions", body), context, continuation);
}

}  // namespace omnieval
