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

#include "omnieval/stub_backend.hpp"

#include <fstream>
#include <thread>

#include "omnieval/errors.hpp"
#include "omnieval/text.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

StubAction action_from_json(const json& j) {
  if (j.is_string()) return StubAction::reply(j.get<std::string>());
  if (!j.is_object() || !j.contains("error")) {
    throw ConfigError("stub action must be a string or {\"error\": ...}");
  }
  const auto kind = j["error"].get<std::string>();
  const double retry = j.value("retry_after", 0.0);
  if (kind == "transport") return StubAction::fail(StubAction::Kind::kTransportError);
  if (kind == "rate_limited") return StubAction::fail(StubAction::Kind::kRateLimited, retry);
  if (kind == "refused") return StubAction::fail(StubAction::Kind::kRefused);
  if (kind == "malformed") return StubAction::fail(StubAction::Kind::kMalformed);
  throw ConfigError("unknown stub error kind '" + kind + "'");
}

// Splits text into chunks of leading whitespace plus a non-space run, with
// code-point offsets.
std::vector<EchoedToken> chunk(std::string_view text) {
  std::vector<EchoedToken> out;
  std::size_t i = 0;
  std::size_t chars = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
  while (i < text.size()) {
    const std::size_t start = i;
    while (i < text.size() && is_space(text[i])) ++i;
    while (i < text.size() && !is_space(text[i])) ++i;
    EchoedToken t;
    t.token = std::string(text.substr(start, i - start));
    t.char_offset = chars;
    chars += utf8_length(t.token);
    t.logprob = StubBackend::synthetic_logprob(t.token);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

class StubBackend::InFlight {
 public:
  explicit InFlight(StubBackend& b) : b_(b) {
    const auto now = ++b_.in_flight_;
    auto seen = b_.max_in_flight_.load();
    while (now > seen && !b_.max_in_flight_.compare_exchange_weak(seen, now)) {
    }
  }
  ~InFlight() { --b_.in_flight_; }
  InFlight(const InFlight&) = delete;
  InFlight& operator=(const InFlight&) = delete;

 private:
  StubBackend& b_;
};

StubScript stub_script_from_json(const json& j) {
  StubScript s;
  try {
    if (auto it = j.find("responses"); it != j.end()) {
      for (const auto& [id, v] : it->items()) {
        std::vector<StubAction> actions;
        if (v.is_array()) {
          for (const auto& a : v) actions.push_back(action_from_json(a));
        } else {
          actions.push_back(action_from_json(v));
        }
        s.replies[id] = std::move(actions);
      }
    }
    if (auto it = j.find("logprobs"); it != j.end()) {
      for (const auto& e : *it) {
        const auto cont = e.at("continuation").get<std::string>();
        LoglikelihoodResult r{
            e.at("logprob").get<double>(), e.value("tokens", std::int64_t{1}),
            e.value("chars", static_cast<std::int64_t>(utf8_length(cont)))};
        s.logprobs[{e.value("context", std::string("*")), cont}] = r;
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stub script: ") + e.what());
  }
  return s;
}

StubScript load_stub_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stub script " + path.string());
  try {
    return stub_script_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("stub script " + path.string() + ": " + e.what());
  }
}

StubBackend::StubBackend(StubScript script, BackendCapabilities caps)
    : script_(std::move(script)), caps_(std::move(caps)) {
  caps_.validate();
}

void StubBackend::set_latency(std::chrono::milliseconds min,
                              std::chrono::milliseconds max, std::uint64_t seed) {
  min_latency_ = min;
  max_latency_ = std::max(min, max);
  latency_seed_ = seed;
}

void StubBackend::reset_counters() {
  generate_calls_ = 0;
  loglikelihood_calls_ = 0;
  max_in_flight_ = 0;
}

double StubBackend::synthetic_logprob(std::string_view chunk) {
  return -0.25 - static_cast<double>(fnv1a(chunk) % 1000) / 200.0;
}

void StubBackend::pause(std::string_view key) const {
  if (max_latency_.count() <= 0) return;
  const auto span = static_cast<std::uint64_t>((max_latency_ - min_latency_).count()) + 1;
  const auto ms = min_latency_.count() +
                  static_cast<std::int64_t>(fnv1a(key, latency_seed_) % span);
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

ModelResponse StubBackend::do_generate(const PromptBundle& bundle,
                                       const GenerationOptions&) {
  InFlight guard(*this);
  ++generate_calls_;
  pause(bundle.item_id);

  std::optional<StubAction> action;
  if (auto it = script_.replies.find(bundle.item_id);
      it != script_.replies.end() && !it->second.empty()) {
    std::lock_guard lock(mu_);
    std::size_t& cursor = cursor_[bundle.item_id];
    action = it->second[std::min(cursor, it->second.size() - 1)];
    ++cursor;
  }

  ModelResponse r;
  if (!action) {
    r.text = bundle.final_turn().text;
  } else {
    switch (action->kind) {
      case StubAction::Kind::kReply:
        r.text = action->text;
        break;
      case StubAction::Kind::kTransportError:
        throw TransportError("stub: scripted transport failure");
      case StubAction::Kind::kRateLimited:
        throw RateLimited(action->retry_after_s);
      case StubAction::Kind::kRefused:
        throw BackendRefused(400, "stub: scripted refusal");
      case StubAction::Kind::kMalformed:
        throw MalformedReply("stub: scripted malformed reply");
    }
  }
  r.finish_reason = FinishReason::kStop;
  r.prompt_tokens = static_cast<std::int64_t>(tokenize(bundle.final_turn().text).size());
  r.completion_tokens = static_cast<std::int64_t>(tokenize(r.text).size());
  return r;
}

LoglikelihoodResult StubBackend::do_loglikelihood(std::string_view context,
                                                  std::string_view continuation) {
  InFlight guard(*this);
  ++loglikelihood_calls_;
  pause(std::string(context) + std::string(continuation));

  const std::string cont(continuation);
  if (auto it = script_.logprobs.find({std::string(context), cont});
      it != script_.logprobs.end()) {
    return it->second;
  }
  if (auto it = script_.logprobs.find({"*", cont}); it != script_.logprobs.end()) {
    return it->second;
  }
  const std::string full = std::string(context) + cont;
  const auto tokens = chunk(full);
  const std::size_t context_chars = utf8_length(context);
  return sum_continuation_logprobs(tokens, context_chars,
                                   context_chars + utf8_length(continuation));
}

}  // namespace omnieval
