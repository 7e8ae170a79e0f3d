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

#ifndef OMNIEVAL_STUB_BACKEND_HPP_
#define OMNIEVAL_STUB_BACKEND_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "omnieval/backend.hpp"

namespace omnieval {

// One scripted generate() outcome.
struct StubAction {
  enum class Kind { kReply, kTransportError, kRateLimited, kRefused, kMalformed };
  Kind kind = Kind::kReply;
  std::string text;
  double retry_after_s = 0.0;

  static StubAction reply(std::string text) { return {Kind::kReply, std::move(text), 0.0}; }
  static StubAction fail(Kind kind, double retry_after_s = 0.0) {
    return {kind, {}, retry_after_s};
  }
};

struct StubScript {
  // Per item id; actions are consumed in order and the last one repeats.
  std::map<std::string, std::vector<StubAction>> replies;
  // Keyed by (context, continuation); a context of "*" matches any context.
  std::map<std::pair<std::string, std::string>, LoglikelihoodResult> logprobs;
};

// Reads {"responses": {id: text | [action, ...]}, "logprobs": [{context,
// continuation, logprob, tokens, chars}]}; chars defaults to the
// continuation length. An action is a string reply or
// {"error": "transport" | "rate_limited" | "refused" | "malformed",
// "retry_after": seconds}. Throws ConfigError.
StubScript stub_script_from_json(const nlohmann::json& j);
StubScript load_stub_script(const std::filesystem::path& path);

// Deterministic in-process backend for tests and offline runs.
//
// generate(): the scripted action for the bundle's item id, otherwise an echo
// of the last user turn. loglikelihood(): an exact scripted entry, then a
// wildcard-context entry, otherwise a synthetic score where every
// whitespace-led chunk of context+continuation gets a fixed logprob derived
// from its text, summed by the same span logic as the HTTP backend.
class StubBackend : public Backend {
 public:
  explicit StubBackend(StubScript script = {}, BackendCapabilities caps = defaults());

  static BackendCapabilities defaults() { return {true, true, true, "stub"}; }

  BackendCapabilities capabilities() const override { return caps_; }

  // Every call sleeps a pseudo-random duration in [min, max] derived from the
  // request and seed.
  void set_latency(std::chrono::milliseconds min, std::chrono::milliseconds max,
                   std::uint64_t seed = 0);

  std::int64_t generate_calls() const { return generate_calls_; }
  std::int64_t loglikelihood_calls() const { return loglikelihood_calls_; }
  // Largest number of calls observed in flight at once.
  std::int64_t max_in_flight() const { return max_in_flight_; }
  void reset_counters();

  // The synthetic per-chunk logprob.
  static double synthetic_logprob(std::string_view chunk);

 protected:
  ModelResponse do_generate(const PromptBundle& bundle,
                            const GenerationOptions& options) override;
  LoglikelihoodResult do_loglikelihood(std::string_view context,
                                       std::string_view continuation) override;

 private:
  class InFlight;
  void pause(std::string_view key) const;

  StubScript script_;
  BackendCapabilities caps_;
  std::chrono::milliseconds min_latency_{0};
  std::chrono::milliseconds max_latency_{0};
  std::uint64_t latency_seed_ = 0;

  std::mutex mu_;
  std::map<std::string, std::size_t> cursor_;
  std::atomic<std::int64_t> generate_calls_{0};
  std::atomic<std::int64_t> loglikelihood_calls_{0};
  std::atomic<std::int64_t> in_flight_{0};
  std::atomic<std::int64_t> max_in_flight_{0};
};

}  // namespace omnieval

#endif  // OMNIEVAL_STUB_BACKEND_HPP_
