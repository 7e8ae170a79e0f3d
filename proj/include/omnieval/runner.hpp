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

#ifndef OMNIEVAL_RUNNER_HPP_
#define OMNIEVAL_RUNNER_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>
#include <json.hpp>

#include "omnieval/backend.hpp"
#include "omnieval/cache.hpp"
#include "omnieval/dataset.hpp"
#include "omnieval/errors.hpp"
#include "omnieval/estimators.hpp"
#include "omnieval/filters.hpp"
#include "omnieval/prompt.hpp"

namespace omnieval {

enum class RunMode { kGenerate, kPpl };

std::string_view to_string(RunMode m);

struct RunConfig {
  RunMode mode = RunMode::kGenerate;
  std::size_t num_shots = 0;
  bool use_cot = false;
  int concurrency_limit = 4;
  int max_retries = 3;
  int backoff_base_ms = 500;
  std::optional<std::size_t> limit;
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path output_dir = "runs";
  GenerationOptions generation;
  PromptTemplate prompt_template;

  // Throws ConfigError.
  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& c);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct RetryPolicy {
  int max_retries = 3;
  int backoff_base_ms = 500;
  // Defaults to std::this_thread::sleep_for.
  Sleeper sleep;

  // base * 2^attempt, raised to the server's retry-after when larger.
  std::chrono::milliseconds delay(int attempt, double retry_after_s = 0.0) const;
};

// Runs `thunk`, retrying TransportError and RateLimited up to max_retries
// times. Other errors, and the last retryable one, propagate. `retries` (when
// given) receives the number of retries performed.
template <typename Thunk>
auto with_retries(Thunk&& thunk, const RetryPolicy& policy, int* retries = nullptr)
    -> decltype(thunk()) {
  const Sleeper sleep = policy.sleep ? policy.sleep : Sleeper([](auto d) {
    std::this_thread::sleep_for(d);
  });
  for (int attempt = 0;; ++attempt) {
    if (retries != nullptr) *retries = attempt;
    double retry_after = 0.0;
    try {
      return thunk();
    } catch (const RateLimited& e) {
      if (attempt >= policy.max_retries) throw;
      retry_after = e.retry_after_s();
      spdlog::debug("rate limited, retry {} of {}", attempt + 1, policy.max_retries);
    } catch (const TransportError& e) {
      if (attempt >= policy.max_retries) throw;
      spdlog::debug("transport error ({}), retry {} of {}", e.what(), attempt + 1,
                    policy.max_retries);
    }
    sleep(policy.delay(attempt, retry_after));
  }
}

struct ChoiceLogprob {
  char letter = 'A';
  LoglikelihoodResult result;

  // Logprob per continuation character.
  double normalized() const {
    return result.total_logprob / static_cast<double>(result.continuation_chars);
  }
  bool operator==(const ChoiceLogprob&) const = default;
};

struct RunRecord {
  std::string item_id;
  QuestionType question_type = QuestionType::kSingleChoice;
  std::optional<std::string> category;
  GroundTruth ground_truth;
  std::string prompt_digest;
  std::optional<std::string> raw_text;
  std::vector<ChoiceLogprob> choice_logprobs;
  std::optional<ExtractedAnswer> extracted;
  std::vector<QuestionOutcome> outcomes;
  std::optional<std::string> error;

  bool operator==(const RunRecord&) const = default;
};

nlohmann::json record_to_json(const RunRecord& r);
// Ground truths are restored from the outcomes' serialized answers.
RunRecord record_from_json(const nlohmann::json& j);
std::string records_to_jsonl(const std::vector<RunRecord>& records);
// Throws ParseError on malformed lines.
std::vector<RunRecord> records_from_jsonl(std::string_view text);

// Optional collaborators of a run.
struct RunEnv {
  ResponseCache* cache = nullptr;
  // Rule bank; the built-in bank when null.
  const AnswerExtractor* extractor = nullptr;
  // Fallback extractor model consulted when the rule bank fails.
  Backend* model_extractor = nullptr;
  Sleeper sleep;
};

// Prompt -> generate -> extract -> score for every item (up to config.limit),
// with at most concurrency_limit requests in flight. Records come back in
// dataset order. Per-item failures are recorded, never thrown. Throws
// ConfigError / UnsupportedCapability for run-level problems.
std::vector<RunRecord> run_generation_eval(const Dataset& dataset, Backend& backend,
                                           const RunConfig& config,
                                           const RunEnv& env = {});

// Scores every choice as the continuation " " + text of the flattened prompt
// and predicts the argmax of the total logprob ("accuracy") and of the
// per-character logprob ("accuracy_norm"); ties go to the lowest index.
std::vector<RunRecord> run_ppl_eval(const Dataset& dataset, Backend& backend,
                                    const RunConfig& config, const RunEnv& env = {});

// Index of the best score; the lowest index wins ties.
std::size_t argmax_lowest(const std::vector<double>& scores);

// Re-extracts and re-scores stored raw responses (or per-choice logprobs)
// against the dataset without contacting any backend.
std::vector<RunRecord> rescore_records(const std::vector<RunRecord>& records,
                                       const Dataset& dataset,
                                       const AnswerExtractor& extractor);

// Writes {output_dir}/{dataset}/{model}/records.jsonl and run_meta.json and
// returns the run directory. Throws IoError.
std::filesystem::path write_run(const std::filesystem::path& output_dir,
                                const Dataset& dataset,
                                const BackendCapabilities& caps,
                                const RunConfig& config,
                                const std::vector<RunRecord>& records,
                                const nlohmann::json& extra_meta = {});

}  // namespace omnieval

#endif  // OMNIEVAL_RUNNER_HPP_
