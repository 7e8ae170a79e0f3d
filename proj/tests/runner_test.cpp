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

#include "omnieval/runner.hpp"

#include <mutex>

#include <gtest/gtest.h>

#include "omnieval/cache.hpp"
#include "omnieval/errors.hpp"
#include "omnieval/stub_backend.hpp"
#include "test_support.hpp"

namespace omnieval {
namespace {

using nlohmann::json;
using std::chrono::milliseconds;

Dataset three_items() {
  return parse_dataset(R"({"meta": {"name": "fixture", "metrics": ["accuracy"]}, "data": [
    {"id": "q1", "instruction": "First?", "choices": ["w", "x", "y"], "answer": "A",
     "question_type": "single_choice"},
    {"id": "q2", "instruction": "Second?", "choices": ["w", "x", "y"], "answer": "B",
     "question_type": "single_choice"},
    {"id": "q3", "instruction": "Third?", "choices": ["w", "x", "y"], "answer": "C",
     "question_type": "single_choice"}]})");
}

StubScript three_replies() {
  StubScript s;
  s.replies["q1"] = {StubAction::reply("The answer is A.")};
  s.replies["q2"] = {StubAction::reply("B")};
  s.replies["q3"] = {StubAction::reply("nonsense")};
  return s;
}

// Records requested delays instead of sleeping.
struct RecordingSleeper {
  std::mutex mu;
  std::vector<milliseconds> delays;
  Sleeper fn() {
    return [this](milliseconds d) {
      std::lock_guard lock(mu);
      delays.push_back(d);
    };
  }
};

std::vector<double> scores(const std::vector<RunRecord>& records, const std::string& metric) {
  std::vector<double> out;
  for (const auto& r : records) {
    for (const auto& o : r.outcomes) {
      if (o.metric_name == metric) out.push_back(o.score);
    }
  }
  return out;
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.concurrency_limit = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.max_retries = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.backoff_base_ms = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(GenerationRun, ThreeItemExample) {
  StubBackend stub(three_replies());
  const auto records = run_generation_eval(three_items(), stub, {});
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(scores(records, "accuracy"), (std::vector<double>{1, 1, 0}));
  int failures = 0;
  for (const auto& r : records) failures += r.extracted && !r.extracted->ok();
  EXPECT_EQ(failures, 1);
  EXPECT_EQ(records[0].item_id, "q1");
  EXPECT_EQ(records[2].raw_text, "nonsense");
}

TEST(GenerationRun, WarmCacheMakesNoCalls) {
  testing::TempDir dir;
  ResponseCache cold_cache(dir / "cache");
  StubBackend stub(three_replies());
  RunEnv env;
  env.cache = &cold_cache;
  const auto cold = run_generation_eval(three_items(), stub, {}, env);
  EXPECT_EQ(stub.generate_calls(), 3);

  stub.reset_counters();
  ResponseCache warm_cache(dir / "cache");
  env.cache = &warm_cache;
  const auto warm = run_generation_eval(three_items(), stub, {}, env);
  EXPECT_EQ(stub.generate_calls(), 0);
  EXPECT_EQ(records_to_jsonl(cold), records_to_jsonl(warm));
}

TEST(GenerationRun, Limit) {
  StubBackend stub(three_replies());
  RunConfig c;
  c.limit = 1;
  const auto records = run_generation_eval(three_items(), stub, c);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].item_id, "q1");
}

TEST(Retries, TransientFailuresThenSuccess) {
  StubScript s;
  s.replies["q1"] = {StubAction::fail(StubAction::Kind::kTransportError),
                     StubAction::fail(StubAction::Kind::kRateLimited, 5.0),
                     StubAction::reply("A")};
  StubBackend stub(s);
  RecordingSleeper sleeper;
  RetryPolicy policy{3, 500, sleeper.fn()};
  PromptBundle b;
  b.item_id = "q1";
  b.turns.push_back({Role::kUser, "x", {}});
  int retries = -1;
  const auto r = with_retries([&] { return stub.generate(b, {}); }, policy, &retries);
  EXPECT_EQ(r.text, "A");
  EXPECT_EQ(retries, 2);
  // 500 * 2^0, then max(500 * 2^1, 5 s).
  EXPECT_EQ(sleeper.delays, (std::vector<milliseconds>{milliseconds(500), milliseconds(5000)}));
}

TEST(Retries, DelaySchedule) {
  const RetryPolicy p{3, 100, {}};
  EXPECT_EQ(p.delay(0), milliseconds(100));
  EXPECT_EQ(p.delay(3), milliseconds(800));
  EXPECT_EQ(p.delay(1, 0.05), milliseconds(200));
  EXPECT_EQ(p.delay(1, 1.5), milliseconds(1500));
}

TEST(Retries, PerItemErrorsInRun) {
  StubScript s;
  s.replies["q1"] = {StubAction::fail(StubAction::Kind::kRefused)};
  s.replies["q2"] = {StubAction::fail(StubAction::Kind::kTransportError)};
  s.replies["q3"] = {StubAction::reply("C")};
  StubBackend stub(s);
  RecordingSleeper sleeper;
  RunEnv env;
  env.sleep = sleeper.fn();
  RunConfig c;
  c.max_retries = 0;
  c.concurrency_limit = 1;
  const auto records = run_generation_eval(three_items(), stub, c, env);
  ASSERT_TRUE(records[0].error);
  EXPECT_NE(records[0].error->find("400"), std::string::npos);
  ASSERT_TRUE(records[1].error);
  EXPECT_FALSE(records[2].error);
  // Errored records carry the error instead of outcomes.
  EXPECT_TRUE(records[0].outcomes.empty());
  EXPECT_TRUE(records[1].outcomes.empty());
  EXPECT_EQ(scores(records, "accuracy"), std::vector<double>{1});
  EXPECT_EQ(stub.generate_calls(), 3);
  EXPECT_TRUE(sleeper.delays.empty());
}

TEST(Retries, ExhaustedAfterMaxRetries) {
  StubScript s;
  s.replies["q1"] = {StubAction::fail(StubAction::Kind::kTransportError)};
  StubBackend stub(s);
  RecordingSleeper sleeper;
  RunEnv env;
  env.sleep = sleeper.fn();
  RunConfig c;
  c.limit = 1;
  const auto records = run_generation_eval(three_items(), stub, c, env);
  ASSERT_TRUE(records[0].error);
  EXPECT_EQ(stub.generate_calls(), 4);
  EXPECT_EQ(sleeper.delays.size(), 3u);
}

TEST(GenerationRun, ModelExtractorFallback) {
  StubScript s;
  s.replies["q3"] = {StubAction::reply("Option three seems right to me")};
  StubBackend stub(s);
  StubScript ex;
  ex.replies["q3"] = {StubAction::reply("C")};
  StubBackend extractor(ex);
  RunEnv env;
  env.model_extractor = &extractor;
  RunConfig c;
  c.concurrency_limit = 1;
  const auto records = run_generation_eval(three_items(), stub, c, env);
  ASSERT_TRUE(records[2].extracted);
  EXPECT_EQ(records[2].extracted->status, ExtractionStatus::kModelExtracted);
  EXPECT_EQ(scores(records, "accuracy")[2], 1.0);
  // The first two echo their prompts ("First?\nA. w ..."), which the rule bank
  // resolves on its own.
  EXPECT_EQ(extractor.generate_calls(), 1);
}

TEST(GenerationRun, RequiresGeneration) {
  StubBackend ll_only({}, {false, true, false, "ll"});
  EXPECT_THROW(run_generation_eval(three_items(), ll_only, {}), UnsupportedCapability);
}

Dataset ppl_items() {
  return parse_dataset(R"({"meta": {"name": "ppl", "metrics": ["accuracy"]}, "data": [
    {"id": "p1", "instruction": "Pick", "choices": ["red", "green", "blue"], "answer": "B",
     "question_type": "single_choice"},
    {"id": "p2", "instruction": "Pick", "choices": ["tie1", "tie2"], "answer": "A",
     "question_type": "single_choice"},
    {"id": "p3", "instruction": "Pick", "choices": ["short", "long"], "answer": "B",
     "question_type": "single_choice"},
    {"id": "p4", "instruction": "Pick", "choices": ["two", "ten"], "answer": "B",
     "question_type": "single_choice"}]})");
}

StubScript ppl_table() {
  StubScript s;
  auto put = [&s](const std::string& text, double lp, std::int64_t chars) {
    s.logprobs[{"*", " " + text}] = LoglikelihoodResult{lp, 1, chars};
  };
  put("red", -4.0, 4);
  put("green", -2.0, 6);
  put("blue", -9.0, 5);
  put("tie1", -2.0, 5);
  put("tie2", -2.0, 5);
  put("short", -2.0, 1);
  put("long", -3.0, 30);
  put("two", -6.0, 2);
  put("ten", -5.0, 10);
  return s;
}

std::string predicted(const RunRecord& r, const std::string& metric) {
  for (const auto& o : r.outcomes) {
    if (o.metric_name == metric) return answer_value_to_string(*o.extracted.value);
  }
  return "<missing>";
}

TEST(PplRun, ArgmaxTieBreakAndNormalization) {
  StubBackend stub(ppl_table());
  const auto records = run_ppl_eval(ppl_items(), stub, {});
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(predicted(records[0], "accuracy"), "B");
  EXPECT_EQ(predicted(records[1], "accuracy"), "A");
  EXPECT_EQ(predicted(records[1], "accuracy_norm"), "A");
  EXPECT_EQ(predicted(records[2], "accuracy"), "A");
  EXPECT_EQ(predicted(records[2], "accuracy_norm"), "B");
  EXPECT_DOUBLE_EQ(records[2].choice_logprobs[1].normalized(), -0.1);
  EXPECT_EQ(predicted(records[3], "accuracy"), "B");
  EXPECT_EQ(predicted(records[3], "accuracy_norm"), "B");
  EXPECT_EQ(scores(records, "accuracy"), (std::vector<double>{1, 1, 0, 1}));
  EXPECT_EQ(scores(records, "accuracy_norm"), (std::vector<double>{1, 1, 1, 1}));
  EXPECT_EQ(stub.loglikelihood_calls(), 9);
}

TEST(PplRun, ContinuationFormatAndContext) {
  const auto ds = ppl_items();
  StubScript s;
  const std::string context = "Pick\nA. red\nB. green\nC. blue\nAnswer:";
  s.logprobs[{context, " red"}] = {-1.0, 1, 4};
  s.logprobs[{context, " green"}] = {-3.0, 1, 6};
  s.logprobs[{context, " blue"}] = {-2.0, 1, 5};
  StubBackend stub(s);
  RunConfig c;
  c.limit = 1;
  const auto records = run_ppl_eval(ds, stub, c);
  EXPECT_EQ(predicted(records[0], "accuracy"), "A");
  EXPECT_EQ(records[0].prompt_digest, sha256_hex(context));
}

TEST(PplRun, RequiresChoicesAndCapability) {
  const auto ds = parse_dataset(R"([{"instruction": "Q", "answer": "x",
                                     "question_type": "free_open"}])");
  StubBackend stub;
  EXPECT_THROW(run_ppl_eval(ds, stub, {}), ConfigError);
  StubBackend chat_only({}, {true, false, false, "chat"});
  EXPECT_THROW(run_ppl_eval(ppl_items(), chat_only, {}), UnsupportedCapability);
}

TEST(PplRun, WarmCache) {
  testing::TempDir dir;
  StubBackend stub(ppl_table());
  ResponseCache cache(dir / "cache");
  RunEnv env;
  env.cache = &cache;
  const auto cold = run_ppl_eval(ppl_items(), stub, {}, env);
  stub.reset_counters();
  ResponseCache warm(dir / "cache");
  env.cache = &warm;
  const auto again = run_ppl_eval(ppl_items(), stub, {}, env);
  EXPECT_EQ(stub.loglikelihood_calls(), 0);
  EXPECT_EQ(records_to_jsonl(cold), records_to_jsonl(again));
}

TEST(Argmax, LowestIndexWins) {
  EXPECT_EQ(argmax_lowest({-4, -2, -9}), 1u);
  EXPECT_EQ(argmax_lowest({-2, -2}), 0u);
  EXPECT_EQ(argmax_lowest({-3, -1, -1}), 1u);
}

Dataset many_items(int n) {
  json data = json::array();
  for (int i = 0; i < n; ++i) {
    data.push_back({{"id", "item" + std::to_string(i)},
                    {"instruction", "Question " + std::to_string(i)},
                    {"choices", {"x", "y"}},
                    {"answer", i % 2 ? "B" : "A"},
                    {"question_type", "single_choice"}});
  }
  return parse_dataset(json{{"meta", {{"name", "many"}}}, {"data", data}}.dump());
}

TEST(Concurrency, BoundedAndOrdered) {
  const auto ds = many_items(100);
  StubScript s;
  for (int i = 0; i < 100; ++i) {
    s.replies["item" + std::to_string(i)] = {StubAction::reply(i % 2 ? "B" : "A")};
  }
  StubBackend stub(s);
  stub.set_latency(milliseconds(1), milliseconds(8), 12345);
  RunConfig c;
  c.concurrency_limit = 4;
  const auto records = run_generation_eval(ds, stub, c);
  EXPECT_LE(stub.max_in_flight(), 4);
  EXPECT_GE(stub.max_in_flight(), 2);
  ASSERT_EQ(records.size(), 100u);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(records[i].item_id, "item" + std::to_string(i));
    EXPECT_EQ(scores({records[i]}, "accuracy"), std::vector<double>{1.0});
  }
}

TEST(Records, JsonlRoundTripAndRescore) {
  StubBackend stub(three_replies());
  const auto gen = run_generation_eval(three_items(), stub, {});
  EXPECT_EQ(records_from_jsonl(records_to_jsonl(gen)), gen);
  EXPECT_EQ(rescore_records(gen, three_items(), AnswerExtractor{}), gen);

  StubBackend ppl(ppl_table());
  const auto pr = run_ppl_eval(ppl_items(), ppl, {});
  EXPECT_EQ(records_from_jsonl(records_to_jsonl(pr)), pr);
  EXPECT_EQ(rescore_records(pr, ppl_items(), AnswerExtractor{}), pr);
  EXPECT_THROW(records_from_jsonl("{oops\n"), ParseError);
}

TEST(Records, WriteRun) {
  testing::TempDir dir;
  StubBackend stub(three_replies());
  RunConfig c;
  c.output_dir = dir.path();
  const auto ds = three_items();
  const auto records = run_generation_eval(ds, stub, c);
  const auto run_dir = write_run(c.output_dir, ds, stub.capabilities(), c, records);
  EXPECT_EQ(run_dir, dir.path() / "fixture" / "stub");
  EXPECT_EQ(testing::read_text(run_dir / "records.jsonl"), records_to_jsonl(records));
  const json meta = testing::read_json(run_dir / "run_meta.json");
  EXPECT_EQ(meta.at("backend").at("model_name"), "stub");
  EXPECT_EQ(meta.at("dataset").at("name"), "fixture");
  EXPECT_TRUE(meta.contains("config"));
}

}  // namespace
}  // namespace omnieval
