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


#include <gtest/gtest.h>

#include "omnieval/cache.hpp"
#include "omnieval/config.hpp"
#include "omnieval/errors.hpp"
#include "omnieval/report.hpp"
#include "omnieval/runner.hpp"
#include "omnieval/stub_backend.hpp"
#include "test_support.hpp"

namespace omnieval {
namespace {

using nlohmann::json;
using namespace omnieval::testing;

struct E2eRun {
  std::vector<RunRecord> records;
  std::int64_t calls = 0;
};

class EndToEnd : public ::testing::Test {
 protected:
  void SetUp() override {
    settings_ = load_settings(fixture("e2e/config.json"));
    dataset_ = load_dataset(*settings_.dataset, settings_.dataset_defaults);
    expected_ = read_json(fixture("e2e/expected.json"));
  }

  E2eRun run_once(ResponseCache& cache) {
    StubBackend backend(load_stub_script(*settings_.backend.script));
    RunEnv env;
    env.cache = &cache;
    E2eRun out;
    out.records = run_generation_eval(dataset_, backend, settings_.run, env);
    out.calls = backend.generate_calls() + backend.loglikelihood_calls();
    return out;
  }

  EvalSettings settings_;
  Dataset dataset_;
  json expected_;
  TempDir tmp_;
};

TEST_F(EndToEnd, SettingsResolveAgainstConfigDirectory) {
  EXPECT_EQ(*settings_.dataset, fixture("e2e/dataset.json"));
  EXPECT_EQ(settings_.backend.type, "stub");
  EXPECT_EQ(settings_.run.concurrency_limit, 3);
  EXPECT_EQ(dataset_.items.size(), 10u);
}

TEST_F(EndToEnd, MatchesHandTrace) {
  ResponseCache cache(tmp_ / "cache");
  const auto run = run_once(cache);
  ASSERT_EQ(run.records.size(), 10u);
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const RunRecord& r = run.records[i];
    SCOPED_TRACE(r.item_id);
    EXPECT_FALSE(r.error.has_value());
    ASSERT_EQ(r.outcomes.size(), 1u);
    EXPECT_EQ(r.outcomes[0].score, expected_["accuracy"][i].get<double>());
    ASSERT_TRUE(r.extracted.has_value());
    const json& want = expected_["extracted"][i];
    if (want.is_null()) {
      EXPECT_FALSE(r.extracted->ok());
      EXPECT_EQ(r.extracted->status, ExtractionStatus::kUnextracted);
    } else {
      ASSERT_TRUE(r.extracted->ok());
      EXPECT_EQ(answer_value_to_string(*r.extracted->value), want.get<std::string>());
      EXPECT_EQ(r.extracted->rule_name.value_or(""),
                expected_["rules"][i].get<std::string>());
    }
  }

  const MetricReport report = aggregate(run.records, dataset_.manifest, "stub");
  ASSERT_FALSE(report.metrics.empty());
  EXPECT_EQ(report.metrics[0].name, "accuracy");
  EXPECT_NEAR(report.metrics[0].value, expected_["mean_accuracy"].get<double>(), 1e-12);
  EXPECT_EQ(report.metrics[0].support, 10);
  EXPECT_NEAR(report.extraction_failure_rate,
              expected_["extraction_failure_rate"].get<double>(), 1e-12);
  EXPECT_EQ(report.error_count, 0);
  for (const auto& [cat, pair] : expected_["categories"].items()) {
    SCOPED_TRACE(cat);
    ASSERT_TRUE(report.categories.count(cat));
    const MetricValue& mv = report.categories.at(cat)[0];
    EXPECT_NEAR(mv.value, pair[0].get<double>(), 1e-12);
    EXPECT_EQ(mv.support, pair[1].get<std::int64_t>());
  }
}

TEST_F(EndToEnd, WarmRunIsByteIdenticalAndOffline) {
  ResponseCache cold(tmp_ / "cache");
  const auto first = run_once(cold);
  EXPECT_EQ(first.calls, 10);

  ResponseCache warm(tmp_ / "cache");
  const auto second = run_once(warm);
  EXPECT_EQ(second.calls, 0);

  const std::string a = records_to_jsonl(first.records);
  const std::string b = records_to_jsonl(second.records);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, read_text(fixture("e2e/golden_records.jsonl")));
}

TEST_F(EndToEnd, WrittenRunRoundTrips) {
  ResponseCache cache(tmp_ / "cache");
  const auto run = run_once(cache);
  const auto dir = write_run(tmp_ / "runs", dataset_, StubBackend::defaults(),
                             settings_.run, run.records);
  EXPECT_EQ(dir, tmp_ / "runs" / "e2e" / "stub");
  const std::string text = read_text(dir / "records.jsonl");
  EXPECT_EQ(records_from_jsonl(text), run.records);
  const json meta = read_json(dir / "run_meta.json");
  EXPECT_EQ(meta["item_count"], 10);
  EXPECT_EQ(meta["dataset"]["name"], "e2e");
}

TEST_F(EndToEnd, RescoreReproducesRun) {
  ResponseCache cache(tmp_ / "cache");
  const auto run = run_once(cache);
  const AnswerExtractor bank;
  EXPECT_EQ(rescore_records(run.records, dataset_, bank), run.records);
}

TEST(Settings, RejectsBadConfig) {
  EXPECT_THROW(settings_from_json(json{{"mode", "sample"}}), ConfigError);
  EXPECT_THROW(settings_from_json(json{{"concurrency_limit", 0}}), ConfigError);
  EXPECT_THROW(settings_from_json(json{{"backend", {{"type", "carrier-pigeon"}}}}),
               ConfigError);
  EXPECT_THROW(settings_from_json(json::array()), ConfigError);
  EXPECT_THROW(load_settings("/nonexistent/config.json"), Error);
}

TEST(Settings, DefaultsAndOverrides) {
  const EvalSettings s = settings_from_json(json{
      {"mode", "ppl"},
      {"num_shots", 2},
      {"use_cot", true},
      {"limit", 5},
      {"generation", {{"temperature", 0.5}, {"max_new_tokens", 64}}}});
  EXPECT_EQ(s.run.mode, RunMode::kPpl);
  EXPECT_EQ(s.run.num_shots, 2u);
  EXPECT_TRUE(s.run.use_cot);
  EXPECT_EQ(s.run.limit, std::optional<std::size_t>(5));
  EXPECT_DOUBLE_EQ(s.run.generation.temperature, 0.5);
  EXPECT_EQ(s.run.generation.max_new_tokens, 64);
  EXPECT_EQ(s.run.concurrency_limit, 4);
}

}  // namespace
}  // namespace omnieval
