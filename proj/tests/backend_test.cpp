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
#include <limits>

#include <gtest/gtest.h>

#include "omnieval/errors.hpp"
#include "omnieval/stub_backend.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

PromptBundle bundle_for(const std::string& id, const std::string& text) {
  PromptBundle b;
  b.item_id = id;
  b.turns.push_back({Role::kUser, text, {}});
  return b;
}

TEST(SumContinuation, CountsOnlyContinuationTokens) {
  // "Q: sky?" + " blue sky": context is 7 chars.
  const std::vector<EchoedToken> tokens = {
      {"Q", std::nullopt, 0}, {":", -1.0, 1}, {" sky", -2.0, 2}, {"?", -0.5, 6},
      {" blue", -1.25, 7},    {" sky", -0.75, 12}};
  const auto r = sum_continuation_logprobs(tokens, 7, 16);
  EXPECT_DOUBLE_EQ(r.total_logprob, -2.0);
  EXPECT_EQ(r.token_count, 2);
  EXPECT_EQ(r.continuation_chars, 9);
}

TEST(SumContinuation, StraddlingTokenBelongsToContinuation) {
  // Context "ab", continuation "cd"; the token "bc" crosses the boundary.
  const std::vector<EchoedToken> tokens = {{"a", std::nullopt, 0}, {"bc", -3.0, 1},
                                           {"d", -1.0, 3}};
  const auto r = sum_continuation_logprobs(tokens, 2, 4);
  EXPECT_DOUBLE_EQ(r.total_logprob, -4.0);
  EXPECT_EQ(r.token_count, 2);
}

TEST(SumContinuation, Malformed) {
  const std::vector<EchoedToken> missing = {{"a", -1.0, 0}, {"b", std::nullopt, 1}};
  EXPECT_THROW(sum_continuation_logprobs(missing, 1, 2), MalformedReply);
  const std::vector<EchoedToken> nan = {
      {"a", -1.0, 0}, {"b", std::numeric_limits<double>::quiet_NaN(), 1}};
  EXPECT_THROW(sum_continuation_logprobs(nan, 1, 2), MalformedReply);
  const std::vector<EchoedToken> backwards = {{"a", -1.0, 1}, {"b", -1.0, 0}};
  EXPECT_THROW(sum_continuation_logprobs(backwards, 1, 2), MalformedReply);
  EXPECT_THROW(sum_continuation_logprobs(std::vector<EchoedToken>{}, 1, 2), MalformedReply);
}

TEST(GenerationOptions, EffectiveModeAndValidation) {
  GenerationOptions o;
  o.decoding_mode = DecodingMode::kBeam;
  EXPECT_EQ(o.effective_mode(), DecodingMode::kGreedy);
  o.temperature = 0.7;
  EXPECT_EQ(o.effective_mode(), DecodingMode::kBeam);
  EXPECT_NO_THROW(o.validate());
  o.temperature = -1;
  EXPECT_THROW(o.validate(), ConfigError);
  o = {};
  o.max_new_tokens = 0;
  EXPECT_THROW(o.validate(), ConfigError);
  GenerationOptions full;
  full.temperature = 0.5;
  full.stop_sequences = {"\n"};
  full.decoding_mode = DecodingMode::kSample;
  full.seed = 3;
  const auto back = options_from_json(options_to_json(full));
  EXPECT_EQ(options_to_json(back), options_to_json(full));
}

TEST(Serialization, ResponseAndLoglikelihoodRoundTrip) {
  ModelResponse r;
  r.text = "B";
  r.finish_reason = FinishReason::kLength;
  r.token_logprobs = std::vector<TokenLogprob>{{"B", -0.25}};
  r.prompt_tokens = 10;
  r.completion_tokens = 1;
  r.latency_ms = 12;
  EXPECT_EQ(response_from_json(response_to_json(r)), r);
  const LoglikelihoodResult l{-1.5, 2, 6};
  EXPECT_EQ(loglikelihood_from_json(loglikelihood_to_json(l)), l);
}

TEST(Capabilities, AtLeastOneFlag) {
  BackendCapabilities c{false, false, false, "none"};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(StubBackend({}, c), ConfigError);
  EXPECT_EQ(StubBackend().capabilities(), (BackendCapabilities{true, true, true, "stub"}));
}

TEST(Stub, ScriptedAndEcho) {
  StubScript s;
  s.replies["q1"] = {StubAction::reply("The answer is B.")};
  StubBackend stub(s);
  const auto r = stub.generate(bundle_for("q1", "question"), {});
  EXPECT_EQ(r.text, "The answer is B.");
  EXPECT_EQ(r.finish_reason, FinishReason::kStop);
  EXPECT_EQ(stub.generate(bundle_for("other", "ping"), {}).text, "ping");
  EXPECT_EQ(stub.generate_calls(), 2);
}

TEST(Stub, ActionsConsumedInOrderLastRepeats) {
  const auto s = stub_script_from_json(json::parse(R"({"responses": {
      "q": [{"error": "transport"}, {"error": "rate_limited", "retry_after": 2}, "ok"]}})"));
  StubBackend stub(s);
  const auto b = bundle_for("q", "x");
  EXPECT_THROW(stub.generate(b, {}), TransportError);
  try {
    stub.generate(b, {});
    FAIL();
  } catch (const RateLimited& e) {
    EXPECT_DOUBLE_EQ(e.retry_after_s(), 2.0);
  }
  EXPECT_EQ(stub.generate(b, {}).text, "ok");
  EXPECT_EQ(stub.generate(b, {}).text, "ok");
}

TEST(Stub, DeterministicAndNonMutating) {
  StubBackend a;
  StubBackend b;
  const auto bundle = bundle_for("x", "same prompt");
  const auto copy = bundle;
  EXPECT_EQ(a.generate(bundle, {}), b.generate(bundle, {}));
  EXPECT_EQ(a.generate(bundle, {}), a.generate(bundle, {}));
  EXPECT_EQ(bundle, copy);
  EXPECT_EQ(a.loglikelihood("ctx", " cont"), b.loglikelihood("ctx", " cont"));
}

TEST(Stub, ScriptedLoglikelihood) {
  const auto s = stub_script_from_json(json::parse(R"({"logprobs": [
      {"context": "Q", "continuation": "A", "logprob": -1.5, "tokens": 2},
      {"continuation": " any", "logprob": -0.5}]})"));
  StubBackend stub(s);
  const auto r = stub.loglikelihood("Q", "A");
  EXPECT_DOUBLE_EQ(r.total_logprob, -1.5);
  EXPECT_EQ(r.token_count, 2);
  EXPECT_EQ(r.continuation_chars, 1);
  EXPECT_DOUBLE_EQ(stub.loglikelihood("whatever", " any").total_logprob, -0.5);
}

TEST(Stub, Preconditions) {
  StubBackend stub;
  EXPECT_THROW(stub.loglikelihood("ctx", ""), PreconditionError);
  StubBackend chat_only({}, {true, false, false, "chat"});
  EXPECT_THROW(chat_only.loglikelihood("ctx", "x"), UnsupportedCapability);
  auto with_image = bundle_for("i", "look");
  with_image.turns.back().attachments = {"a.png"};
  EXPECT_THROW(chat_only.generate(with_image, {}), UnsupportedCapability);
  StubBackend ll_only({}, {false, true, false, "ll"});
  EXPECT_THROW(ll_only.generate(bundle_for("i", "x"), {}), UnsupportedCapability);
}

// loglikelihood(c, a + b) == loglikelihood(c, a) + loglikelihood(c + a, b)
// whenever the split falls on a token boundary.
TEST(Stub, SyntheticScoresAreAdditive) {
  StubBackend stub;
  const std::vector<std::string> contexts = {"Question: capital of France?\nAnswer:", "Q:",
                                             "Lorem ipsum dolor"};
  const std::vector<std::string> parts = {" Paris", " is", " the", " capital", " 東京", " é"};
  for (const auto& c : contexts) {
    for (const auto& a : parts) {
      for (const auto& b : parts) {
        const double whole = stub.loglikelihood(c, a + b).total_logprob;
        const double split =
            stub.loglikelihood(c, a).total_logprob + stub.loglikelihood(c + a, b).total_logprob;
        EXPECT_NEAR(whole, split, 1e-12) << c << "|" << a << "|" << b;
      }
    }
  }
}

TEST(Stub, SyntheticResultShape) {
  StubBackend stub;
  const auto r = stub.loglikelihood("Q: sky?\nA:", " blue sky");
  EXPECT_EQ(r.token_count, 2);
  EXPECT_EQ(r.continuation_chars, 9);
  EXPECT_DOUBLE_EQ(r.total_logprob, StubBackend::synthetic_logprob(" blue") +
                                        StubBackend::synthetic_logprob(" sky"));
  EXPECT_LT(r.total_logprob, 0.0);
}

}  // namespace
}  // namespace omnieval
