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

#include "omnieval/prompt.hpp"

#include <random>

#include <gtest/gtest.h>

#include "omnieval/errors.hpp"
#include "test_support.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

EvalItem make_item(const json& record) {
  DatasetManifest m;
  return validate_item(record, m, 0);
}

const json kOpenItem = {
    {"id", "open"},
    {"instruction", "Explain tides."},
    {"answer", "gravity"},
    {"question_type", "free_open"},
    {"few_shot", {{{"instruction", "Explain rain."}, {"answer", "condensation"}},
                  {{"instruction", "Explain wind."}, {"answer", "pressure"}}}}};

TEST(ChoiceBlock, DefaultFormat) {
  const std::vector<std::string> choices = {"Paris", "Rome"};
  EXPECT_EQ(render_choice_block(choices, {}), "A. Paris\nB. Rome");
}

TEST(ChoiceBlock, CustomFormat) {
  PromptTemplate t;
  t.choice_line_format = "({letter}) {text}";
  const std::vector<std::string> choices = {"x"};
  EXPECT_EQ(render_choice_block(choices, t), "(A) x");
}

TEST(ChoiceBlock, Bounds) {
  EXPECT_THROW(render_choice_block(std::vector<std::string>{}, {}), EmptyChoices);
  const std::vector<std::string> many(27, "x");
  EXPECT_THROW(render_choice_block(many, {}), ChoiceOverflow);
  const std::vector<std::string> full(26, "x");
  EXPECT_NE(render_choice_block(full, {}).find("Z. x"), std::string::npos);
}

TEST(Template, Validation) {
  PromptTemplate t;
  t.choice_line_format = "{letter}";
  EXPECT_THROW(t.validate(), ConfigError);
  EXPECT_THROW(template_from_json(json{{"choice_line_format", "{text}"}}), ConfigError);
  const auto parsed = template_from_json(json{{"answer_prefix", "A:"}});
  EXPECT_EQ(parsed.answer_prefix, "A:");
  EXPECT_EQ(parsed.cot_suffix, PromptTemplate{}.cot_suffix);
  EXPECT_EQ(template_from_json(template_to_json(parsed)), parsed);
}

TEST(RenderPrompt, ZeroShot) {
  const auto r = render_prompt(make_item(kOpenItem), {}, false, 0);
  ASSERT_EQ(r.bundle.turns.size(), 1u);
  EXPECT_EQ(r.bundle.turns[0].role, Role::kUser);
  EXPECT_EQ(r.bundle.turns[0].text, "Explain tides.\nAnswer:");
  EXPECT_FALSE(r.warning);
}

TEST(RenderPrompt, ExemplarPairs) {
  const auto r = render_prompt(make_item(kOpenItem), {}, false, 2);
  ASSERT_EQ(r.bundle.turns.size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.bundle.turns[i].role, i % 2 == 0 ? Role::kUser : Role::kAssistant);
  }
  EXPECT_EQ(r.bundle.turns[1].text, "condensation");
  EXPECT_EQ(r.bundle.final_turn().role, Role::kUser);
}

TEST(RenderPrompt, TruncatesWithWarning) {
  const auto r = render_prompt(make_item(kOpenItem), {}, false, 5);
  EXPECT_EQ(r.bundle.turns.size(), 5u);
  ASSERT_TRUE(r.warning);
  EXPECT_NE(r.warning->find("open"), std::string::npos);
}

TEST(RenderPrompt, ManifestFallbackExemplars) {
  json rec = kOpenItem;
  rec.erase("few_shot");
  const std::vector<FewShotExemplar> fallback = {{"Explain snow.", "freezing", {}}};
  const auto r = render_prompt(make_item(rec), {}, false, 1, fallback);
  ASSERT_EQ(r.bundle.turns.size(), 3u);
  EXPECT_EQ(r.bundle.turns[1].text, "freezing");
}

TEST(RenderPrompt, GoldenCotPrompt) {
  const json golden = testing::read_json(testing::fixture("golden_cot_prompt.json"));
  const auto r = render_prompt(make_item(golden.at("item")), {}, golden.at("use_cot"),
                               golden.at("num_shots"));
  const auto& turns = golden.at("turns");
  ASSERT_EQ(r.bundle.turns.size(), turns.size());
  for (std::size_t i = 0; i < turns.size(); ++i) {
    EXPECT_EQ(to_string(r.bundle.turns[i].role), turns[i].at("role").get<std::string>());
    EXPECT_EQ(r.bundle.turns[i].text, turns[i].at("text").get<std::string>());
  }
  EXPECT_EQ(flatten_prompt(r.bundle, {}), golden.at("flattened").get<std::string>());
}

TEST(RenderPrompt, ItemDirectiveWinsOnlyWithCot) {
  json rec = kOpenItem;
  rec["cot_directive"] = "Show your work.";
  const auto item = make_item(rec);
  EXPECT_EQ(render_prompt(item, {}, true, 0).bundle.final_turn().text,
            "Explain tides.\nShow your work.\nAnswer:");
  EXPECT_EQ(render_prompt(item, {}, false, 0).bundle.final_turn().text,
            "Explain tides.\nAnswer:");
}

TEST(RenderPrompt, SystemPrefixAndImages) {
  PromptTemplate t;
  t.system_text = "Be brief.";
  t.question_prefix = "Q: ";
  json rec = kOpenItem;
  rec["images"] = {"a.png"};
  const auto r = render_prompt(make_item(rec), t, false, 1);
  EXPECT_EQ(r.bundle.system_text, "Be brief.");
  EXPECT_EQ(r.bundle.turns[0].text, "Q: Explain rain.\nAnswer:");
  EXPECT_TRUE(r.bundle.turns[0].attachments.empty());
  EXPECT_EQ(r.bundle.final_turn().attachments, std::vector<std::string>{"a.png"});
  EXPECT_EQ(flatten_prompt(r.bundle, t),
            "Be brief.\n\nQ: Explain rain.\nAnswer: condensation\n\nQ: Explain tides.\nAnswer:");
}

TEST(RenderPrompt, PropertiesOverRandomItems) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 50; ++n) {
    const auto ds = parse_dataset(testing::random_dataset(rng).dump());
    for (const auto& item : ds.items) {
      for (std::size_t shots : {0u, 1u, 3u}) {
        for (bool cot : {false, true}) {
          const auto a = render_prompt(item, {}, cot, shots);
          const auto b = render_prompt(item, {}, cot, shots);
          ASSERT_EQ(a.bundle, b.bundle);
          ASSERT_EQ(a.bundle.final_turn().role, Role::kUser);
          if (shots == 0) ASSERT_EQ(a.bundle.turns.size(), 1u);
          for (const auto& turn : a.bundle.turns) ASSERT_FALSE(turn.text.empty());
        }
      }
    }
  }
}

}  // namespace
}  // namespace omnieval
