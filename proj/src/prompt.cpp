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

#include "omnieval/errors.hpp"

namespace omnieval {
namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Question body shared by exemplars and the final turn.
std::string question_text(const std::string& instruction,
                          std::span<const std::string> choices,
                          const PromptTemplate& tmpl) {
  std::string text = tmpl.question_prefix + instruction;
  if (!choices.empty()) text += "\n" + render_choice_block(choices, tmpl);
  return text;
}

void close_with_answer_prefix(std::string& text, const PromptTemplate& tmpl) {
  if (!tmpl.answer_prefix.empty()) text += "\n" + tmpl.answer_prefix;
}

}  // namespace

void PromptTemplate::validate() const {
  if (choice_line_format.find("{letter}") == std::string::npos ||
      choice_line_format.find("{text}") == std::string::npos) {
    throw ConfigError("choice_line_format must contain {letter} and {text}");
  }
}

PromptTemplate template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  if (!j.is_object()) throw ConfigError("template must be a JSON object");
  try {
    if (auto it = j.find("system_text"); it != j.end() && !it->is_null()) {
      t.system_text = it->get<std::string>();
    }
    t.question_prefix = j.value("question_prefix", t.question_prefix);
    t.choice_line_format = j.value("choice_line_format", t.choice_line_format);
    t.answer_prefix = j.value("answer_prefix", t.answer_prefix);
    t.exemplar_separator = j.value("exemplar_separator", t.exemplar_separator);
    t.cot_suffix = j.value("cot_suffix", t.cot_suffix);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("template: ") + e.what());
  }
  t.validate();
  return t;
}

nlohmann::json template_to_json(const PromptTemplate& t) {
  nlohmann::json j = {{"question_prefix", t.question_prefix},
                      {"choice_line_format", t.choice_line_format},
                      {"answer_prefix", t.answer_prefix},
                      {"exemplar_separator", t.exemplar_separator},
                      {"cot_suffix", t.cot_suffix}};
  if (t.system_text) j["system_text"] = *t.system_text;
  return j;
}

std::string render_choice_block(std::span<const std::string> choices,
                                const PromptTemplate& tmpl) {
  if (choices.empty()) throw EmptyChoices();
  if (choices.size() > kMaxChoices) throw ChoiceOverflow(choices.size());
  std::string out;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    std::string line = tmpl.choice_line_format;
    // Substitute {text} last so option text containing "{letter}" survives.
    replace_all(line, "{letter}", std::string(1, letter_for(i)));
    replace_all(line, "{text}", choices[i]);
    if (i > 0) out += '\n';
    out += line;
  }
  return out;
}

RenderedPrompt render_prompt(const EvalItem& item, const PromptTemplate& tmpl,
                             bool use_cot, std::size_t num_shots,
                             std::span<const FewShotExemplar> fallback_exemplars) {
  std::span<const FewShotExemplar> exemplars =
      item.few_shot.empty() ? fallback_exemplars
                            : std::span<const FewShotExemplar>(item.few_shot);
  RenderedPrompt out;
  std::size_t shots = num_shots;
  if (shots > exemplars.size()) {
    out.warning = "item " + item.id + ": requested " + std::to_string(num_shots) +
                  " exemplars, only " + std::to_string(exemplars.size()) +
                  " available";
    shots = exemplars.size();
  }

  PromptBundle& bundle = out.bundle;
  bundle.item_id = item.id;
  bundle.system_text = tmpl.system_text;
  for (std::size_t i = 0; i < shots; ++i) {
    const auto& ex = exemplars[i];
    std::string user = question_text(ex.instruction, ex.choices, tmpl);
    close_with_answer_prefix(user, tmpl);
    bundle.turns.push_back({Role::kUser, std::move(user), {}});
    bundle.turns.push_back({Role::kAssistant, ex.answer, {}});
  }

  std::string final_text = question_text(item.instruction, item.choices, tmpl);
  if (use_cot) {
    const std::string& directive =
        item.cot_directive ? *item.cot_directive : tmpl.cot_suffix;
    if (!directive.empty()) final_text += "\n" + directive;
  }
  close_with_answer_prefix(final_text, tmpl);
  bundle.turns.push_back({Role::kUser, std::move(final_text), item.images});
  return out;
}

std::string flatten_prompt(const PromptBundle& bundle, const PromptTemplate& tmpl) {
  std::vector<std::string> blocks;
  if (bundle.system_text && !bundle.system_text->empty()) {
    blocks.push_back(*bundle.system_text);
  }
  for (const auto& turn : bundle.turns) {
    if (turn.role == Role::kAssistant && !blocks.empty()) {
      blocks.back() += " " + turn.text;
    } else {
      blocks.push_back(turn.text);
    }
  }
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) out += tmpl.exemplar_separator;
    out += blocks[i];
  }
  return out;
}

}  // namespace omnieval
