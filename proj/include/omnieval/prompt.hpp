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

#ifndef OMNIEVAL_PROMPT_HPP_
#define OMNIEVAL_PROMPT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "omnieval/backend.hpp"
#include "omnieval/dataset.hpp"

namespace omnieval {

struct PromptTemplate {
  std::optional<std::string> system_text;
  std::string question_prefix;
  // Must contain both {letter} and {text}.
  std::string choice_line_format = "{letter}. {text}";
  std::string answer_prefix = "Answer:";
  std::string exemplar_separator = "\n\n";
  std::string cot_suffix = "Let's think step by step.";

  // Throws ConfigError.
  void validate() const;
  bool operator==(const PromptTemplate&) const = default;
};

// Missing keys keep their defaults. Throws ConfigError.
PromptTemplate template_from_json(const nlohmann::json& j);
nlohmann::json template_to_json(const PromptTemplate& t);

// One line per choice, lettered by position. Throws EmptyChoices or
// ChoiceOverflow.
std::string render_choice_block(std::span<const std::string> choices,
                                const PromptTemplate& tmpl);

struct RenderedPrompt {
  PromptBundle bundle;
  // Set when fewer exemplars were available than requested.
  std::optional<std::string> warning;
};

// Exemplar user/assistant pairs followed by the question turn. Item-level
// exemplars take priority over `fallback_exemplars` (the manifest's).
RenderedPrompt render_prompt(const EvalItem& item, const PromptTemplate& tmpl,
                             bool use_cot, std::size_t num_shots,
                             std::span<const FewShotExemplar> fallback_exemplars = {});

// Single-string form of a bundle for completion-style scoring: the system
// text, each exemplar as "question answer" and the final question, joined by
// the exemplar separator.
std::string flatten_prompt(const PromptBundle& bundle, const PromptTemplate& tmpl);

}  // namespace omnieval

#endif  // OMNIEVAL_PROMPT_HPP_
