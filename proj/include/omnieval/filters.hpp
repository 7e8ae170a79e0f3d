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

#ifndef OMNIEVAL_FILTERS_HPP_
#define OMNIEVAL_FILTERS_HPP_

#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "omnieval/backend.hpp"
#include "omnieval/dataset.hpp"

namespace omnieval {

enum class ExtractionStatus { kExtracted, kModelExtracted, kUnextracted };

std::string_view to_string(ExtractionStatus s);

// Canonical extracted answer: a letter set for choice questions, a yes/no
// token, or normalized text.
using AnswerValue = std::variant<LetterSet, YesNo, std::string>;

std::string answer_value_to_string(const AnswerValue& v);

struct ExtractedAnswer {
  std::optional<AnswerValue> value;
  ExtractionStatus status = ExtractionStatus::kUnextracted;
  std::optional<std::string> rule_name;
  std::optional<std::string> raw_span;

  static ExtractedAnswer unextracted() { return {}; }
  bool ok() const { return value.has_value(); }
  bool operator==(const ExtractedAnswer&) const = default;
};

nlohmann::json extracted_to_json(const ExtractedAnswer& a);
// The question type decides how "value" is decoded.
ExtractedAnswer extracted_from_json(const nlohmann::json& j, QuestionType t);

struct ExtractionRule {
  std::string name;
  std::string pattern;
  int capture_group = 1;
  // Empty means every question type.
  std::set<QuestionType> applicable_types;
};

// Parses {name, pattern, capture_group, applicable_types}. Throws ConfigError.
ExtractionRule rule_from_json(const nlohmann::json& j);

// Regex rule bank. Precedence: user rules in order, then the built-in marker
// phrases ("answer is X", "answer: X", "correct option is X", "(X)" at line
// start, \boxed{X}), then the last standalone capital letter in range, then
// an exact match against a choice text. Within one rule the last match wins.
// Immutable after construction and safe to share across threads.
class AnswerExtractor {
 public:
  // Throws ConfigError when a user pattern does not compile or lacks the
  // requested capture group.
  explicit AnswerExtractor(std::vector<ExtractionRule> user_rules = {});

  // Total: failure is reported as status kUnextracted, never thrown.
  ExtractedAnswer extract(std::string_view raw, QuestionType type,
                          std::span<const std::string> choices) const;

 private:
  struct CompiledRule {
    ExtractionRule rule;
    std::regex regex;
  };
  std::vector<CompiledRule> user_rules_;
};

// Extraction with the built-in bank only.
ExtractedAnswer extract_answer(std::string_view raw, QuestionType type,
                               std::span<const std::string> choices);

// The fixed prompt sent to an extractor model.
std::string extraction_prompt(std::string_view raw, QuestionType type,
                              std::span<const std::string> choices);

struct ModelExtraction {
  ExtractedAnswer answer;
  std::optional<std::string> error;
};

// Asks `extractor` to restate the answer, then runs the rule bank over its
// reply. Backend failures come back as an unextracted answer plus an error.
ModelExtraction model_extract(std::string_view raw, QuestionType type,
                              std::span<const std::string> choices,
                              Backend& extractor, const AnswerExtractor& bank,
                              std::string_view item_id = {});

}  // namespace omnieval

#endif  // OMNIEVAL_FILTERS_HPP_
