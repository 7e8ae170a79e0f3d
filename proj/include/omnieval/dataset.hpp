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

#ifndef OMNIEVAL_DATASET_HPP_
#define OMNIEVAL_DATASET_HPP_

#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace omnieval {

enum class QuestionType {
  kSingleChoice,
  kMultipleChoice,
  kYesNo,
  kFillBlank,
  kFreeOpen,
};

std::string_view to_string(QuestionType t);
std::optional<QuestionType> question_type_from_string(std::string_view s);
bool is_choice_type(QuestionType t);

inline constexpr std::size_t kMaxChoices = 26;

inline char letter_for(std::size_t index) {
  return static_cast<char>('A' + index);
}

// Sorted, duplicate-free set of option letters. A single-choice answer is a
// set of size one.
struct LetterSet {
  std::string letters;

  static LetterSet of(std::string_view letters);
  bool empty() const { return letters.empty(); }
  // "A" or "A,C".
  std::string to_string() const;
  auto operator<=>(const LetterSet&) const = default;
};

enum class YesNo { kYes, kNo };

std::string_view to_string(YesNo v);
// Maps yes/true/correct and no/false/incorrect after normalize_text.
std::optional<YesNo> yes_no_from_text(std::string_view s);

// Choice types carry a LetterSet, yes_no a YesNo, fill_blank and free_open a
// list of accepted texts (alternatives or BLEU/ROUGE references).
using GroundTruth = std::variant<LetterSet, YesNo, std::vector<std::string>>;

nlohmann::json ground_truth_to_json(const GroundTruth& truth, QuestionType t);
// Inverse of ground_truth_to_json. Throws ParseError.
GroundTruth ground_truth_from_json(const nlohmann::json& j, QuestionType t);

struct FewShotExemplar {
  std::string instruction;
  std::string answer;
  std::vector<std::string> choices;

  bool operator==(const FewShotExemplar&) const = default;
};

struct EvalItem {
  std::string id;
  std::string instruction;
  std::vector<std::string> choices;
  GroundTruth answer;
  QuestionType question_type = QuestionType::kSingleChoice;
  std::vector<FewShotExemplar> few_shot;
  std::optional<std::string> cot_directive;
  std::vector<std::string> images;
  std::optional<std::string> category;
  std::optional<std::string> language;
  std::optional<std::string> domain;
  std::optional<std::string> modality;
  // Keys outside the unified schema, kept verbatim.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const EvalItem&) const = default;
};

struct DatasetManifest {
  std::string name;
  std::string version;
  std::optional<QuestionType> default_question_type;
  std::vector<std::string> metrics;
  std::optional<std::string> language;
  std::optional<std::string> domain;
  std::optional<std::string> modality;
  // Fallback exemplars for items that carry none of their own.
  std::vector<FewShotExemplar> few_shot;

  bool operator==(const DatasetManifest&) const = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<EvalItem> items;
};

// Run-configuration defaults used to synthesize a manifest for bare arrays and
// to fill gaps in object-wrapped ones.
struct DatasetDefaults {
  std::string name = "dataset";
  std::optional<QuestionType> question_type;
  std::vector<std::string> metrics = {"accuracy"};
};

// Throws ParseError, SchemaError or EmptyDataset.
Dataset load_dataset(const std::filesystem::path& path,
                     const DatasetDefaults& defaults = {});
Dataset parse_dataset(std::string_view json_text,
                      const DatasetDefaults& defaults = {});

// Validates one raw record against the manifest and returns the canonical
// item. `index` is the record position, used in error messages.
// Throws SchemaError naming the record and field.
EvalItem validate_item(const nlohmann::json& record,
                       const DatasetManifest& manifest, std::size_t index);

// Object-wrapped unified format; parse_dataset(dump()) yields equal values.
nlohmann::json dataset_to_json(const Dataset& dataset);
nlohmann::json item_to_json(const EvalItem& item);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest parse_manifest(const nlohmann::json& meta,
                               const DatasetDefaults& defaults);

}  // namespace omnieval

#endif  // OMNIEVAL_DATASET_HPP_
