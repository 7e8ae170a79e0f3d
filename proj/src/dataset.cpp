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

#include "omnieval/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "omnieval/errors.hpp"
#include "omnieval/estimators.hpp"
#include "omnieval/text.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

constexpr std::string_view kReservedCategory = "__all__";

const std::set<std::string, std::less<>> kKnownKeys = {
    "id",     "instruction", "choices",  "answer",   "question_type",
    "few_shot", "cot_directive", "images", "category", "language",
    "domain", "modality"};

// Identifies a record in error messages before its id is known to be valid.
std::string describe(const json& record, std::size_t index) {
  std::string out;
  if (record.is_object() && record.contains("id")) {
    const auto& id = record["id"];
    out = "'" + (id.is_string() ? id.get<std::string>() : id.dump()) + "' ";
  }
  return out + "(index " + std::to_string(index) + ")";
}

class RecordReader {
 public:
  RecordReader(const json& record, std::size_t index)
      : record_(record), where_(describe(record, index)) {}

  [[noreturn]] void fail(const std::string& field,
                         const std::string& detail) const {
    throw SchemaError(where_, field, detail);
  }

  const json* find(const std::string& key) const {
    auto it = record_.find(key);
    if (it == record_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string required_string(const std::string& key) const {
    const json* v = find(key);
    if (v == nullptr) fail(key, "missing field: " + key);
    if (!v->is_string()) fail(key, key + ": expected a string");
    return v->get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) const {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) fail(key, key + ": expected a string");
    return v->get<std::string>();
  }

  std::vector<std::string> string_list(const std::string& key) const {
    const json* v = find(key);
    if (v == nullptr) return {};
    if (!v->is_array()) fail(key, key + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
      if (!e.is_string()) fail(key, key + ": expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

 private:
  const json& record_;
  std::string where_;
};

void check_choices(const RecordReader& r, const std::vector<std::string>& choices,
                   const std::string& field) {
  if (choices.size() > kMaxChoices) {
    r.fail(field, field + ": " + std::to_string(choices.size()) +
                      " choices exceeds the maximum of 26");
  }
}

// Accepts "A", "(A)", "a", and for multi-answer "A,C", "AC", "A C",
// "A and C" or an array of such letters.
std::optional<LetterSet> parse_letters(const json& v) {
  std::string raw;
  if (v.is_string()) {
    raw = v.get<std::string>();
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_string()) return std::nullopt;
      raw += e.get<std::string>();
      raw += ',';
    }
  } else {
    return std::nullopt;
  }
  std::string cleaned;
  for (char c : raw) {
    cleaned += (c == ',' || c == ';' || c == '/' || c == '&' || c == '(' ||
                c == ')' || c == '[' || c == ']')
                   ? ' '
                   : c;
  }
  std::string letters;
  std::istringstream in(cleaned);
  std::string word;
  while (in >> word) {
    if (word == "and" || word == "AND") continue;
    for (char c : word) {
      if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      if (c < 'A' || c > 'Z') return std::nullopt;
      letters += c;
    }
  }
  if (letters.empty()) return std::nullopt;
  return LetterSet::of(letters);
}

GroundTruth parse_answer(const RecordReader& r, const json& v, QuestionType type,
                         std::size_t num_choices) {
  switch (type) {
    case QuestionType::kSingleChoice:
    case QuestionType::kMultipleChoice: {
      auto set = parse_letters(v);
      if (!set) r.fail("answer", "answer: not an option letter or letter set");
      if (type == QuestionType::kSingleChoice && set->letters.size() != 1) {
        r.fail("answer", "answer: single_choice needs exactly one letter, got " +
                             set->to_string());
      }
      for (char c : set->letters) {
        if (static_cast<std::size_t>(c - 'A') >= num_choices) {
          r.fail("answer", std::string("answer: letter ") + c +
                               " out of range for " +
                               std::to_string(num_choices) + " choices");
        }
      }
      return *set;
    }
    case QuestionType::kYesNo: {
      std::optional<YesNo> yn;
      if (v.is_boolean()) {
        yn = v.get<bool>() ? YesNo::kYes : YesNo::kNo;
      } else if (v.is_string()) {
        yn = yes_no_from_text(v.get<std::string>());
      }
      if (!yn) r.fail("answer", "answer: not a yes/no value");
      return *yn;
    }
    case QuestionType::kFillBlank:
    case QuestionType::kFreeOpen: {
      std::vector<std::string> texts;
      if (v.is_string()) {
        texts.push_back(v.get<std::string>());
      } else if (v.is_number()) {
        texts.push_back(v.dump());
      } else if (v.is_array()) {
        for (const auto& e : v) {
          if (!e.is_string()) r.fail("answer", "answer: expected strings");
          texts.push_back(e.get<std::string>());
        }
      } else {
        r.fail("answer", "answer: expected a string or array of strings");
      }
      if (std::all_of(texts.begin(), texts.end(),
                      [](const std::string& t) { return trim(t).empty(); })) {
        r.fail("answer", "answer: empty");
      }
      return texts;
    }
  }
  r.fail("answer", "answer: unsupported question type");
}

std::vector<FewShotExemplar> parse_exemplars(const RecordReader& r,
                                             const json* v) {
  std::vector<FewShotExemplar> out;
  if (v == nullptr) return out;
  if (!v->is_array()) r.fail("few_shot", "few_shot: expected an array");
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& e = (*v)[i];
    const std::string field = "few_shot[" + std::to_string(i) + "]";
    if (!e.is_object()) r.fail("few_shot", field + ": expected an object");
    FewShotExemplar ex;
    auto instr = e.find("instruction");
    if (instr == e.end() || !instr->is_string() ||
        instr->get<std::string>().empty()) {
      r.fail("few_shot", field + ": missing field: instruction");
    }
    ex.instruction = instr->get<std::string>();
    auto ans = e.find("answer");
    if (ans == e.end() || !ans->is_string() ||
        trim(ans->get<std::string>()).empty()) {
      r.fail("few_shot", field + ": answer must be a non-empty string");
    }
    ex.answer = ans->get<std::string>();
    if (auto c = e.find("choices"); c != e.end() && !c->is_null()) {
      if (!c->is_array()) r.fail("few_shot", field + ": choices not an array");
      for (const auto& s : *c) {
        if (!s.is_string()) r.fail("few_shot", field + ": choices not strings");
        ex.choices.push_back(s.get<std::string>());
      }
      check_choices(r, ex.choices, "few_shot");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::optional<std::string> optional_meta_string(const json& meta,
                                                const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError("meta", key, key + ": expected a string");
  return it->get<std::string>();
}

json exemplars_to_json(const std::vector<FewShotExemplar>& exemplars) {
  json out = json::array();
  for (const auto& ex : exemplars) {
    json e = {{"instruction", ex.instruction}, {"answer", ex.answer}};
    if (!ex.choices.empty()) e["choices"] = ex.choices;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::string_view to_string(QuestionType t) {
  switch (t) {
    case QuestionType::kSingleChoice: return "single_choice";
    case QuestionType::kMultipleChoice: return "multiple_choice";
    case QuestionType::kYesNo: return "yes_no";
    case QuestionType::kFillBlank: return "fill_blank";
    case QuestionType::kFreeOpen: return "free_open";
  }
  return "unknown";
}

std::optional<QuestionType> question_type_from_string(std::string_view s) {
  for (auto t : {QuestionType::kSingleChoice, QuestionType::kMultipleChoice,
                 QuestionType::kYesNo, QuestionType::kFillBlank,
                 QuestionType::kFreeOpen}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

bool is_choice_type(QuestionType t) {
  return t == QuestionType::kSingleChoice || t == QuestionType::kMultipleChoice;
}

LetterSet LetterSet::of(std::string_view letters) {
  std::string s(letters);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return LetterSet{std::move(s)};
}

std::string LetterSet::to_string() const {
  std::string out;
  for (char c : letters) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string_view to_string(YesNo v) { return v == YesNo::kYes ? "yes" : "no"; }

std::optional<YesNo> yes_no_from_text(std::string_view s) {
  const std::string n = normalize_text(s);
  if (n == "yes" || n == "true" || n == "correct") return YesNo::kYes;
  if (n == "no" || n == "false" || n == "incorrect") return YesNo::kNo;
  return std::nullopt;
}

json ground_truth_to_json(const GroundTruth& truth, QuestionType t) {
  if (const auto* set = std::get_if<LetterSet>(&truth)) {
    if (t == QuestionType::kMultipleChoice) {
      json arr = json::array();
      for (char c : set->letters) arr.push_back(std::string(1, c));
      return arr;
    }
    return set->letters;
  }
  if (const auto* yn = std::get_if<YesNo>(&truth)) {
    return std::string(to_string(*yn));
  }
  const auto& texts = std::get<std::vector<std::string>>(truth);
  if (texts.size() == 1) return texts.front();
  return texts;
}

GroundTruth ground_truth_from_json(const json& j, QuestionType t) {
  try {
    if (is_choice_type(t)) {
      std::string raw;
      if (j.is_array()) {
        for (const auto& e : j) raw += e.get<std::string>();
      } else {
        raw = j.get<std::string>();
      }
      std::string letters;
      for (char c : raw) {
        if (c >= 'A' && c <= 'Z') letters += c;
      }
      return LetterSet::of(letters);
    }
    if (t == QuestionType::kYesNo) {
      return j.get<std::string>() == "yes" ? YesNo::kYes : YesNo::kNo;
    }
    if (j.is_array()) return j.get<std::vector<std::string>>();
    return std::vector<std::string>{j.get<std::string>()};
  } catch (const json::exception& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
}

EvalItem validate_item(const json& record, const DatasetManifest& manifest,
                       std::size_t index) {
  RecordReader r(record, index);
  if (!record.is_object()) r.fail("record", "expected a JSON object");

  EvalItem item;
  if (const json* id = r.find("id")) {
    if (id->is_string()) {
      item.id = id->get<std::string>();
    } else if (id->is_number_integer()) {
      item.id = id->dump();
    } else {
      r.fail("id", "id: expected a string or integer");
    }
    if (item.id.empty()) r.fail("id", "id: empty");
  } else {
    item.id = "#" + std::to_string(index);
  }

  item.instruction = r.required_string("instruction");
  if (trim(item.instruction).empty()) r.fail("instruction", "instruction: empty");

  if (const json* qt = r.find("question_type")) {
    if (!qt->is_string()) r.fail("question_type", "question_type: expected a string");
    auto t = question_type_from_string(qt->get<std::string>());
    if (!t) {
      r.fail("question_type",
             "question_type: unknown value '" + qt->get<std::string>() + "'");
    }
    item.question_type = *t;
  } else if (manifest.default_question_type) {
    item.question_type = *manifest.default_question_type;
  } else {
    r.fail("question_type", "missing field: question_type");
  }

  item.choices = r.string_list("choices");
  check_choices(r, item.choices, "choices");
  if (is_choice_type(item.question_type) && item.choices.empty()) {
    r.fail("choices", "choices: required for " +
                          std::string(to_string(item.question_type)));
  }

  const json* answer = r.find("answer");
  if (answer == nullptr) r.fail("answer", "missing field: answer");
  item.answer = parse_answer(r, *answer, item.question_type, item.choices.size());

  item.few_shot = parse_exemplars(r, r.find("few_shot"));
  item.cot_directive = r.optional_string("cot_directive");
  item.images = r.string_list("images");
  item.category = r.optional_string("category");
  if (item.category && *item.category == kReservedCategory) {
    r.fail("category", "category: '__all__' is reserved");
  }
  item.language = r.optional_string("language");
  item.domain = r.optional_string("domain");
  item.modality = r.optional_string("modality");
  if (!item.language) item.language = manifest.language;
  if (!item.domain) item.domain = manifest.domain;
  if (!item.modality) item.modality = manifest.modality;

  for (const auto& [key, value] : record.items()) {
    if (kKnownKeys.find(key) == kKnownKeys.end()) item.extra[key] = value;
  }
  return item;
}

DatasetManifest parse_manifest(const json& meta, const DatasetDefaults& defaults) {
  if (!meta.is_object()) throw SchemaError("meta", "meta", "meta: expected an object");
  DatasetManifest m;
  m.name = optional_meta_string(meta, "name").value_or(defaults.name);
  m.version = optional_meta_string(meta, "version").value_or("");
  if (auto qt = optional_meta_string(meta, "default_question_type")) {
    m.default_question_type = question_type_from_string(*qt);
    if (!m.default_question_type) {
      throw SchemaError("meta", "default_question_type",
                        "default_question_type: unknown value '" + *qt + "'");
    }
  } else {
    m.default_question_type = defaults.question_type;
  }
  if (auto it = meta.find("metrics"); it != meta.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError("meta", "metrics", "metrics: expected an array");
    for (const auto& v : *it) {
      if (!v.is_string()) throw SchemaError("meta", "metrics", "metrics: expected strings");
      m.metrics.push_back(v.get<std::string>());
    }
  } else {
    m.metrics = defaults.metrics;
  }
  if (m.metrics.empty()) throw SchemaError("meta", "metrics", "metrics: empty");
  for (const auto& name : m.metrics) {
    if (!is_known_metric(name)) {
      throw SchemaError("meta", "metrics", "metrics: unknown metric '" + name + "'");
    }
  }
  m.language = optional_meta_string(meta, "language");
  m.domain = optional_meta_string(meta, "domain");
  m.modality = optional_meta_string(meta, "modality");
  RecordReader r(meta, 0);
  m.few_shot = parse_exemplars(r, r.find("few_shot"));
  return m;
}

Dataset parse_dataset(std::string_view json_text, const DatasetDefaults& defaults) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }

  Dataset ds;
  const json* data = nullptr;
  if (doc.is_array()) {
    ds.manifest = parse_manifest(json::object(), defaults);
    data = &doc;
  } else if (doc.is_object()) {
    auto meta = doc.find("meta");
    ds.manifest = parse_manifest(
        meta == doc.end() || meta->is_null() ? json::object() : *meta, defaults);
    auto it = doc.find("data");
    if (it == doc.end() || !it->is_array()) {
      throw ParseError("expected a \"data\" array in the dataset object");
    }
    data = &*it;
  } else {
    throw ParseError("dataset must be an array or a {\"meta\", \"data\"} object");
  }

  if (data->empty()) throw EmptyDataset("dataset contains no records");

  std::unordered_set<std::string> seen;
  ds.items.reserve(data->size());
  for (std::size_t i = 0; i < data->size(); ++i) {
    EvalItem item = validate_item((*data)[i], ds.manifest, i);
    if (!seen.insert(item.id).second) {
      throw SchemaError(describe((*data)[i], i), "id",
                        "id: duplicate id '" + item.id + "'");
    }
    ds.items.push_back(std::move(item));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path,
                     const DatasetDefaults& defaults) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  DatasetDefaults d = defaults;
  if (d.name == DatasetDefaults{}.name) d.name = path.stem().string();
  return parse_dataset(buf.str(), d);
}

json item_to_json(const EvalItem& item) {
  json j = item.extra.is_object() ? item.extra : json::object();
  j["id"] = item.id;
  j["instruction"] = item.instruction;
  if (!item.choices.empty()) j["choices"] = item.choices;
  j["answer"] = ground_truth_to_json(item.answer, item.question_type);
  j["question_type"] = std::string(to_string(item.question_type));
  if (!item.few_shot.empty()) j["few_shot"] = exemplars_to_json(item.few_shot);
  if (item.cot_directive) j["cot_directive"] = *item.cot_directive;
  if (!item.images.empty()) j["images"] = item.images;
  if (item.category) j["category"] = *item.category;
  if (item.language) j["language"] = *item.language;
  if (item.domain) j["domain"] = *item.domain;
  if (item.modality) j["modality"] = *item.modality;
  return j;
}

json manifest_to_json(const DatasetManifest& m) {
  json j = {{"name", m.name}, {"version", m.version}, {"metrics", m.metrics}};
  if (m.default_question_type) {
    j["default_question_type"] = std::string(to_string(*m.default_question_type));
  }
  if (m.language) j["language"] = *m.language;
  if (m.domain) j["domain"] = *m.domain;
  if (m.modality) j["modality"] = *m.modality;
  if (!m.few_shot.empty()) j["few_shot"] = exemplars_to_json(m.few_shot);
  return j;
}

json dataset_to_json(const Dataset& dataset) {
  json data = json::array();
  for (const auto& item : dataset.items) data.push_back(item_to_json(item));
  return {{"meta", manifest_to_json(dataset.manifest)}, {"data", std::move(data)}};
}

}  // namespace omnieval
