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

#include "omnieval/filters.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "omnieval/errors.hpp"
#include "omnieval/text.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

constexpr auto kIcase = std::regex::ECMAScript | std::regex::icase;

// Marker phrases whose following sentence holds the answer.
struct Marker {
  const char* name;
  std::regex regex;
};

const std::vector<Marker>& markers() {
  static const std::vector<Marker> kMarkers = {
      {"answer_is", std::regex(R"(\banswer\s+is\b\s*:?)", kIcase)},
      {"answer_colon", std::regex(R"(\banswer\s*:)", kIcase)},
      {"correct_option",
       std::regex(R"(\bcorrect\s+(?:option|choice)s?\s+(?:is|are)\b\s*:?)", kIcase)},
  };
  return kMarkers;
}

const std::regex& paren_line_start() {
  static const std::regex kRe(R"((?:^|\n)[ \t]*\(([A-Za-z])\))");
  return kRe;
}

const std::regex& letter_list_full() {
  static const std::regex kRe(
      R"(^\(?[A-Z]\)?(?:\s*(?:,|;|/|&|and)?\s*\(?[A-Z]\)?)*$)");
  return kRe;
}

// A lone letter after a marker may be lowercase: "answer is (c)".
const std::regex& lone_letter() {
  static const std::regex kRe(R"(^\(?([A-Za-z])\)?$)");
  return kRe;
}

const std::regex& letter_list_leading() {
  static const std::regex kRe(
      R"(^\(?[A-Z]\)?(?:\s*(?:,|&|and)\s*\(?[A-Z]\)?)*(?![A-Za-z0-9]))");
  return kRe;
}

const std::regex& standalone_letter() {
  static const std::regex kRe(R"(\b([A-Z])\b(?!['’]))");
  return kRe;
}

// Text from `pos` to the end of its sentence or line.
std::string sentence_span(std::string_view text, std::size_t pos) {
  std::size_t end = pos;
  while (end < text.size()) {
    const char c = text[end];
    if (c == '\n') break;
    if (c == '.' || c == '!' || c == '?') {
      if (end + 1 == text.size() ||
          std::isspace(static_cast<unsigned char>(text[end + 1]))) {
        break;
      }
    }
    ++end;
  }
  return trim(text.substr(pos, end - pos));
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) {
    s.pop_back();
  }
  return trim(s);
}

std::optional<LetterSet> letters_in(std::string_view s) {
  std::string letters;
  for (char c : s) {
    if (c >= 'A' && c <= 'Z') letters += c;
  }
  // "and" contributes no capitals; any other capital is a letter token.
  if (letters.empty()) return std::nullopt;
  return LetterSet::of(letters);
}

bool letters_valid(const LetterSet& set, QuestionType type, std::size_t n) {
  if (set.empty()) return false;
  if (type == QuestionType::kSingleChoice && set.letters.size() != 1) return false;
  return std::all_of(set.letters.begin(), set.letters.end(), [n](char c) {
    return static_cast<std::size_t>(c - 'A') < n;
  });
}

std::optional<LetterSet> choice_text_match(std::string_view s,
                                           std::span<const std::string> choices) {
  const std::string norm = normalize_text(s);
  if (norm.empty()) return std::nullopt;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (normalize_text(choices[i]) == norm) {
      return LetterSet{std::string(1, letter_for(i))};
    }
  }
  return std::nullopt;
}

std::optional<YesNo> yes_no_leading(std::string_view s) {
  if (auto yn = yes_no_from_text(s)) return yn;
  const std::string norm = normalize_text(s);
  const auto space = norm.find(' ');
  if (space == std::string::npos) return std::nullopt;
  return yes_no_from_text(norm.substr(0, space));
}

// Decodes the text captured by a marker or user rule.
std::optional<AnswerValue> interpret_span(std::string_view span, QuestionType type,
                                          std::span<const std::string> choices) {
  switch (type) {
    case QuestionType::kSingleChoice:
    case QuestionType::kMultipleChoice: {
      const std::string s = strip_trailing_punct(std::string(span));
      if (s.empty()) return std::nullopt;
      std::smatch lone;
      if (std::regex_match(s, lone, lone_letter())) {
        LetterSet set{std::string(
            1, static_cast<char>(std::toupper(static_cast<unsigned char>(lone.str(1)[0]))))};
        if (letters_valid(set, type, choices.size())) return set;
        return std::nullopt;
      }
      if (std::regex_match(s, letter_list_full())) {
        auto set = letters_in(s);
        if (set && letters_valid(*set, type, choices.size())) return *set;
        return std::nullopt;
      }
      if (auto set = choice_text_match(s, choices)) return *set;
      std::smatch m;
      if (std::regex_search(s, m, letter_list_leading())) {
        auto set = letters_in(m.str(0));
        if (set && letters_valid(*set, type, choices.size())) return *set;
      }
      return std::nullopt;
    }
    case QuestionType::kYesNo:
      if (auto yn = yes_no_leading(span)) return *yn;
      return std::nullopt;
    case QuestionType::kFillBlank:
    case QuestionType::kFreeOpen: {
      std::string norm = normalize_text(span);
      if (norm.empty()) return std::nullopt;
      return norm;
    }
  }
  return std::nullopt;
}

struct Candidate {
  std::size_t position;
  const char* rule;
  std::string span;
  AnswerValue value;
};

// Each marker contributes its last match; an invalid last match skips the
// marker. The latest valid candidate across markers wins.
std::optional<Candidate> marker_candidate(std::string_view raw, QuestionType type,
                                          std::span<const std::string> choices) {
  std::vector<Candidate> found;
  const std::string text(raw);

  for (const auto& marker : markers()) {
    std::optional<std::pair<std::size_t, std::size_t>> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), marker.regex);
         it != std::sregex_iterator(); ++it) {
      last = {static_cast<std::size_t>(it->position(0)),
              static_cast<std::size_t>(it->position(0) + it->length(0))};
    }
    if (!last) continue;
    std::string span = sentence_span(text, last->second);
    if (auto v = interpret_span(span, type, choices)) {
      found.push_back({last->first, marker.name, std::move(span), std::move(*v)});
    }
  }

  if (is_choice_type(type)) {
    std::optional<std::smatch> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), paren_line_start());
         it != std::sregex_iterator(); ++it) {
      last = *it;
    }
    if (last) {
      char letter = static_cast<char>(
          std::toupper(static_cast<unsigned char>(last->str(1)[0])));
      LetterSet set{std::string(1, letter)};
      if (letters_valid(set, type, choices.size())) {
        found.push_back({static_cast<std::size_t>(last->position(0)),
                         "paren_line_start", last->str(0), set});
      }
    }
  }

  {
    constexpr std::string_view kBoxed = "\\boxed{";
    std::optional<std::pair<std::size_t, std::string>> last;
    for (std::size_t pos = text.find(kBoxed); pos != std::string::npos;
         pos = text.find(kBoxed, pos + 1)) {
      std::size_t depth = 1;
      std::size_t i = pos + kBoxed.size();
      for (; i < text.size() && depth > 0; ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') --depth;
      }
      if (depth != 0) continue;
      std::string content = text.substr(pos + kBoxed.size(),
                                        i - 1 - (pos + kBoxed.size()));
      constexpr std::string_view kText = "\\text{";
      if (content.rfind(kText, 0) == 0 && content.back() == '}') {
        content = content.substr(kText.size(), content.size() - kText.size() - 1);
      }
      last = {pos, std::move(content)};
    }
    if (last) {
      if (auto v = interpret_span(last->second, type, choices)) {
        found.push_back({last->first, "boxed", last->second, std::move(*v)});
      }
    }
  }

  if (found.empty()) return std::nullopt;
  return *std::max_element(found.begin(), found.end(),
                           [](const Candidate& a, const Candidate& b) {
                             return a.position < b.position;
                           });
}

ExtractedAnswer make(AnswerValue v, std::string rule, std::string span) {
  ExtractedAnswer a;
  a.value = std::move(v);
  a.status = ExtractionStatus::kExtracted;
  a.rule_name = std::move(rule);
  a.raw_span = std::move(span);
  return a;
}

}  // namespace

std::string_view to_string(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::kExtracted: return "extracted";
    case ExtractionStatus::kModelExtracted: return "model_extracted";
    case ExtractionStatus::kUnextracted: return "unextracted";
  }
  return "unextracted";
}

std::string answer_value_to_string(const AnswerValue& v) {
  if (const auto* set = std::get_if<LetterSet>(&v)) return set->to_string();
  if (const auto* yn = std::get_if<YesNo>(&v)) return std::string(to_string(*yn));
  return std::get<std::string>(v);
}

json extracted_to_json(const ExtractedAnswer& a) {
  json j = {{"status", std::string(to_string(a.status))}};
  j["value"] = a.value ? json(answer_value_to_string(*a.value)) : json(nullptr);
  if (a.rule_name) j["rule"] = *a.rule_name;
  if (a.raw_span) j["span"] = *a.raw_span;
  return j;
}

ExtractedAnswer extracted_from_json(const json& j, QuestionType t) {
  ExtractedAnswer a;
  const auto status = j.at("status").get<std::string>();
  a.status = status == "extracted"         ? ExtractionStatus::kExtracted
             : status == "model_extracted" ? ExtractionStatus::kModelExtracted
                                           : ExtractionStatus::kUnextracted;
  if (auto it = j.find("value"); it != j.end() && it->is_string()) {
    const auto s = it->get<std::string>();
    if (is_choice_type(t)) {
      std::string letters;
      for (char c : s) {
        if (c != ',') letters += c;
      }
      a.value = LetterSet::of(letters);
    } else if (t == QuestionType::kYesNo) {
      a.value = s == "yes" ? YesNo::kYes : YesNo::kNo;
    } else {
      a.value = s;
    }
  }
  if (auto it = j.find("rule"); it != j.end()) a.rule_name = it->get<std::string>();
  if (auto it = j.find("span"); it != j.end()) a.raw_span = it->get<std::string>();
  return a;
}

ExtractionRule rule_from_json(const json& j) {
  ExtractionRule r;
  try {
    r.name = j.at("name").get<std::string>();
    r.pattern = j.at("pattern").get<std::string>();
    r.capture_group = j.value("capture_group", 1);
    for (const auto& t : j.value("applicable_types", json::array())) {
      auto qt = question_type_from_string(t.get<std::string>());
      if (!qt) throw ConfigError("extraction rule '" + r.name +
                                 "': unknown question type " + t.dump());
      r.applicable_types.insert(*qt);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("extraction rule: ") + e.what());
  }
  return r;
}

AnswerExtractor::AnswerExtractor(std::vector<ExtractionRule> user_rules) {
  for (auto& rule : user_rules) {
    std::regex re;
    try {
      re = std::regex(rule.pattern, kIcase);
    } catch (const std::regex_error& e) {
      throw ConfigError("extraction rule '" + rule.name +
                        "': pattern does not compile: " + e.what());
    }
    if (rule.capture_group < 0 ||
        static_cast<std::size_t>(rule.capture_group) > re.mark_count()) {
      throw ConfigError("extraction rule '" + rule.name + "': capture group " +
                        std::to_string(rule.capture_group) + " does not exist");
    }
    user_rules_.push_back({std::move(rule), std::move(re)});
  }
}

ExtractedAnswer AnswerExtractor::extract(std::string_view raw, QuestionType type,
                                         std::span<const std::string> choices) const {
  const std::string text(raw);
  if (trim(text).empty()) return ExtractedAnswer::unextracted();

  for (const auto& [rule, regex] : user_rules_) {
    if (!rule.applicable_types.empty() && !rule.applicable_types.count(type)) {
      continue;
    }
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), regex);
         it != std::sregex_iterator(); ++it) {
      last = it->str(rule.capture_group);
    }
    if (!last) continue;
    if (auto v = interpret_span(*last, type, choices)) {
      return make(std::move(*v), rule.name, *last);
    }
  }

  if (auto c = marker_candidate(text, type, choices)) {
    return make(std::move(c->value), c->rule, std::move(c->span));
  }

  switch (type) {
    case QuestionType::kSingleChoice:
    case QuestionType::kMultipleChoice: {
      if (type == QuestionType::kMultipleChoice) {
        const std::string whole = strip_trailing_punct(trim(text));
        if (std::regex_match(whole, letter_list_full())) {
          auto set = letters_in(whole);
          if (set && letters_valid(*set, type, choices.size())) {
            return make(*set, "letter_list", whole);
          }
        }
      }
      std::optional<std::string> last;
      for (auto it = std::sregex_iterator(text.begin(), text.end(),
                                          standalone_letter());
           it != std::sregex_iterator(); ++it) {
        const char c = it->str(1)[0];
        if (static_cast<std::size_t>(c - 'A') < choices.size()) last = it->str(1);
      }
      if (last) return make(LetterSet{*last}, "standalone_letter", *last);
      if (auto set = choice_text_match(text, choices)) {
        return make(*set, "choice_text", trim(text));
      }
      return ExtractedAnswer::unextracted();
    }
    case QuestionType::kYesNo:
      if (auto yn = yes_no_leading(text)) {
        return make(*yn, "yes_no_leading", trim(text));
      }
      return ExtractedAnswer::unextracted();
    case QuestionType::kFillBlank:
    case QuestionType::kFreeOpen: {
      std::string norm = normalize_text(text);
      if (norm.empty()) return ExtractedAnswer::unextracted();
      return make(std::move(norm), "full_text", trim(text));
    }
  }
  return ExtractedAnswer::unextracted();
}

ExtractedAnswer extract_answer(std::string_view raw, QuestionType type,
                               std::span<const std::string> choices) {
  static const AnswerExtractor kDefault;
  return kDefault.extract(raw, type, choices);
}

std::string extraction_prompt(std::string_view raw, QuestionType type,
                              std::span<const std::string> choices) {
  std::ostringstream out;
  out << "Below is a response to a question. Extract the final answer that the "
         "response gives.\n";
  if (!choices.empty()) {
    out << "\nOptions:\n";
    for (std::size_t i = 0; i < choices.size(); ++i) {
      out << letter_for(i) << ". " << choices[i] << "\n";
    }
  }
  out << "\nResponse:\n\"\"\"\n" << raw << "\n\"\"\"\n\n";
  switch (type) {
    case QuestionType::kSingleChoice:
      out << "Reply with only the option letter.";
      break;
    case QuestionType::kMultipleChoice:
      out << "Reply with only the option letters, separated by commas.";
      break;
    case QuestionType::kYesNo:
      out << "Reply with only yes or no.";
      break;
    case QuestionType::kFillBlank:
    case QuestionType::kFreeOpen:
      out << "Reply with only the short answer.";
      break;
  }
  out << " If the response gives no answer, reply with none.";
  return out.str();
}

ModelExtraction model_extract(std::string_view raw, QuestionType type,
                              std::span<const std::string> choices,
                              Backend& extractor, const AnswerExtractor& bank,
                              std::string_view item_id) {
  PromptBundle bundle;
  bundle.item_id = std::string(item_id);
  bundle.turns.push_back({Role::kUser, extraction_prompt(raw, type, choices), {}});
  GenerationOptions options;
  options.max_new_tokens = 32;

  ModelExtraction out;
  ModelResponse reply;
  try {
    reply = extractor.generate(bundle, options);
  } catch (const std::exception& e) {
    out.error = std::string("model extraction failed: ") + e.what();
    return out;
  }
  if (normalize_text(reply.text) == "none") return out;
  ExtractedAnswer a = bank.extract(reply.text, type, choices);
  if (!a.ok()) return out;
  a.status = ExtractionStatus::kModelExtracted;
  a.rule_name = "model_extract";
  a.raw_span = reply.text;
  out.answer = std::move(a);
  return out;
}

}  // namespace omnieval
