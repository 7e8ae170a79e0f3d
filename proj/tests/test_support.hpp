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

// Helpers shared by the test binaries.

#ifndef OMNIEVAL_TESTS_TEST_SUPPORT_HPP_
#define OMNIEVAL_TESTS_TEST_SUPPORT_HPP_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

namespace omnieval::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(OMNIEVAL_FIXTURES) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  return nlohmann::json::parse(read_text(p));
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("omnieval-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Random but schema-valid unified dataset covering every question type and
// optional field.
inline nlohmann::json random_dataset(std::mt19937_64& rng) {
  using nlohmann::json;
  auto pick = [&rng](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto coin = [&pick] { return pick(0, 1) == 1; };
  static const std::vector<std::string> kWords = {
      "alpha", "beta", "gamma", "delta", "Ocean", "río", "東京", "x-ray", "42", "the"};
  auto phrase = [&](int min_words) {
    std::string s;
    const int n = pick(min_words, 5);
    for (int i = 0; i < n; ++i) {
      if (i > 0) s += ' ';
      s += kWords[pick(0, static_cast<int>(kWords.size()) - 1)];
    }
    return s;
  };
  static const std::vector<std::string> kTypes = {
      "single_choice", "multiple_choice", "yes_no", "fill_blank", "free_open"};
  static const std::vector<std::string> kMetrics = {
      "accuracy", "multi_choice_exact", "fill_blank_exact", "bleu", "rouge1", "rouge2", "rougeL"};

  json meta = {{"name", "ds" + std::to_string(pick(0, 999))},
               {"version", std::to_string(pick(1, 9)) + ".0"}};
  json metrics = json::array();
  for (const auto& m : kMetrics) {
    if (coin() || metrics.empty()) metrics.push_back(m);
  }
  meta["metrics"] = metrics;
  if (coin()) meta["default_question_type"] = kTypes[pick(0, 4)];
  if (coin()) meta["language"] = coin() ? "en" : "zh";
  if (coin()) meta["domain"] = "science";

  json data = json::array();
  const int n = pick(1, 8);
  for (int i = 0; i < n; ++i) {
    const std::string type = kTypes[pick(0, 4)];
    json rec = {{"id", "item-" + std::to_string(i)},
                {"instruction", phrase(1) + "?"},
                {"question_type", type}};
    if (type == "single_choice" || type == "multiple_choice") {
      const int k = pick(1, 26);
      json choices = json::array();
      for (int c = 0; c < k; ++c) choices.push_back(phrase(1) + " " + std::to_string(c));
      rec["choices"] = choices;
      if (type == "single_choice") {
        rec["answer"] = std::string(1, static_cast<char>('A' + pick(0, k - 1)));
      } else {
        std::string letters;
        for (int c = 0; c < k; ++c) {
          if (pick(0, 2) == 0) letters += static_cast<char>('A' + c);
        }
        if (letters.empty()) letters = "A";
        rec["answer"] = letters;
      }
    } else if (type == "yes_no") {
      rec["answer"] = coin() ? "yes" : "no";
    } else {
      json answers = json::array();
      const int k = pick(1, 3);
      for (int a = 0; a < k; ++a) answers.push_back(phrase(1));
      rec["answer"] = k == 1 && coin() ? answers[0] : answers;
    }
    if (coin()) rec["category"] = coin() ? "math" : "law";
    if (coin()) rec["cot_directive"] = "Reason it out.";
    if (coin()) rec["images"] = json::array({"img/" + std::to_string(i) + ".png"});
    if (coin()) rec["modality"] = "text";
    if (coin()) rec["source"] = {{"benchmark", "demo"}, {"row", i}};
    if (coin()) {
      json shots = json::array();
      for (int s = 0; s < pick(1, 3); ++s) {
        json ex = {{"instruction", phrase(1)}, {"answer", "A"}};
        if (coin()) ex["choices"] = json::array({"yes", "no"});
        shots.push_back(ex);
      }
      rec["few_shot"] = shots;
    }
    data.push_back(rec);
  }
  return {{"meta", meta}, {"data", data}};
}

}  // namespace omnieval::testing

#endif  // OMNIEVAL_TESTS_TEST_SUPPORT_HPP_
