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

#ifndef OMNIEVAL_ESTIMATORS_HPP_
#define OMNIEVAL_ESTIMATORS_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omnieval/dataset.hpp"
#include "omnieval/filters.hpp"

namespace omnieval {

struct QuestionOutcome {
  std::string item_id;
  std::string metric_name;
  double score = 0.0;  // in [0, 1]
  ExtractedAnswer extracted;
  GroundTruth ground_truth;
  // Diagnostics that do not affect the score, e.g. {"jaccard": 0.5}.
  std::map<std::string, double> auxiliary;

  bool operator==(const QuestionOutcome&) const = default;
};

struct MetricValue {
  std::string name;
  double value = 0.0;
  std::int64_t support = 0;

  bool operator==(const MetricValue&) const = default;
};

// Registry names usable in manifests and configuration.
const std::vector<std::string>& metric_names();
bool is_known_metric(std::string_view name);

// 1.0 iff the extracted letter or yes/no token equals the truth.
double score_choice_exact(const ExtractedAnswer& extracted, const GroundTruth& truth);

struct MultiChoiceScore {
  double exact = 0.0;
  double jaccard = 0.0;
};

// An unextracted answer is the empty set.
MultiChoiceScore score_multi_choice(const LetterSet& extracted, const LetterSet& truth);

double score_fill_blank(std::string_view extracted,
                        std::span<const std::string> accepted);

inline constexpr int kBleuMaxOrder = 4;

// Clipped n-gram counts for one candidate, poolable across a corpus.
struct BleuStats {
  std::array<std::int64_t, kBleuMaxOrder> matched{};
  std::array<std::int64_t, kBleuMaxOrder> total{};
  std::int64_t candidate_length = 0;
  std::int64_t reference_length = 0;  // closest reference, ties to shorter

  BleuStats& operator+=(const BleuStats& other);
};

// Throws EmptyReferences.
BleuStats bleu_stats(std::string_view candidate,
                     std::span<const std::string> references);

// p1 unsmoothed, p_n = (m + 1) / (t + 1) for n >= 2, orders with no candidate
// n-grams dropped, brevity penalty exp(1 - r/c) when c < r.
double bleu_from_stats(const BleuStats& stats);

// Sentence-level BLEU with max order 4. Throws EmptyReferences.
double bleu(std::string_view candidate, std::span<const std::string> references);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// n in {1, 2}; throws PreconditionError otherwise.
RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n);
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

// Length of the longest common subsequence of two token sequences.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// Scores one extracted answer under a registry metric. Text metrics compare
// the canonical string form of the answer against every accepted truth and
// keep the best score. Throws ConfigError for unknown metric names.
QuestionOutcome score_metric(std::string_view metric, const EvalItem& item,
                             const ExtractedAnswer& extracted);

// Canonical text forms of a ground truth ("A,C", "yes", or the texts).
std::vector<std::string> truth_texts(const GroundTruth& truth);

}  // namespace omnieval

#endif  // OMNIEVAL_ESTIMATORS_HPP_
