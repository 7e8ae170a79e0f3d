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

#include "omnieval/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omnieval/errors.hpp"
#include "omnieval/text.hpp"

namespace omnieval {
namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, std::int64_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Tokens(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

double f_measure(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string candidate_text(const ExtractedAnswer& a) {
  return a.value ? answer_value_to_string(*a.value) : std::string();
}

}  // namespace

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> kNames = {
      "accuracy", "multi_choice_exact", "fill_blank_exact", "bleu",
      "rouge1",   "rouge2",             "rougeL"};
  return kNames;
}

bool is_known_metric(std::string_view name) {
  const auto& names = metric_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

double score_choice_exact(const ExtractedAnswer& extracted, const GroundTruth& truth) {
  if (!extracted.value) return 0.0;
  if (const auto* set = std::get_if<LetterSet>(&truth)) {
    const auto* got = std::get_if<LetterSet>(&*extracted.value);
    return got != nullptr && *got == *set ? 1.0 : 0.0;
  }
  if (const auto* yn = std::get_if<YesNo>(&truth)) {
    const auto* got = std::get_if<YesNo>(&*extracted.value);
    return got != nullptr && *got == *yn ? 1.0 : 0.0;
  }
  return 0.0;
}

MultiChoiceScore score_multi_choice(const LetterSet& extracted, const LetterSet& truth) {
  std::string inter;
  std::string uni;
  std::set_intersection(extracted.letters.begin(), extracted.letters.end(),
                        truth.letters.begin(), truth.letters.end(),
                        std::back_inserter(inter));
  std::set_union(extracted.letters.begin(), extracted.letters.end(),
                 truth.letters.begin(), truth.letters.end(), std::back_inserter(uni));
  MultiChoiceScore s;
  s.exact = extracted == truth && !truth.empty() ? 1.0 : 0.0;
  s.jaccard = uni.empty() ? 0.0
                          : static_cast<double>(inter.size()) /
                                static_cast<double>(uni.size());
  return s;
}

double score_fill_blank(std::string_view extracted,
                        std::span<const std::string> accepted) {
  const std::string got = normalize_text(extracted);
  for (const auto& truth : accepted) {
    if (normalize_text(truth) == got) return 1.0;
  }
  return 0.0;
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    matched[n] += other.matched[n];
    total[n] += other.total[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(std::string_view candidate,
                     std::span<const std::string> references) {
  if (references.empty()) throw EmptyReferences();
  const Tokens cand = tokenize(candidate);
  std::vector<Tokens> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(tokenize(r));

  BleuStats stats;
  stats.candidate_length = static_cast<std::int64_t>(cand.size());
  std::int64_t best = -1;
  for (const auto& r : refs) {
    const auto len = static_cast<std::int64_t>(r.size());
    const auto diff = std::llabs(len - stats.candidate_length);
    const auto best_diff = std::llabs(best - stats.candidate_length);
    if (best < 0 || diff < best_diff || (diff == best_diff && len < best)) {
      best = len;
    }
  }
  stats.reference_length = best;

  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    const NgramCounts cand_counts = count_ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [gram, c] : count_ngrams(r, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, c);
      }
    }
    for (const auto& [gram, c] : cand_counts) {
      stats.total[n - 1] += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) stats.matched[n - 1] += std::min(c, it->second);
    }
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats) {
  if (stats.candidate_length == 0 || stats.total[0] == 0) return 0.0;
  if (stats.matched[0] == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < kBleuMaxOrder; ++n) {
    if (stats.total[n] == 0) continue;
    const double p = n == 0 ? static_cast<double>(stats.matched[n]) /
                                  static_cast<double>(stats.total[n])
                            : static_cast<double>(stats.matched[n] + 1) /
                                  static_cast<double>(stats.total[n] + 1);
    log_sum += std::log(p);
    ++orders;
  }
  const double c = static_cast<double>(stats.candidate_length);
  const double r = static_cast<double>(stats.reference_length);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / orders);
}

double bleu(std::string_view candidate, std::span<const std::string> references) {
  return bleu_from_stats(bleu_stats(candidate, references));
}

RougeScore rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n != 1 && n != 2) {
    throw PreconditionError("rouge_n supports n = 1 or 2, got " + std::to_string(n));
  }
  const auto cand = count_ngrams(tokenize(candidate), n);
  const auto ref = count_ngrams(tokenize(reference), n);
  std::int64_t cand_total = 0;
  std::int64_t ref_total = 0;
  std::int64_t overlap = 0;
  for (const auto& [gram, c] : cand) {
    cand_total += c;
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [gram, c] : ref) ref_total += c;

  RougeScore s;
  if (cand_total == 0 || ref_total == 0) return s;
  s.precision = static_cast<double>(overlap) / static_cast<double>(cand_total);
  s.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  s.f1 = f_measure(s.precision, s.recall);
  return s;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  // Two-row table over b.
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  const Tokens cand = tokenize(candidate);
  const Tokens ref = tokenize(reference);
  RougeScore s;
  if (cand.empty() || ref.empty()) return s;
  const auto lcs = static_cast<double>(lcs_length(cand, ref));
  s.precision = lcs / static_cast<double>(cand.size());
  s.recall = lcs / static_cast<double>(ref.size());
  s.f1 = f_measure(s.precision, s.recall);
  return s;
}

std::vector<std::string> truth_texts(const GroundTruth& truth) {
  if (const auto* set = std::get_if<LetterSet>(&truth)) return {set->to_string()};
  if (const auto* yn = std::get_if<YesNo>(&truth)) return {std::string(to_string(*yn))};
  return std::get<std::vector<std::string>>(truth);
}

QuestionOutcome score_metric(std::string_view metric, const EvalItem& item,
                             const ExtractedAnswer& extracted) {
  QuestionOutcome out;
  out.item_id = item.id;
  out.metric_name = std::string(metric);
  out.extracted = extracted;
  out.ground_truth = item.answer;

  const auto texts = truth_texts(item.answer);
  const std::string candidate = candidate_text(extracted);

  if (metric == "accuracy" || metric == "multi_choice_exact") {
    if (const auto* truth = std::get_if<LetterSet>(&item.answer)) {
      LetterSet got;
      if (extracted.value) {
        if (const auto* s = std::get_if<LetterSet>(&*extracted.value)) got = *s;
      }
      const auto mc = score_multi_choice(got, *truth);
      out.score = mc.exact;
      if (metric == "multi_choice_exact") out.auxiliary["jaccard"] = mc.jaccard;
    } else if (std::holds_alternative<YesNo>(item.answer)) {
      out.score = score_choice_exact(extracted, item.answer);
    } else {
      out.score = extracted.value ? score_fill_blank(candidate, texts) : 0.0;
    }
  } else if (metric == "fill_blank_exact") {
    out.score = extracted.value ? score_fill_blank(candidate, texts) : 0.0;
  } else if (metric == "bleu") {
    out.score = bleu(candidate, texts);
  } else if (metric == "rouge1" || metric == "rouge2" || metric == "rougeL") {
    RougeScore best;
    for (const auto& ref : texts) {
      const RougeScore s = metric == "rougeL" ? rouge_l(candidate, ref)
                                              : rouge_n(candidate, ref,
                                                        metric == "rouge1" ? 1 : 2);
      if (s.f1 > best.f1) best = s;
    }
    out.score = best.f1;
    out.auxiliary["precision"] = best.precision;
    out.auxiliary["recall"] = best.recall;
  } else {
    throw ConfigError("unknown metric '" + std::string(metric) + "'");
  }
  return out;
}

}  // namespace omnieval
