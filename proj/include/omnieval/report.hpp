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

#ifndef OMNIEVAL_REPORT_HPP_
#define OMNIEVAL_REPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "omnieval/dataset.hpp"
#include "omnieval/estimators.hpp"
#include "omnieval/runner.hpp"

namespace omnieval {

// Reserved category key for the whole dataset.
inline constexpr std::string_view kAllCategories = "__all__";
inline constexpr std::string_view kUncategorized = "uncategorized";

struct MetricReport {
  std::string dataset;
  std::string model;
  std::vector<MetricValue> metrics;
  std::map<std::string, std::vector<MetricValue>> categories;
  double extraction_failure_rate = 0.0;
  std::int64_t item_count = 0;
  std::int64_t error_count = 0;

  bool operator==(const MetricReport&) const = default;
};

// Per-metric means over all records, with errored items scoring 0. Also
// reports the multi-choice Jaccard mean and pooled corpus BLEU when those
// metrics are present. Throws EmptyRun.
MetricReport aggregate(std::span<const RunRecord> records,
                       const DatasetManifest& manifest, std::string model = "");

enum class ReportFormat { kJsonl, kMarkdown, kCsv };

// Accepts "jsonl", "md"/"markdown", "csv". Throws ConfigError.
ReportFormat report_format_from_string(std::string_view s);

// Four decimals, ties to even.
std::string format_value(double v);

std::string render_report(const MetricReport& report, ReportFormat format);
// Several reports in one document (one csv header, one markdown section each).
std::string render_reports(std::span<const MetricReport> reports, ReportFormat format);

// Throws IoError.
void emit_report(const MetricReport& report, ReportFormat format,
                 const std::filesystem::path& destination);

// Inverse of the jsonl rendering; values keep full precision.
std::vector<MetricReport> parse_jsonl_reports(std::string_view text);

}  // namespace omnieval

#endif  // OMNIEVAL_REPORT_HPP_
