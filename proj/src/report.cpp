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

#include "omnieval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "omnieval/errors.hpp"

namespace omnieval {
namespace {

using nlohmann::json;

// Sorting first makes the sum independent of record order.
double order_free_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

const QuestionOutcome* find_outcome(const RunRecord& r, std::string_view metric) {
  if (r.error) return nullptr;
  for (const auto& o : r.outcomes) {
    if (o.metric_name == metric) return &o;
  }
  return nullptr;
}

std::vector<MetricValue> summarize(const std::vector<const RunRecord*>& group,
                                   const std::vector<std::string>& metrics) {
  std::vector<MetricValue> out;
  const auto support = static_cast<std::int64_t>(group.size());
  for (const auto& metric : metrics) {
    std::vector<double> scores;
    for (const RunRecord* r : group) {
      const QuestionOutcome* o = find_outcome(*r, metric);
      scores.push_back(o ? o->score : 0.0);
    }
    out.push_back({metric, order_free_mean(std::move(scores)), support});
  }
  if (std::find(metrics.begin(), metrics.end(), "multi_choice_exact") != metrics.end()) {
    std::vector<double> jaccard;
    for (const RunRecord* r : group) {
      double value = 0.0;
      if (const QuestionOutcome* o = find_outcome(*r, "multi_choice_exact")) {
        if (auto it = o->auxiliary.find("jaccard"); it != o->auxiliary.end()) {
          value = it->second;
        }
      }
      jaccard.push_back(value);
    }
    out.push_back({"multi_choice_jaccard", order_free_mean(std::move(jaccard)), support});
  }
  if (std::find(metrics.begin(), metrics.end(), "bleu") != metrics.end()) {
    BleuStats pooled;
    for (const RunRecord* r : group) {
      const QuestionOutcome* o = find_outcome(*r, "bleu");
      const std::string candidate =
          o && o->extracted.value ? answer_value_to_string(*o->extracted.value) : "";
      const auto refs = truth_texts(r->ground_truth);
      pooled += bleu_stats(candidate, refs);
    }
    out.push_back({"bleu_corpus", bleu_from_stats(pooled), support});
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

void render_csv_rows(const MetricReport& r, std::ostringstream& out) {
  const std::string prefix = csv_field(r.dataset) + "," + csv_field(r.model) + ",";
  for (std::size_t m = 0; m < r.metrics.size(); ++m) {
    const auto& mv = r.metrics[m];
    out << prefix << csv_field(mv.name) << "," << kAllCategories << ","
        << format_value(mv.value) << "," << mv.support << "\n";
    for (const auto& [category, values] : r.categories) {
      const auto& cv = values[m];
      out << prefix << csv_field(cv.name) << "," << csv_field(category) << ","
          << format_value(cv.value) << "," << cv.support << "\n";
    }
  }
  out << prefix << "extraction_failure_rate," << kAllCategories << ","
      << format_value(r.extraction_failure_rate) << "," << r.item_count << "\n";
}

void render_markdown(const MetricReport& r, std::ostringstream& out) {
  out << "## " << md_cell(r.dataset) << " / " << md_cell(r.model) << "\n\n";
  out << "| category |";
  for (const auto& mv : r.metrics) out << " " << md_cell(mv.name) << " |";
  out << " support |\n|---|";
  for (std::size_t i = 0; i < r.metrics.size(); ++i) out << "---:|";
  out << "---:|\n";
  auto row = [&](const std::string& category, const std::vector<MetricValue>& values) {
    out << "| " << md_cell(category) << " |";
    for (const auto& v : values) out << " " << format_value(v.value) << " |";
    out << " " << (values.empty() ? 0 : values.front().support) << " |\n";
  };
  row(std::string(kAllCategories), r.metrics);
  for (const auto& [category, values] : r.categories) row(category, values);
  out << "\nitems: " << r.item_count << ", errors: " << r.error_count
      << ", extraction failure rate: " << format_value(r.extraction_failure_rate)
      << "\n";
}

void render_jsonl(const MetricReport& r, std::ostringstream& out) {
  out << json{{"kind", "summary"},
              {"dataset", r.dataset},
              {"model", r.model},
              {"item_count", r.item_count},
              {"error_count", r.error_count},
              {"extraction_failure_rate", r.extraction_failure_rate}}
             .dump()
      << "\n";
  auto line = [&](const MetricValue& v, const std::string& category) {
    out << json{{"kind", "metric"},        {"dataset", r.dataset},
                {"model", r.model},        {"metric", v.name},
                {"category", category},    {"value", v.value},
                {"support", v.support}}
               .dump()
        << "\n";
  };
  for (const auto& v : r.metrics) line(v, std::string(kAllCategories));
  for (const auto& [category, values] : r.categories) {
    for (const auto& v : values) line(v, category);
  }
}

}  // namespace

MetricReport aggregate(std::span<const RunRecord> records, const DatasetManifest& manifest,
                       std::string model) {
  if (records.empty()) throw EmptyRun();
  MetricReport report;
  report.dataset = manifest.name;
  report.model = std::move(model);
  report.item_count = static_cast<std::int64_t>(records.size());

  std::vector<std::string> metrics;
  std::int64_t unextracted = 0;
  std::vector<const RunRecord*> all;
  std::map<std::string, std::vector<const RunRecord*>> by_category;
  for (const auto& r : records) {
    all.push_back(&r);
    by_category[r.category.value_or(std::string(kUncategorized))].push_back(&r);
    if (r.error) {
      ++report.error_count;
      continue;
    }
    if (!r.extracted || !r.extracted->ok()) ++unextracted;
    for (const auto& o : r.outcomes) {
      if (std::find(metrics.begin(), metrics.end(), o.metric_name) == metrics.end()) {
        metrics.push_back(o.metric_name);
      }
    }
  }
  // First-seen order depends on record order; pin it to the manifest order
  // with any extra metrics (e.g. accuracy_norm) sorted after.
  std::vector<std::string> ordered;
  for (const auto& m : manifest.metrics) {
    if (metrics.empty() ||
        std::find(metrics.begin(), metrics.end(), m) != metrics.end()) {
      ordered.push_back(m);
    }
  }
  std::vector<std::string> extra;
  for (const auto& m : metrics) {
    if (std::find(ordered.begin(), ordered.end(), m) == ordered.end()) extra.push_back(m);
  }
  std::sort(extra.begin(), extra.end());
  ordered.insert(ordered.end(), extra.begin(), extra.end());

  report.metrics = summarize(all, ordered);
  for (const auto& [category, group] : by_category) {
    report.categories[category] = summarize(group, ordered);
  }
  report.extraction_failure_rate =
      static_cast<double>(unextracted) / static_cast<double>(report.item_count);
  return report;
}

ReportFormat report_format_from_string(std::string_view s) {
  if (s == "jsonl") return ReportFormat::kJsonl;
  if (s == "md" || s == "markdown") return ReportFormat::kMarkdown;
  if (s == "csv") return ReportFormat::kCsv;
  throw ConfigError("unknown report format '" + std::string(s) + "'");
}

std::string format_value(double v) {
  // glibc printf rounds the exact binary value to nearest, ties to even.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string render_reports(std::span<const MetricReport> reports, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) out << "dataset,model,metric,category,value,support\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    switch (format) {
      case ReportFormat::kCsv:
        render_csv_rows(reports[i], out);
        break;
      case ReportFormat::kMarkdown:
        if (i > 0) out << "\n";
        render_markdown(reports[i], out);
        break;
      case ReportFormat::kJsonl:
        render_jsonl(reports[i], out);
        break;
    }
  }
  return out.str();
}

std::string render_report(const MetricReport& report, ReportFormat format) {
  return render_reports(std::span<const MetricReport>(&report, 1), format);
}

void emit_report(const MetricReport& report, ReportFormat format,
                 const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + destination.string() + " for writing");
  out << render_report(report, format);
  if (!out) throw IoError("write failed on " + destination.string());
}

std::vector<MetricReport> parse_jsonl_reports(std::string_view text) {
  std::vector<MetricReport> out;
  std::istringstream in{std::string(text)};
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "summary") {
        MetricReport r;
        r.dataset = j.at("dataset").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.item_count = j.at("item_count").get<std::int64_t>();
        r.error_count = j.at("error_count").get<std::int64_t>();
        r.extraction_failure_rate = j.at("extraction_failure_rate").get<double>();
        out.push_back(std::move(r));
        continue;
      }
      if (out.empty()) throw ParseError("metric line before any summary line");
      MetricValue v{j.at("metric").get<std::string>(), j.at("value").get<double>(),
                    j.at("support").get<std::int64_t>()};
      const auto category = j.at("category").get<std::string>();
      if (category == kAllCategories) {
        out.back().metrics.push_back(std::move(v));
      } else {
        out.back().categories[category].push_back(std::move(v));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("report jsonl: ") + e.what());
  }
  return out;
}

}  // namespace omnieval
