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

// omnieval command-line interface: eval, score, validate and report.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "omnieval/cache.hpp"
#include "omnieval/config.hpp"
#include "omnieval/dataset.hpp"
#include "omnieval/errors.hpp"
#include "omnieval/report.hpp"
#include "omnieval/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDataset = 2;
constexpr int kExitItemErrors = 3;

struct EvalFlags {
  std::string config;
  std::optional<std::string> dataset;
  std::optional<std::string> backend_url;
  std::optional<std::string> model;
  std::optional<std::string> mode;
  std::optional<int> shots;
  bool cot = false;
  std::optional<std::size_t> limit;
  std::optional<int> concurrency;
  std::optional<std::string> output;
  std::optional<std::string> cache;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw omnieval::IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_or_print(const std::string& content, const std::optional<std::string>& out) {
  if (!out) {
    std::cout << content;
    return;
  }
  std::ofstream f(*out, std::ios::binary | std::ios::trunc);
  if (!f) throw omnieval::IoError("cannot write " + *out);
  f << content;
}

int run_eval(const EvalFlags& flags) {
  omnieval::EvalSettings s = omnieval::load_settings(flags.config);
  auto& run = s.run;
  if (flags.dataset) s.dataset = *flags.dataset;
  if (flags.backend_url) {
    s.backend.type = "http";
    s.backend.http.base_url = *flags.backend_url;
  }
  if (flags.model) s.backend.http.model_name = *flags.model;
  if (flags.mode) {
    if (*flags.mode == "generate") {
      run.mode = omnieval::RunMode::kGenerate;
    } else if (*flags.mode == "ppl") {
      run.mode = omnieval::RunMode::kPpl;
    } else {
      throw omnieval::ConfigError("--mode must be generate or ppl");
    }
  }
  if (flags.shots) {
    if (*flags.shots < 0) throw omnieval::ConfigError("--shots must be >= 0");
    run.num_shots = static_cast<std::size_t>(*flags.shots);
  }
  if (flags.cot) run.use_cot = true;
  if (flags.limit) run.limit = *flags.limit;
  if (flags.concurrency) run.concurrency_limit = *flags.concurrency;
  if (flags.output) run.output_dir = *flags.output;
  if (flags.cache) run.cache_dir = *flags.cache;
  run.validate();
  if (!s.dataset) throw omnieval::ConfigError("no dataset given (--dataset or \"dataset\")");

  omnieval::Dataset dataset;
  try {
    dataset = omnieval::load_dataset(*s.dataset, s.dataset_defaults);
  } catch (const omnieval::Error& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitDataset;
  }

  auto backend = omnieval::make_backend(s.backend);
  std::unique_ptr<omnieval::Backend> extractor_model;
  if (s.extractor) extractor_model = omnieval::make_backend(*s.extractor);
  const omnieval::AnswerExtractor bank(s.extraction_rules);
  std::optional<omnieval::ResponseCache> cache;
  if (run.cache_dir) cache.emplace(*run.cache_dir);

  omnieval::RunEnv env;
  env.cache = cache ? &*cache : nullptr;
  env.extractor = &bank;
  env.model_extractor = extractor_model.get();

  const auto started = std::chrono::system_clock::now();
  auto records = run.mode == omnieval::RunMode::kPpl
                     ? omnieval::run_ppl_eval(dataset, *backend, run, env)
                     : omnieval::run_generation_eval(dataset, *backend, run, env);
  const double seconds =
      std::chrono::duration<double>(std::chrono::system_clock::now() - started).count();

  const auto caps = backend->capabilities();
  const fs::path dir = omnieval::write_run(run.output_dir, dataset, caps, run, records,
                                           json{{"elapsed_s", seconds}});
  const auto report = omnieval::aggregate(records, dataset.manifest, caps.model_name);
  omnieval::emit_report(report, omnieval::ReportFormat::kJsonl, dir / "report.jsonl");
  std::cout << omnieval::render_report(report, omnieval::ReportFormat::kMarkdown);
  spdlog::info("wrote {}", dir.string());
  return report.error_count > 0 ? kExitItemErrors : kExitOk;
}

int run_score(const std::string& records_path, const std::string& dataset_path,
              const std::string& format, const std::optional<std::string>& out) {
  omnieval::Dataset dataset;
  try {
    dataset = omnieval::load_dataset(dataset_path);
  } catch (const omnieval::Error& e) {
    std::cerr << "dataset error: " << e.what() << "\n";
    return kExitDataset;
  }
  const auto records = omnieval::records_from_jsonl(read_file(records_path));
  const omnieval::AnswerExtractor bank;
  const auto rescored = omnieval::rescore_records(records, dataset, bank);
  if (out) write_or_print(omnieval::records_to_jsonl(rescored), out);

  std::string model = "unknown";
  const fs::path meta = fs::path(records_path).parent_path() / "run_meta.json";
  if (fs::exists(meta)) {
    model = json::parse(read_file(meta)).at("backend").value("model_name", model);
  }
  const auto report = omnieval::aggregate(rescored, dataset.manifest, model);
  std::cout << omnieval::render_report(report,
                                       omnieval::report_format_from_string(format));
  return report.error_count > 0 ? kExitItemErrors : kExitOk;
}

int run_validate(const std::string& dataset_path) {
  try {
    const auto ds = omnieval::load_dataset(dataset_path);
    std::cout << "ok: " << ds.manifest.name << " (" << ds.items.size() << " items)\n";
    return kExitOk;
  } catch (const omnieval::Error& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitUsage;
  }
}

int run_report(const std::string& runs_dir, const std::string& format,
               const std::optional<std::string>& out) {
  const auto fmt = omnieval::report_format_from_string(format);
  std::vector<fs::path> found;
  for (const auto& e : fs::recursive_directory_iterator(runs_dir)) {
    if (e.is_regular_file() && e.path().filename() == "records.jsonl") {
      found.push_back(e.path());
    }
  }
  std::sort(found.begin(), found.end());
  if (found.empty()) throw omnieval::ConfigError("no records.jsonl under " + runs_dir);

  std::vector<omnieval::MetricReport> reports;
  for (const auto& path : found) {
    const json meta = json::parse(read_file(path.parent_path() / "run_meta.json"));
    const auto manifest = omnieval::parse_manifest(meta.at("dataset"), {});
    const auto records = omnieval::records_from_jsonl(read_file(path));
    reports.push_back(omnieval::aggregate(
        records, manifest, meta.at("backend").at("model_name").get<std::string>()));
  }
  write_or_print(omnieval::render_reports(reports, fmt), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omnieval: evaluation harness for language models"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Run a dataset through a backend and score it");
  eval->add_option("--config", ef.config, "Run configuration (JSON)")->required();
  eval->add_option("--dataset", ef.dataset, "Dataset file");
  eval->add_option("--backend", ef.backend_url, "Base URL of an OpenAI-compatible server");
  eval->add_option("--model", ef.model, "Model name sent to the backend");
  eval->add_option("--mode", ef.mode, "generate or ppl")
      ->check(CLI::IsMember({"generate", "ppl"}));
  eval->add_option("--shots", ef.shots, "Few-shot exemplars per item");
  eval->add_flag("--cot", ef.cot, "Append the chain-of-thought directive");
  eval->add_option("--limit", ef.limit, "Evaluate at most N items");
  eval->add_option("--concurrency", ef.concurrency, "Requests in flight");
  eval->add_option("--output", ef.output, "Output directory");
  eval->add_option("--cache", ef.cache, "Response cache directory");

  std::string records_path;
  std::string dataset_path;
  std::string score_format = "md";
  std::optional<std::string> score_out;
  auto* score = app.add_subcommand("score", "Re-score stored responses offline");
  score->add_option("--records", records_path, "records.jsonl of a previous run")->required();
  score->add_option("--dataset", dataset_path, "Dataset file")->required();
  score->add_option("--format", score_format, "md, csv or jsonl")
      ->check(CLI::IsMember({"md", "markdown", "csv", "jsonl"}));
  score->add_option("--out", score_out, "Write re-scored records here");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a dataset against the schema");
  validate->add_option("--dataset", validate_path, "Dataset file")->required();

  std::string runs_dir;
  std::string report_format;
  std::optional<std::string> report_out;
  auto* report = app.add_subcommand("report", "Aggregate finished runs");
  report->add_option("--runs", runs_dir, "Directory holding run outputs")->required();
  report->add_option("--format", report_format, "md, csv or jsonl")
      ->required()
      ->check(CLI::IsMember({"md", "markdown", "csv", "jsonl"}));
  report->add_option("--out", report_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*eval) return run_eval(ef);
    if (*score) return run_score(records_path, dataset_path, score_format, score_out);
    if (*validate) return run_validate(validate_path);
    if (*report) return run_report(runs_dir, report_format, report_out);
  } catch (const omnieval::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataset;
  } catch (const omnieval::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataset;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
