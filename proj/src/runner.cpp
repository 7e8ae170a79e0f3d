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

#include "omnieval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace omnieval {
namespace {

using nlohmann::json;

RetryPolicy policy_for(const RunConfig& config, const RunEnv& env) {
  return {config.max_retries, config.backoff_base_ms, env.sleep};
}

const AnswerExtractor& bank_for(const RunEnv& env) {
  static const AnswerExtractor kDefault;
  return env.extractor != nullptr ? *env.extractor : kDefault;
}

std::size_t item_count(const Dataset& dataset, const RunConfig& config) {
  return config.limit ? std::min(*config.limit, dataset.items.size())
                      : dataset.items.size();
}

RunRecord start_record(const EvalItem& item) {
  RunRecord r;
  r.item_id = item.id;
  r.question_type = item.question_type;
  r.category = item.category;
  r.ground_truth = item.answer;
  return r;
}

void fail_record(RunRecord& r, const std::string& error) {
  r.error = error;
  r.outcomes.clear();
  spdlog::warn("item {}: {}", r.item_id, error);
}

// Dispatches n independent tasks to at most `limit` workers; out[i] = fn(i).
template <typename Fn>
std::vector<RunRecord> run_bounded(std::size_t n, int limit, Fn&& fn) {
  std::vector<RunRecord> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(limit), n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return out;
}

void score_into(RunRecord& rec, const EvalItem& item,
                const std::vector<std::string>& metrics) {
  rec.outcomes.clear();
  for (const auto& metric : metrics) {
    rec.outcomes.push_back(score_metric(metric, item, *rec.extracted));
  }
}

void extract_and_score(RunRecord& rec, const EvalItem& item, const Dataset& dataset,
                       const AnswerExtractor& bank, Backend* model_extractor) {
  rec.extracted = bank.extract(*rec.raw_text, item.question_type, item.choices);
  if (!rec.extracted->ok() && model_extractor != nullptr) {
    ModelExtraction me = model_extract(*rec.raw_text, item.question_type, item.choices,
                                       *model_extractor, bank, item.id);
    if (me.error) spdlog::warn("item {}: {}", item.id, *me.error);
    if (me.answer.ok()) rec.extracted = std::move(me.answer);
  }
  score_into(rec, item, dataset.manifest.metrics);
}

ExtractedAnswer predicted(char letter, const char* rule) {
  ExtractedAnswer a;
  a.value = LetterSet{std::string(1, letter)};
  a.status = ExtractionStatus::kExtracted;
  a.rule_name = rule;
  return a;
}

void score_ppl(RunRecord& rec, const EvalItem& item) {
  std::vector<double> totals;
  std::vector<double> norms;
  for (const auto& c : rec.choice_logprobs) {
    totals.push_back(c.result.total_logprob);
    norms.push_back(c.normalized());
  }
  const char raw = rec.choice_logprobs[argmax_lowest(totals)].letter;
  const char norm = rec.choice_logprobs[argmax_lowest(norms)].letter;
  rec.extracted = predicted(raw, "ppl_argmax");

  QuestionOutcome acc;
  acc.item_id = item.id;
  acc.metric_name = "accuracy";
  acc.extracted = *rec.extracted;
  acc.ground_truth = item.answer;
  acc.score = score_choice_exact(acc.extracted, item.answer);

  QuestionOutcome acc_norm = acc;
  acc_norm.metric_name = "accuracy_norm";
  acc_norm.extracted = predicted(norm, "ppl_argmax_norm");
  acc_norm.score = score_choice_exact(acc_norm.extracted, item.answer);

  rec.outcomes = {std::move(acc), std::move(acc_norm)};
}

std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return s.empty() ? "_" : s;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace

std::string_view to_string(RunMode m) {
  return m == RunMode::kGenerate ? "generate" : "ppl";
}

void RunConfig::validate() const {
  if (concurrency_limit < 1) throw ConfigError("concurrency_limit must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (backoff_base_ms < 1) throw ConfigError("backoff_base_ms must be positive");
  generation.validate();
  prompt_template.validate();
}

json run_config_to_json(const RunConfig& c) {
  json j = {{"mode", std::string(to_string(c.mode))},
            {"num_shots", c.num_shots},
            {"use_cot", c.use_cot},
            {"concurrency_limit", c.concurrency_limit},
            {"max_retries", c.max_retries},
            {"backoff_base_ms", c.backoff_base_ms},
            {"output_dir", c.output_dir.string()},
            {"generation", options_to_json(c.generation)},
            {"template", template_to_json(c.prompt_template)}};
  j["limit"] = c.limit ? json(*c.limit) : json(nullptr);
  j["cache_dir"] = c.cache_dir ? json(c.cache_dir->string()) : json(nullptr);
  return j;
}

std::chrono::milliseconds RetryPolicy::delay(int attempt, double retry_after_s) const {
  const double backoff = static_cast<double>(backoff_base_ms) * std::ldexp(1.0, attempt);
  const double server = retry_after_s * 1000.0;
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::max(backoff, server)));
}

std::size_t argmax_lowest(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

json record_to_json(const RunRecord& r) {
  json j = {{"item_id", r.item_id},
            {"question_type", std::string(to_string(r.question_type))},
            {"ground_truth", ground_truth_to_json(r.ground_truth, r.question_type)},
            {"prompt_digest", r.prompt_digest}};
  if (r.category) j["category"] = *r.category;
  if (r.raw_text) j["raw_text"] = *r.raw_text;
  if (!r.choice_logprobs.empty()) {
    json lps = json::array();
    for (const auto& c : r.choice_logprobs) {
      lps.push_back({{"letter", std::string(1, c.letter)},
                     {"total_logprob", c.result.total_logprob},
                     {"token_count", c.result.token_count},
                     {"continuation_chars", c.result.continuation_chars},
                     {"normalized_logprob", c.normalized()}});
    }
    j["choice_logprobs"] = std::move(lps);
  }
  if (r.extracted) j["extracted"] = extracted_to_json(*r.extracted);
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    json oj = {{"metric", o.metric_name}, {"score", o.score}};
    if (!o.auxiliary.empty()) oj["aux"] = o.auxiliary;
    if (!r.extracted || o.extracted != *r.extracted) {
      oj["extracted"] = extracted_to_json(o.extracted);
    }
    outcomes.push_back(std::move(oj));
  }
  j["outcomes"] = std::move(outcomes);
  if (r.error) j["error"] = *r.error;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  try {
    r.item_id = j.at("item_id").get<std::string>();
    auto qt = question_type_from_string(j.at("question_type").get<std::string>());
    if (!qt) throw ParseError("record " + r.item_id + ": unknown question_type");
    r.question_type = *qt;
    r.ground_truth = ground_truth_from_json(j.at("ground_truth"), r.question_type);
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    if (auto it = j.find("category"); it != j.end()) r.category = it->get<std::string>();
    if (auto it = j.find("raw_text"); it != j.end()) r.raw_text = it->get<std::string>();
    if (auto it = j.find("choice_logprobs"); it != j.end()) {
      for (const auto& c : *it) {
        r.choice_logprobs.push_back(
            {c.at("letter").get<std::string>().at(0),
             {c.at("total_logprob").get<double>(), c.at("token_count").get<std::int64_t>(),
              c.at("continuation_chars").get<std::int64_t>()}});
      }
    }
    if (auto it = j.find("extracted"); it != j.end()) {
      r.extracted = extracted_from_json(*it, r.question_type);
    }
    for (const auto& oj : j.at("outcomes")) {
      QuestionOutcome o;
      o.item_id = r.item_id;
      o.metric_name = oj.at("metric").get<std::string>();
      o.score = oj.at("score").get<double>();
      if (auto it = oj.find("aux"); it != oj.end()) {
        o.auxiliary = it->get<std::map<std::string, double>>();
      }
      if (auto it = oj.find("extracted"); it != oj.end()) {
        o.extracted = extracted_from_json(*it, r.question_type);
      } else if (r.extracted) {
        o.extracted = *r.extracted;
      }
      o.ground_truth = r.ground_truth;
      r.outcomes.push_back(std::move(o));
    }
    if (auto it = j.find("error"); it != j.end()) r.error = it->get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
  return r;
}

std::string records_to_jsonl(const std::vector<RunRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += canonical_json(record_to_json(r));
    out += '\n';
  }
  return out;
}

std::vector<RunRecord> records_from_jsonl(std::string_view text) {
  std::vector<RunRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError("records line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RunRecord> run_generation_eval(const Dataset& dataset, Backend& backend,
                                           const RunConfig& config, const RunEnv& env) {
  config.validate();
  const auto caps = backend.capabilities();
  if (!caps.supports_generation) {
    throw UnsupportedCapability("backend '" + caps.model_name +
                                "' does not support generation");
  }
  const AnswerExtractor& bank = bank_for(env);
  const RetryPolicy policy = policy_for(config, env);

  auto evaluate = [&](std::size_t index) {
    const EvalItem& item = dataset.items[index];
    RunRecord rec = start_record(item);
    try {
      RenderedPrompt rendered = render_prompt(item, config.prompt_template, config.use_cot,
                                              config.num_shots, dataset.manifest.few_shot);
      if (rendered.warning) spdlog::warn("{}", *rendered.warning);
      const PromptBundle& bundle = rendered.bundle;
      rec.prompt_digest = sha256_hex(canonical_json(bundle_to_json(bundle)));

      const std::string key = cache_key(caps.model_name, bundle, config.generation);
      std::optional<json> hit = env.cache ? env.cache->lookup(key) : std::nullopt;
      ModelResponse response;
      if (hit) {
        response = response_from_json(*hit);
      } else {
        int retries = 0;
        response = with_retries(
            [&] { return backend.generate(bundle, config.generation); }, policy, &retries);
        if (retries > 0) spdlog::info("item {}: succeeded after {} retries", item.id, retries);
        if (env.cache) env.cache->store(key, response_to_json(response));
      }
      if (response.finish_reason == FinishReason::kError) {
        fail_record(rec, "backend reported finish_reason=error");
        return rec;
      }
      rec.raw_text = response.text;
      extract_and_score(rec, item, dataset, bank, env.model_extractor);
    } catch (const std::exception& e) {
      fail_record(rec, e.what());
    }
    return rec;
  };
  return run_bounded(item_count(dataset, config), config.concurrency_limit, evaluate);
}

std::vector<RunRecord> run_ppl_eval(const Dataset& dataset, Backend& backend,
                                    const RunConfig& config, const RunEnv& env) {
  config.validate();
  const auto caps = backend.capabilities();
  if (!caps.supports_loglikelihood) {
    throw UnsupportedCapability("backend '" + caps.model_name +
                                "' does not support loglikelihood scoring");
  }
  const std::size_t n = item_count(dataset, config);
  for (std::size_t i = 0; i < n; ++i) {
    if (dataset.items[i].choices.empty()) {
      throw ConfigError("ppl mode needs choices on every item; '" + dataset.items[i].id +
                        "' has none");
    }
  }
  const RetryPolicy policy = policy_for(config, env);

  auto evaluate = [&](std::size_t index) {
    const EvalItem& item = dataset.items[index];
    RunRecord rec = start_record(item);
    try {
      RenderedPrompt rendered = render_prompt(item, config.prompt_template, config.use_cot,
                                              config.num_shots, dataset.manifest.few_shot);
      if (rendered.warning) spdlog::warn("{}", *rendered.warning);
      const std::string context = flatten_prompt(rendered.bundle, config.prompt_template);
      rec.prompt_digest = sha256_hex(context);

      for (std::size_t c = 0; c < item.choices.size(); ++c) {
        const std::string continuation = " " + item.choices[c];
        const std::string key = cache_key(caps.model_name, context, continuation);
        std::optional<json> hit = env.cache ? env.cache->lookup(key) : std::nullopt;
        LoglikelihoodResult result;
        if (hit) {
          result = loglikelihood_from_json(*hit);
        } else {
          result = with_retries([&] { return backend.loglikelihood(context, continuation); },
                                policy);
          if (env.cache) env.cache->store(key, loglikelihood_to_json(result));
        }
        rec.choice_logprobs.push_back({letter_for(c), result});
      }
      score_ppl(rec, item);
    } catch (const std::exception& e) {
      rec.choice_logprobs.clear();
      rec.extracted.reset();
      fail_record(rec, e.what());
    }
    return rec;
  };
  return run_bounded(n, config.concurrency_limit, evaluate);
}

std::vector<RunRecord> rescore_records(const std::vector<RunRecord>& records,
                                       const Dataset& dataset,
                                       const AnswerExtractor& extractor) {
  std::unordered_map<std::string, const EvalItem*> by_id;
  for (const auto& item : dataset.items) by_id[item.id] = &item;

  std::vector<RunRecord> out;
  out.reserve(records.size());
  for (const auto& old : records) {
    auto it = by_id.find(old.item_id);
    if (it == by_id.end()) {
      RunRecord rec = old;
      fail_record(rec, "item not present in dataset");
      out.push_back(std::move(rec));
      continue;
    }
    const EvalItem& item = *it->second;
    RunRecord rec = start_record(item);
    rec.prompt_digest = old.prompt_digest;
    rec.raw_text = old.raw_text;
    rec.choice_logprobs = old.choice_logprobs;
    if (old.error) {
      rec.error = old.error;
    } else if (!rec.choice_logprobs.empty()) {
      score_ppl(rec, item);
    } else if (rec.raw_text) {
      try {
        extract_and_score(rec, item, dataset, extractor, nullptr);
      } catch (const std::exception& e) {
        fail_record(rec, e.what());
      }
    } else {
      fail_record(rec, "record has neither a raw response nor choice logprobs");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::filesystem::path write_run(const std::filesystem::path& output_dir,
                                const Dataset& dataset, const BackendCapabilities& caps,
                                const RunConfig& config,
                                const std::vector<RunRecord>& records,
                                const json& extra_meta) {
  const auto dir = output_dir / sanitize(dataset.manifest.name) / sanitize(caps.model_name);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_file(dir / "records.jsonl", records_to_jsonl(records));

  const auto errors = std::count_if(records.begin(), records.end(),
                                    [](const RunRecord& r) { return r.error.has_value(); });
  json meta = {{"dataset", manifest_to_json(dataset.manifest)},
               {"backend", capabilities_to_json(caps)},
               {"config", run_config_to_json(config)},
               {"item_count", records.size()},
               {"error_count", errors},
               {"written_at", utc_now()}};
  if (extra_meta.is_object()) {
    for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
  }
  write_file(dir / "run_meta.json", meta.dump(2) + "\n");
  return dir;
}

}  // namespace omnieval
