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

#include "omnieval/cache.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>

#include <spdlog/spdlog.h>

#include "omnieval/errors.hpp"

namespace omnieval {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string canonical_json(const json& j) {
  // nlohmann::json objects are std::map-backed, so dump() is key-sorted.
  return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string cache_key(const json& request) { return sha256_hex(canonical_json(request)); }

std::string cache_key(std::string_view model_name, const PromptBundle& bundle,
                      const GenerationOptions& options) {
  return cache_key(json{{"kind", "generate"},
                        {"model", model_name},
                        {"bundle", bundle_to_json(bundle)},
                        {"options", options_to_json(options)}});
}

std::string cache_key(std::string_view model_name, std::string_view context,
                      std::string_view continuation) {
  return cache_key(json{{"kind", "loglikelihood"},
                        {"model", model_name},
                        {"context", context},
                        {"continuation", continuation}});
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create cache dir " + dir_.string() + ": " + ec.message());
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    std::ifstream in(entry.path());
    std::string line;
    std::size_t bad = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        json e = json::parse(line);
        entries_[e.at("key").get<std::string>()] = e.at("response");
      } catch (const json::exception&) {
        ++bad;
      }
    }
    if (bad > 0) {
      spdlog::warn("cache shard {}: skipped {} malformed line(s)",
                   entry.path().string(), bad);
    }
  }
}

std::optional<json> ResponseCache::lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(const std::string& key, const json& response) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  const json entry = {{"key", key}, {"response", response}, {"created_at", stamp}};

  std::lock_guard lock(mu_);
  const auto shard = dir_ / (key.substr(0, 2) + ".jsonl");
  std::ofstream out(shard, std::ios::app);
  if (!out) throw IoError("cannot append to cache shard " + shard.string());
  out << canonical_json(entry) << '\n';
  out.flush();
  if (!out) throw IoError("write failed on cache shard " + shard.string());
  entries_[key] = response;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace omnieval
