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

#ifndef OMNIEVAL_CACHE_HPP_
#define OMNIEVAL_CACHE_HPP_

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "omnieval/backend.hpp"

namespace omnieval {

std::string sha256_hex(std::string_view bytes);

// Sorted keys, UTF-8, no insignificant whitespace.
std::string canonical_json(const nlohmann::json& j);

// SHA-256 of the canonical serialization of a request.
std::string cache_key(const nlohmann::json& request);
std::string cache_key(std::string_view model_name, const PromptBundle& bundle,
                      const GenerationOptions& options);
std::string cache_key(std::string_view model_name, std::string_view context,
                      std::string_view continuation);

// Append-only response cache. Entries live in {dir}/{first two hex chars of
// the key}.jsonl, one {"key", "response", "created_at"} object per line.
// The index is loaded at construction; one mutex serializes lookups and the
// single appending writer.
class ResponseCache {
 public:
  // Creates `dir` when missing and loads every shard. Malformed lines are
  // skipped. Throws IoError when the directory cannot be created.
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<nlohmann::json> lookup(const std::string& key) const;
  // Throws IoError when the shard cannot be appended.
  void store(const std::string& key, const nlohmann::json& response);

  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, nlohmann::json> entries_;
};

}  // namespace omnieval

#endif  // OMNIEVAL_CACHE_HPP_
