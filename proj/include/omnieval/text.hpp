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

#ifndef OMNIEVAL_TEXT_HPP_
#define OMNIEVAL_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace omnieval {

// NFKC, lowercase, strip surrounding punctuation, collapse whitespace and
// drop a leading English article (a/an/the) unless it is the only word.
// Idempotent.
std::string normalize_text(std::string_view s);

// Lowercases and splits on Unicode whitespace. Shared by every n-gram metric.
std::vector<std::string> tokenize(std::string_view s);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

// Byte offset of the code point with index `chars`; clamps to s.size().
std::size_t utf8_offset(std::string_view s, std::size_t chars);

std::string trim(std::string_view s);

}  // namespace omnieval

#endif  // OMNIEVAL_TEXT_HPP_
