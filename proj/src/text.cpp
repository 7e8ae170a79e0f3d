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

#include "omnieval/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <array>
#include <stdexcept>

namespace omnieval {
namespace {

icu::UnicodeString nfkc(const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFKC unavailable");
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) return in;
  return out;
}

std::vector<icu::UnicodeString> split_whitespace(const icu::UnicodeString& s) {
  std::vector<icu::UnicodeString> words;
  icu::UnicodeString cur;
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      if (!cur.isEmpty()) words.push_back(cur);
      cur.remove();
    } else {
      cur.append(c);
    }
  }
  if (!cur.isEmpty()) words.push_back(cur);
  return words;
}

bool is_strippable(UChar32 c) { return u_ispunct(c) || u_isUWhiteSpace(c); }

icu::UnicodeString strip_surrounding(const icu::UnicodeString& s) {
  int32_t begin = 0;
  int32_t end = s.length();
  while (begin < end) {
    UChar32 c = s.char32At(begin);
    if (!is_strippable(c)) break;
    begin += U16_LENGTH(c);
  }
  while (end > begin) {
    UChar32 c = s.char32At(end - 1);
    if (!is_strippable(c)) break;
    end -= U16_LENGTH(c);
  }
  return icu::UnicodeString(s, begin, end - begin);
}

bool is_article(const icu::UnicodeString& w) {
  return w == icu::UnicodeString("a") || w == icu::UnicodeString("an") ||
         w == icu::UnicodeString("the");
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace

std::string normalize_text(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u = nfkc(nfkc(u).toLower());

  // Stripping can expose a new article and dropping an article can expose new
  // punctuation, so iterate to a fixed point.
  std::vector<icu::UnicodeString> words;
  for (;;) {
    u = strip_surrounding(u);
    words = split_whitespace(u);
    std::size_t skip = 0;
    while (words.size() - skip > 1 && is_article(words[skip])) ++skip;
    icu::UnicodeString joined;
    for (std::size_t i = skip; i < words.size(); ++i) {
      if (i > skip) joined.append(static_cast<UChar>(0x20));
      joined.append(words[i]);
    }
    if (joined == u) break;
    u = joined;
  }
  return to_utf8(u);
}

std::vector<std::string> tokenize(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower();
  std::vector<std::string> out;
  for (const auto& w : split_whitespace(u)) out.push_back(to_utf8(w));
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::size_t utf8_offset(std::string_view s, std::size_t chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (seen == chars) return i;
      ++seen;
    }
  }
  return s.size();
}

std::string trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(kSpace);
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace omnieval
