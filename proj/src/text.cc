// Copyright 2026 the tabver authors
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

#include "tabver/text.h"

#include <cstddef>

namespace tabver {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::uint64_t gram_hash(std::string_view gram, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : gram) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= gram.size();
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 && c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32)
                                                   : static_cast<char>(c));
  }
  return out;
}

std::vector<std::string> char_grams(std::string_view normalized,
                                    std::span<const int> orders) {
  // Byte offsets of code point starts, plus the end sentinel.
  std::vector<std::size_t> starts;
  starts.reserve(normalized.size() + 1);
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(normalized[i]))) {
      starts.push_back(i);
    }
  }
  const std::size_t length = starts.size();
  starts.push_back(normalized.size());

  std::vector<std::string> grams;
  for (int order : orders) {
    if (order <= 0 || static_cast<std::size_t>(order) > length) continue;
    const std::size_t n = static_cast<std::size_t>(order);
    for (std::size_t i = 0; i + n <= length; ++i) {
      grams.emplace_back(normalized.substr(starts[i], starts[i + n] - starts[i]));
    }
  }
  return grams;
}

std::vector<std::string> split_words(std::string_view normalized) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && is_space(static_cast<unsigned char>(normalized[i]))) ++i;
    std::size_t j = i;
    while (j < normalized.size() && !is_space(static_cast<unsigned char>(normalized[j]))) ++j;
    if (j > i) words.emplace_back(normalized.substr(i, j - i));
    i = j;
  }
  return words;
}

std::vector<std::string> word_grams(std::string_view normalized,
                                    std::span<const int> orders) {
  const std::vector<std::string> words = split_words(normalized);
  std::vector<std::string> grams;
  for (int order : orders) {
    if (order <= 0 || static_cast<std::size_t>(order) > words.size()) continue;
    const std::size_t n = static_cast<std::size_t>(order);
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string g = words[i];
      for (std::size_t w = 1; w < n; ++w) {
        g.push_back(' ');
        g += words[i + w];
      }
      grams.push_back(std::move(g));
    }
  }
  return grams;
}

}  // namespace tabver
