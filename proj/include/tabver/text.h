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

//! Text normalization, n-gram enumeration and the stable gram hash shared by
//! the retriever and the reference encoder.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabver {

/// Published seed of gram_hash. Changing it invalidates every persisted
/// index and checkpoint.
inline constexpr std::uint64_t kGramHashSeed = 0x7461627665723031ULL;

/// Seeded 64-bit FNV-1a followed by a splitmix64 finalizer.
std::uint64_t gram_hash(std::string_view gram,
                        std::uint64_t seed = kGramHashSeed);

/// ASCII lowercase, whitespace runs collapsed to one space, trimmed.
/// Non-ASCII bytes pass through unchanged.
std::string normalize_text(std::string_view text);

/// All contiguous windows of `order` code points over already normalized
/// text, for each order in `orders`, with multiplicity.
std::vector<std::string> char_grams(std::string_view normalized,
                                    std::span<const int> orders);

std::vector<std::string> split_words(std::string_view normalized);

/// Contiguous word n-grams joined by a single space.
std::vector<std::string> word_grams(std::string_view normalized,
                                    std::span<const int> orders);

}  // namespace tabver
