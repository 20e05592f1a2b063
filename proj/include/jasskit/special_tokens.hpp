// Copyright 2026 The jasskit Authors
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
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace jasskit {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kMaskToken = "[M]";
inline constexpr std::string_view kMassToken = "[MASS]";
inline constexpr std::string_view kBmassToken = "[BMASS]";
inline constexpr std::string_view kRssToken = "[RSS]";

// Marks a non-final subword of a word, e.g. "ab@@ c" for the word "abc".
inline constexpr std::string_view kContinuationMarker = "@@";

inline constexpr std::string_view kJapanese = "ja";

// "ja" -> "[Ja]".
std::string language_token(std::string_view lang);

// The reserved vocabulary prefix. Order is fixed: pad, unk, bos, eos, mask,
// the three task tokens, then one token per configured language. Ids are the
// positions in list().
class SpecialTokens {
 public:
  SpecialTokens();  // languages ja, en, ru
  explicit SpecialTokens(std::vector<std::string> languages);

  const std::vector<std::string>& list() const { return tokens_; }
  const std::vector<std::string>& languages() const { return languages_; }
  std::size_t size() const { return tokens_.size(); }

  bool knows_language(std::string_view lang) const;
  // Throws ConfigError for an unconfigured language.
  const std::string& lang_token(std::string_view lang) const;

  bool is_special(std::string_view token) const;

 private:
  std::vector<std::string> languages_;
  std::vector<std::string> lang_tokens_;
  std::vector<std::string> tokens_;
};

// True for every string that may never appear as a corpus token: the fixed
// specials plus the "[Xx]" language token of any language code.
bool is_reserved_token(std::string_view token);

}  // namespace jasskit
