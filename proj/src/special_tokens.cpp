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
#include "jasskit/special_tokens.hpp"

#include <algorithm>
#include <cctype>

#include "jasskit/error.hpp"

namespace jasskit {

std::string language_token(std::string_view lang) {
  std::string out = "[";
  out += lang;
  out += "]";
  if (out.size() > 2) {
    out[1] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[1])));
  }
  return out;
}

SpecialTokens::SpecialTokens() : SpecialTokens({"ja", "en", "ru"}) {}

SpecialTokens::SpecialTokens(std::vector<std::string> languages)
    : languages_(std::move(languages)) {
  tokens_ = {std::string(kPadToken),  std::string(kUnkToken),
             std::string(kBosToken),  std::string(kEosToken),
             std::string(kMaskToken), std::string(kMassToken),
             std::string(kBmassToken), std::string(kRssToken)};
  for (const auto& lang : languages_) {
    if (lang.empty()) throw ConfigError("empty language code");
    if (std::count(languages_.begin(), languages_.end(), lang) > 1) {
      throw ConfigError("duplicate language code: " + lang);
    }
    lang_tokens_.push_back(language_token(lang));
    tokens_.push_back(lang_tokens_.back());
  }
}

bool SpecialTokens::knows_language(std::string_view lang) const {
  return std::find(languages_.begin(), languages_.end(), lang) != languages_.end();
}

const std::string& SpecialTokens::lang_token(std::string_view lang) const {
  auto it = std::find(languages_.begin(), languages_.end(), lang);
  if (it == languages_.end()) {
    throw ConfigError("unknown language code: " + std::string(lang));
  }
  return lang_tokens_[static_cast<std::size_t>(it - languages_.begin())];
}

bool SpecialTokens::is_special(std::string_view token) const {
  return std::find(tokens_.begin(), tokens_.end(), token) != tokens_.end();
}

bool is_reserved_token(std::string_view token) {
  static const std::string_view fixed[] = {kPadToken,  kUnkToken,  kBosToken,
                                           kEosToken,  kMaskToken, kMassToken,
                                           kBmassToken, kRssToken};
  for (auto f : fixed) {
    if (token == f) return true;
  }
  // Language tokens: "[" upper lower* "]".
  if (token.size() >= 3 && token.front() == '[' && token.back() == ']' &&
      std::isupper(static_cast<unsigned char>(token[1]))) {
    return std::all_of(token.begin() + 2, token.end() - 1, [](char c) {
      return std::islower(static_cast<unsigned char>(c)) != 0;
    });
  }
  return false;
}

}  // namespace jasskit
