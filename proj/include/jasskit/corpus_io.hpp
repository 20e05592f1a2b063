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

#include <compare>
#include <cstddef>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jasskit {

// Half-open token index range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  auto operator<=>(const Span&) const = default;
};

/// A tokenized sentence with optional bunsetsu segmentation.
///
/// When present, the bunsetsu spans tile [0, tokens.size()) in order. Tokens
/// carry no whitespace and never collide with the reserved special tokens.
struct AnnotatedSentence {
  std::string lang;
  std::vector<std::string> tokens;
  std::vector<Span> bunsetsu;

  bool has_bunsetsu() const { return !bunsetsu.empty(); }
  bool operator==(const AnnotatedSentence&) const = default;
};

struct ParallelPair {
  AnnotatedSentence src;
  AnnotatedSentence tgt;
};

namespace corpus {

// First violated invariant, or nullopt when the sentence is well formed.
std::optional<std::string> check_sentence(const AnnotatedSentence& s);

// Reads the JSON record without checking sentence invariants; throws
// ParseError only when the record shape itself is wrong.
AnnotatedSentence parse_annotated_record(std::string_view line, std::string_view default_lang,
                                         std::size_t line_no = 0);

// Throws ParseError(line_no, ...) on the first violated constraint.
// default_lang is used when the record has no "lang" key. Japanese records
// must carry bunsetsu spans.
AnnotatedSentence parse_annotated_line(std::string_view line, std::string_view default_lang,
                                       std::size_t line_no = 0);

// One JSON object, no trailing newline.
std::string serialize_annotated(const AnnotatedSentence& s);

// Splits on ASCII whitespace without checking sentence invariants.
AnnotatedSentence split_plain_line(std::string_view line, std::string_view lang);

// Whitespace-tokenized sentence without bunsetsu annotation.
AnnotatedSentence parse_plain_line(std::string_view line, std::string_view lang,
                                   std::size_t line_no = 0);

inline constexpr std::size_t kDefaultMaxLength = 175;

inline bool within_length(const AnnotatedSentence& s, std::size_t max_len) {
  return s.tokens.size() <= max_len;
}

// Keeps the sentences with at most max_len tokens, in order.
std::vector<AnnotatedSentence> filter_by_length(std::span<const AnnotatedSentence> corpus,
                                                std::size_t max_len = kDefaultMaxLength);

struct Violation {
  std::size_t index;  // 0-based record index
  std::string message;
};

struct ValidationReport {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t bunsetsus = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

ValidationReport validate_corpus(std::span<const AnnotatedSentence> corpus);

// Streaming readers; the callback receives each record in file order.
// Blank lines are skipped but still counted for line numbers.
void for_each_annotated(std::istream& in, std::string_view default_lang,
                        const std::function<void(AnnotatedSentence&&)>& fn);
void for_each_plain(std::istream& in, std::string_view lang,
                    const std::function<void(AnnotatedSentence&&)>& fn);

std::vector<AnnotatedSentence> read_annotated_file(const std::string& path,
                                                   std::string_view default_lang = "");
std::vector<AnnotatedSentence> read_plain_file(const std::string& path, std::string_view lang);

// Reads ".jsonl" files as annotated and everything else as plain text.
std::vector<AnnotatedSentence> read_corpus_file(const std::string& path, std::string_view lang);

// Two aligned plain files; throws ParseError when line counts differ.
std::vector<ParallelPair> read_parallel_files(const std::string& src_path,
                                              const std::string& tgt_path,
                                              std::string_view src_lang,
                                              std::string_view tgt_lang);

void write_annotated(std::ostream& out, std::span<const AnnotatedSentence> corpus);

}  // namespace corpus
}  // namespace jasskit
