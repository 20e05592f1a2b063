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

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jasskit/corpus_io.hpp"
#include "jasskit/special_tokens.hpp"

namespace jasskit {

// A learned merge of two adjacent units. Units are stored in emitted form:
// every non-final piece of a word carries the continuation marker, so
// ("a@@", "b") produces "ab" and ("a@@", "b@@") produces "ab@@".
struct MergeRule {
  std::string left;
  std::string right;

  std::string product() const;
  bool operator==(const MergeRule&) const = default;
};

/// Joint BPE model: ordered merges plus the vocabulary they induce.
///
/// Ids [0, specials().size()) are the special tokens; learned units follow,
/// alphabet first, then merge products in learned order. Immutable once
/// built, so one instance can be shared by any number of threads.
class SubwordModel {
 public:
  SubwordModel() = default;
  SubwordModel(SpecialTokens specials, std::vector<MergeRule> merges,
               std::vector<std::string> units, std::size_t vocab_size_target);

  const SpecialTokens& specials() const { return specials_; }
  const std::vector<MergeRule>& merges() const { return merges_; }
  // Every token in id order, specials included.
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t vocab_size_target() const { return vocab_size_target_; }

  // -1 when the token is not in the vocabulary.
  int find(std::string_view token) const;
  int unk_id() const;
  int id_or_unk(std::string_view token) const { int i = find(token); return i < 0 ? unk_id() : i; }

  // Segments one word into emitted-form subwords.
  std::vector<std::string> segment(std::string_view word) const;

  bool operator==(const SubwordModel& other) const {
    return merges_ == other.merges_ && tokens_ == other.tokens_ &&
           vocab_size_target_ == other.vocab_size_target_;
  }

 private:
  struct RankedMerge {
    std::size_t rank;
    std::string product;
  };

  SpecialTokens specials_;
  std::vector<MergeRule> merges_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::unordered_map<std::string, RankedMerge> ranks_;  // key: left + ' ' + right
  std::size_t vocab_size_target_ = 0;
};

namespace subword {

inline constexpr std::size_t kDefaultVocabSize = 60000;

struct LearnOptions {
  std::size_t vocab_size = kDefaultVocabSize;  // total, special tokens included
  std::size_t oversample_factor = 1;           // weight of each fine-tuning sentence
  std::size_t threads = 1;                     // counting workers; output is independent of this
  SpecialTokens specials;
};

// Learns merges from the weighted concatenation of all monolingual streams
// and the fine-tuning stream. Throws ConfigError when vocab_size cannot even
// hold the special tokens or oversample_factor is zero.
SubwordModel learn_bpe(std::span<const std::vector<AnnotatedSentence>> mono,
                       std::span<const AnnotatedSentence> finetune, const LearnOptions& opts);

// Segments every token and remaps bunsetsu spans onto subword indices.
AnnotatedSentence apply_bpe(const AnnotatedSentence& s, const SubwordModel& m);

// Joins continuation-marked subwords back into words. Throws Error when a
// special token is present.
std::vector<std::string> detokenize(std::span<const std::string> tokens, const SubwordModel& m);

std::vector<int> to_ids(std::span<const std::string> tokens, const SubwordModel& m);

// Merge file: header line then "left right" per merge.
void save_merges(const SubwordModel& m, std::ostream& out);
// Vocabulary file: "token<TAB>id" per line in id order.
void save_vocab(const SubwordModel& m, std::ostream& out);
SubwordModel load_model(std::istream& merges, std::istream& vocab);

void save_model(const SubwordModel& m, const std::string& merges_path, const std::string& vocab_path);
SubwordModel load_model(const std::string& merges_path, const std::string& vocab_path);

}  // namespace subword
}  // namespace jasskit
