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

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jasskit/corpus_io.hpp"

namespace jasskit {

enum class Task { kMass, kBmass, kBrss };

std::string_view task_name(Task t);     // "MASS", "BMASS", "BRSS"
std::string_view task_token(Task t);    // "[MASS]", "[BMASS]", "[RSS]"
Task task_from_token(std::string_view token);  // throws ParseError

// Sorted, disjoint, non-empty spans of masked positions.
struct SpanMask {
  std::vector<Span> spans;

  std::size_t masked_count() const;
  bool contains(std::size_t pos) const;
  bool operator==(const SpanMask&) const = default;
};

// Throws Error if the mask is unsorted, overlapping, empty-spanned or
// reaches past len.
void check_mask(const SpanMask& mask, std::size_t len);

/// One encoder/decoder training example.
///
/// Masked tasks keep enc_input and dec_target the same length and complementary
/// with respect to [M]; BRSS pairs are bunsetsu permutations of each other and
/// supervise every target position.
struct TrainingPair {
  Task task = Task::kMass;
  std::string lang;
  std::vector<std::string> enc_input;
  std::vector<std::string> dec_target;
  std::vector<std::size_t> loss_positions;  // ascending, index dec_target

  bool operator==(const TrainingPair&) const = default;
};

struct ReorderConfig {
  std::set<std::string> punctuation{"。", "、", "，", "．", "！", "？", ",", ".", "!", "?"};
  std::string topic_particle = "は";
  bool topic_signal = true;
};

enum class BrssDirection {
  kForward,  // reordered -> original
  kReverse,  // original -> reordered
};

namespace objectives {

inline constexpr double kDefaultMaskRatio = 0.5;
inline constexpr double kDefaultBunsetsuFraction = 0.5;

// round-half-up(fraction * n), at least 1 and at most n.
std::size_t rounded_count(double fraction, std::size_t n);

// span_count consecutive spans covering rounded_count(mask_ratio, len)
// positions; starts are uniform over all valid non-adjacent placements.
// With span_count = 1 this is a single span with a uniform start.
SpanMask sample_mass_mask(std::size_t len, double mask_ratio, std::uint64_t seed,
                          std::size_t span_count = 1);

// Masks rounded_count(fraction, n_bunsetsu) distinct bunsetsus chosen
// uniformly without replacement; adjacent picks are merged into one span.
// Throws AnnotationRequiredError for unannotated sentences.
SpanMask sample_bunsetsu_mask(const AnnotatedSentence& s, double bunsetsu_fraction,
                              std::uint64_t seed);

TrainingPair make_masked_pair(const AnnotatedSentence& s, const SpanMask& mask, Task task);

// Chunk-wise bunsetsu reversal. Trailing punctuation of a bunsetsu is held
// back as an anchor and re-emitted at the end of its chunk; a chunk ends after
// any bunsetsu with such an anchor and after any bunsetsu whose last
// non-punctuation token is the topic particle. Bunsetsu count is preserved:
// anchors rejoin the chunk's final output bunsetsu unless the source bunsetsu
// was punctuation only.
AnnotatedSentence reorder_bunsetsu(const AnnotatedSentence& s, const ReorderConfig& cfg);

TrainingPair make_brss_pair(const AnnotatedSentence& s, const ReorderConfig& cfg,
                            BrssDirection direction);

// Seed for the sentence at corpus_index under one objective stream.
std::uint64_t sentence_seed(std::uint64_t global_seed, std::uint64_t corpus_index,
                            std::uint64_t stream = 0);

}  // namespace objectives
}  // namespace jasskit
