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
#include "jasskit/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jasskit/error.hpp"
#include "jasskit/rng.hpp"
#include "jasskit/special_tokens.hpp"

namespace jasskit {

std::string_view task_name(Task t) {
  switch (t) {
    case Task::kMass: return "MASS";
    case Task::kBmass: return "BMASS";
    case Task::kBrss: return "BRSS";
  }
  return "?";
}

std::string_view task_token(Task t) {
  switch (t) {
    case Task::kMass: return kMassToken;
    case Task::kBmass: return kBmassToken;
    case Task::kBrss: return kRssToken;
  }
  return "?";
}

Task task_from_token(std::string_view token) {
  if (token == kMassToken) return Task::kMass;
  if (token == kBmassToken) return Task::kBmass;
  if (token == kRssToken) return Task::kBrss;
  throw ParseError(0, "unknown task token " + std::string(token));
}

std::size_t SpanMask::masked_count() const {
  std::size_t n = 0;
  for (const auto& s : spans) n += s.size();
  return n;
}

bool SpanMask::contains(std::size_t pos) const {
  auto it = std::upper_bound(spans.begin(), spans.end(), pos,
                             [](std::size_t p, const Span& s) { return p < s.end; });
  return it != spans.end() && it->begin <= pos;
}

void check_mask(const SpanMask& mask, std::size_t len) {
  std::size_t floor = 0;
  for (const auto& s : mask.spans) {
    if (s.begin >= s.end) throw Error("mask span is empty");
    if (s.begin < floor) throw Error("mask spans overlap or are unsorted");
    if (s.end > len) throw Error("mask span exceeds sentence length");
    floor = s.end;
  }
}

namespace objectives {
namespace {

void check_fraction(double f, const char* what) {
  if (!(f > 0.0 && f <= 1.0)) throw ConfigError(std::string(what) + " must lie in (0, 1]");
}

// k distinct values from [0, n), ascending.
std::vector<std::size_t> choose_sorted(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

void require_bunsetsu(const AnnotatedSentence& s, std::string_view what) {
  if (!s.has_bunsetsu()) {
    throw AnnotationRequiredError(std::string(what) + " requires bunsetsu annotation (lang " +
                                  s.lang + ", " + std::to_string(s.tokens.size()) + " tokens)");
  }
}

}  // namespace

std::size_t rounded_count(double fraction, std::size_t n) {
  auto c = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
  return std::clamp<std::size_t>(c, 1, std::max<std::size_t>(n, 1));
}

SpanMask sample_mass_mask(std::size_t len, double mask_ratio, std::uint64_t seed,
                          std::size_t span_count) {
  if (len == 0) throw Error("cannot mask an empty sentence");
  check_fraction(mask_ratio, "mask ratio");
  if (span_count == 0) throw ConfigError("span count must be positive");

  const std::size_t masked = rounded_count(mask_ratio, len);
  const std::size_t free = len - masked;
  std::size_t k = std::min(span_count, masked);
  // Spans must be separated by at least one unmasked position.
  k = std::min(k, free + 1);

  // Each placement corresponds to choosing k of the free + 1 slots between
  // unmasked positions.
  Rng rng(seed);
  const auto slots = choose_sorted(free + 1, k, rng);
  SpanMask mask;
  std::size_t before = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t span_len = masked / k + (j < masked % k ? 1 : 0);
    const std::size_t start = slots[j] + before;
    mask.spans.push_back({start, start + span_len});
    before += span_len;
  }
  return mask;
}

SpanMask sample_bunsetsu_mask(const AnnotatedSentence& s, double bunsetsu_fraction,
                              std::uint64_t seed) {
  require_bunsetsu(s, "bunsetsu masking");
  check_fraction(bunsetsu_fraction, "bunsetsu fraction");
  const std::size_t n = s.bunsetsu.size();
  Rng rng(seed);
  const auto picked = choose_sorted(n, rounded_count(bunsetsu_fraction, n), rng);
  SpanMask mask;
  for (auto b : picked) {
    const Span& sp = s.bunsetsu[b];
    if (!mask.spans.empty() && mask.spans.back().end == sp.begin) {
      mask.spans.back().end = sp.end;
    } else {
      mask.spans.push_back(sp);
    }
  }
  return mask;
}

TrainingPair make_masked_pair(const AnnotatedSentence& s, const SpanMask& mask, Task task) {
  if (task == Task::kBrss) throw Error("BRSS pairs are not built from masks");
  check_mask(mask, s.tokens.size());
  TrainingPair p;
  p.task = task;
  p.lang = s.lang;
  p.enc_input = s.tokens;
  p.dec_target.assign(s.tokens.size(), std::string(kMaskToken));
  for (const auto& sp : mask.spans) {
    for (std::size_t i = sp.begin; i < sp.end; ++i) {
      p.enc_input[i] = kMaskToken;
      p.dec_target[i] = s.tokens[i];
      p.loss_positions.push_back(i);
    }
  }
  return p;
}

AnnotatedSentence reorder_bunsetsu(const AnnotatedSentence& s, const ReorderConfig& cfg) {
  require_bunsetsu(s, "bunsetsu reordering");
  if (cfg.punctuation.empty()) throw ConfigError("punctuation set must not be empty");

  struct Piece {
    Span core;     // non-punctuation head of the bunsetsu
    Span anchors;  // trailing punctuation
  };
  std::vector<Piece> pieces;
  pieces.reserve(s.bunsetsu.size());
  for (const auto& b : s.bunsetsu) {
    std::size_t cut = b.end;
    while (cut > b.begin && cfg.punctuation.count(s.tokens[cut - 1])) --cut;
    pieces.push_back({{b.begin, cut}, {cut, b.end}});
  }

  AnnotatedSentence out;
  out.lang = s.lang;
  out.tokens.reserve(s.tokens.size());
  out.bunsetsu.reserve(s.bunsetsu.size());
  auto emit = [&](Span src, bool new_bunsetsu) {
    const std::size_t at = out.tokens.size();
    for (std::size_t i = src.begin; i < src.end; ++i) out.tokens.push_back(s.tokens[i]);
    if (new_bunsetsu) {
      out.bunsetsu.push_back({at, out.tokens.size()});
    } else {
      out.bunsetsu.back().end = out.tokens.size();
    }
  };

  std::size_t chunk_begin = 0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const Piece& p = pieces[k];
    const bool topic = cfg.topic_signal && p.core.size() > 0 &&
                       s.tokens[p.core.end - 1] == cfg.topic_particle;
    const bool closes = p.anchors.size() > 0 || topic || k + 1 == pieces.size();
    if (!closes) continue;
    for (std::size_t j = k + 1; j-- > chunk_begin;) {
      if (pieces[j].core.size() > 0) emit(pieces[j].core, true);
    }
    if (p.anchors.size() > 0) emit(p.anchors, p.core.size() == 0);
    chunk_begin = k + 1;
  }
  return out;
}

TrainingPair make_brss_pair(const AnnotatedSentence& s, const ReorderConfig& cfg,
                            BrssDirection direction) {
  auto reordered = reorder_bunsetsu(s, cfg);
  TrainingPair p;
  p.task = Task::kBrss;
  p.lang = s.lang;
  if (direction == BrssDirection::kForward) {
    p.enc_input = std::move(reordered.tokens);
    p.dec_target = s.tokens;
  } else {
    p.enc_input = s.tokens;
    p.dec_target = std::move(reordered.tokens);
  }
  p.loss_positions.resize(p.dec_target.size());
  std::iota(p.loss_positions.begin(), p.loss_positions.end(), std::size_t{0});
  return p;
}

std::uint64_t sentence_seed(std::uint64_t global_seed, std::uint64_t corpus_index,
                            std::uint64_t stream) {
  return derive_seed(global_seed, corpus_index, stream);
}

}  // namespace objectives
}  // namespace jasskit
