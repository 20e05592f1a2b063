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
#include <span>
#include <string>
#include <vector>

namespace jasskit {

using TokenSeq = std::vector<std::string>;

// Parallel hypothesis/reference lists; equal length, at least one entry.
struct EvalCorpus {
  std::vector<TokenSeq> hypotheses;
  std::vector<TokenSeq> references;
};

enum class Smoothing {
  kNone,
  kAddOne,  // +1 on matches and totals for n >= 2
};

// Sufficient statistics for corpus BLEU; additive over sentences.
struct BleuStats {
  std::vector<std::uint64_t> matches;  // clipped n-gram matches, index n-1
  std::vector<std::uint64_t> totals;   // hypothesis n-grams, index n-1
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;

  explicit BleuStats(std::size_t max_n = 4) : matches(max_n, 0), totals(max_n, 0) {}
  BleuStats& operator+=(const BleuStats& o);
};

struct SignificanceResult {
  double bleu_a = 0.0;
  double bleu_b = 0.0;
  double p_value = 1.0;  // share of resamples where b does not beat a
};

namespace evalmetrics {

// Throws Error when sizes differ or the corpus is empty.
void check_corpus(const EvalCorpus& c);

BleuStats sentence_stats(const TokenSeq& hyp, const TokenSeq& ref, std::size_t max_n = 4);

/// Corpus BLEU in [0, 100] from summed statistics.
///
/// Geometric mean of clipped precisions times the brevity penalty. Orders
/// with no hypothesis n-grams at all are left out of the mean, so a corpus
/// whose hypotheses equal its references always scores exactly 100.
double bleu_from_stats(const BleuStats& s, Smoothing smoothing = Smoothing::kNone);

double bleu(const EvalCorpus& c, std::size_t max_n = 4, Smoothing smoothing = Smoothing::kNone);

// Paired bootstrap: resamples sentence indices with replacement. Sample i
// draws from a generator seeded with (seed, i), so threads do not change the
// result. Throws Error unless a and b share their references.
SignificanceResult bootstrap_significance(const EvalCorpus& a, const EvalCorpus& b,
                                          std::size_t samples = 1000, std::uint64_t seed = 0,
                                          std::size_t max_n = 4,
                                          Smoothing smoothing = Smoothing::kNone,
                                          std::size_t threads = 1);

}  // namespace evalmetrics
}  // namespace jasskit
