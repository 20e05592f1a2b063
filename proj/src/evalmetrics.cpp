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
#include "jasskit/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <thread>
#include <unordered_map>

#include "jasskit/error.hpp"
#include "jasskit/rng.hpp"

namespace jasskit {

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  if (o.matches.size() != matches.size()) throw Error("BLEU statistics of different orders");
  for (std::size_t n = 0; n < matches.size(); ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

namespace evalmetrics {
namespace {

using NgramCounts = std::unordered_map<std::string, std::uint64_t>;

NgramCounts count_ngrams(const TokenSeq& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  std::string key;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += toks[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

void check_corpus(const EvalCorpus& c) {
  if (c.hypotheses.empty()) throw Error("evaluation corpus has no hypotheses");
  if (c.hypotheses.size() != c.references.size()) {
    throw Error("hypothesis count " + std::to_string(c.hypotheses.size()) +
                " differs from reference count " + std::to_string(c.references.size()));
  }
}

BleuStats sentence_stats(const TokenSeq& hyp, const TokenSeq& ref, std::size_t max_n) {
  if (max_n == 0) throw ConfigError("BLEU order must be positive");
  BleuStats s(max_n);
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (hyp.size() < n) break;
    const auto h = count_ngrams(hyp, n);
    const auto r = count_ngrams(ref, n);
    std::uint64_t matched = 0;
    for (const auto& [gram, count] : h) {
      auto it = r.find(gram);
      if (it != r.end()) matched += std::min(count, it->second);
    }
    s.matches[n - 1] = matched;
    s.totals[n - 1] = hyp.size() - n + 1;
  }
  return s;
}

double bleu_from_stats(const BleuStats& s, Smoothing smoothing) {
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < s.matches.size(); ++n) {
    if (s.totals[n] == 0) continue;
    double m = static_cast<double>(s.matches[n]);
    double t = static_cast<double>(s.totals[n]);
    if (smoothing == Smoothing::kAddOne && n > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_sum += std::log(m / t);
    ++orders;
  }
  if (orders == 0) return s.ref_len == 0 ? 100.0 : 0.0;
  const double precision = std::exp(log_sum / static_cast<double>(orders));
  const double bp = s.hyp_len >= s.ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(s.ref_len) /
                                             static_cast<double>(s.hyp_len));
  return 100.0 * bp * precision;
}

double bleu(const EvalCorpus& c, std::size_t max_n, Smoothing smoothing) {
  check_corpus(c);
  BleuStats total(max_n);
  for (std::size_t i = 0; i < c.hypotheses.size(); ++i) {
    total += sentence_stats(c.hypotheses[i], c.references[i], max_n);
  }
  return bleu_from_stats(total, smoothing);
}

SignificanceResult bootstrap_significance(const EvalCorpus& a, const EvalCorpus& b,
                                          std::size_t samples, std::uint64_t seed,
                                          std::size_t max_n, Smoothing smoothing,
                                          std::size_t threads) {
  check_corpus(a);
  check_corpus(b);
  if (a.references != b.references) {
    throw Error("bootstrap systems must share the same references");
  }
  if (samples == 0) throw ConfigError("bootstrap needs at least one sample");

  const std::size_t n = a.hypotheses.size();
  std::vector<BleuStats> sa, sb;
  sa.reserve(n);
  sb.reserve(n);
  BleuStats ta(max_n), tb(max_n);
  for (std::size_t i = 0; i < n; ++i) {
    sa.push_back(sentence_stats(a.hypotheses[i], a.references[i], max_n));
    sb.push_back(sentence_stats(b.hypotheses[i], b.references[i], max_n));
    ta += sa.back();
    tb += sb.back();
  }

  std::vector<char> b_not_better(samples, 0);
  auto run = [&](std::size_t from, std::size_t step) {
    for (std::size_t k = from; k < samples; k += step) {
      Rng rng(derive_seed(seed, k));
      BleuStats xa(max_n), xb(max_n);
      for (std::size_t j = 0; j < n; ++j) {
        const auto idx = static_cast<std::size_t>(rng.below(n));
        xa += sa[idx];
        xb += sb[idx];
      }
      b_not_better[k] = bleu_from_stats(xb, smoothing) <= bleu_from_stats(xa, smoothing);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, samples));
  if (threads == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run, t, threads);
    for (auto& th : pool) th.join();
  }
  const auto count = std::count(b_not_better.begin(), b_not_better.end(), 1);

  SignificanceResult r;
  r.bleu_a = bleu_from_stats(ta, smoothing);
  r.bleu_b = bleu_from_stats(tb, smoothing);
  r.p_value = static_cast<double>(count) / static_cast<double>(samples);
  return r;
}

}  // namespace evalmetrics
}  // namespace jasskit
