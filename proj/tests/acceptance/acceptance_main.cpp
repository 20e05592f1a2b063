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
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jasskit/evalmetrics.hpp"
#include "jasskit/minimodel.hpp"
#include "jasskit/mixer.hpp"
#include "jasskit/objectives.hpp"
#include "jasskit/rng.hpp"
#include "jasskit/subword.hpp"
#include "support/fuzz.hpp"
#include "support/oracles.hpp"

using namespace jasskit;
using jasskit::testing::FuzzOptions;
using jasskit::testing::ToyGrammar;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::string kMask(kMaskToken);

// Position-wise merge of a masked pair; empty on a complementarity violation.
std::vector<std::string> merge_pair(const TrainingPair& p) {
  if (p.enc_input.size() != p.dec_target.size()) return {};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < p.enc_input.size(); ++i) {
    const bool em = p.enc_input[i] == kMask;
    const bool dm = p.dec_target[i] == kMask;
    if (em == dm) return {};
    out.push_back(em ? p.dec_target[i] : p.enc_input[i]);
  }
  return out;
}

// 1. Masked pairs are complementary.
Outcome mask_complementarity() {
  const auto t0 = Clock::now();
  std::size_t violations = 0, pairs = 0;
  Rng rng(101);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto s = testing::random_annotated(rng, {.max_tokens = 30});
    const double ratio = 0.05 + 0.95 * rng.uniform();
    const std::size_t spans = 1 + rng.below(3);
    const std::uint64_t seed = rng.next();
    const double len = static_cast<double>(s.tokens.size());
    const auto want = static_cast<std::size_t>(std::clamp(std::floor(ratio * len + 0.5), 1.0, len));
    const auto mass = objectives::make_masked_pair(
        s, objectives::sample_mass_mask(s.tokens.size(), ratio, seed, spans), Task::kMass);
    const auto bmass = objectives::make_masked_pair(
        s, objectives::sample_bunsetsu_mask(s, 0.5, seed), Task::kBmass);
    for (const auto* p : {&mass, &bmass}) {
      ++pairs;
      const auto merged = merge_pair(*p);
      std::vector<std::size_t> masked;
      for (std::size_t k = 0; k < p->enc_input.size(); ++k) {
        if (p->enc_input[k] == kMask) masked.push_back(k);
      }
      if (merged != s.tokens || masked != p->loss_positions) ++violations;
    }
    if (mass.loss_positions.size() != want) ++violations;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 60.0,
          std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations, " +
              fmt("%.2fs", secs)};
}

// 2. BMASS spans align with bunsetsu boundaries and mask half the bunsetsus.
Outcome bmass_alignment() {
  std::size_t violations = 0;
  Rng rng(202);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto s = testing::random_annotated(rng, {.max_tokens = 40, .max_bunsetsu_len = 5});
    const auto mask = objectives::sample_bunsetsu_mask(s, 0.5, rng.next());
    std::set<std::size_t> bounds;
    for (const auto& b : s.bunsetsu) {
      bounds.insert(b.begin);
      bounds.insert(b.end);
    }
    std::size_t selected = 0;
    for (const auto& b : s.bunsetsu) {
      std::size_t in = 0;
      for (std::size_t k = b.begin; k < b.end; ++k) in += mask.contains(k) ? 1 : 0;
      if (in == b.size()) ++selected;
      else if (in != 0) ++violations;
    }
    for (const auto& sp : mask.spans) {
      if (!bounds.count(sp.begin) || !bounds.count(sp.end)) ++violations;
    }
    const std::size_t n = s.bunsetsu.size();
    const auto expected = static_cast<std::size_t>(std::max(1.0, std::floor(0.5 * n + 0.5)));
    if (selected != expected) ++violations;
  }
  return {violations == 0, "10000 sentences, " + std::to_string(violations) + " violations"};
}

// 3. Reordering preserves tokens, is an involution without the topic signal
// and matches the brute-force rule on the worked example.
Outcome reordering() {
  const ReorderConfig cfg;
  std::size_t multiset = 0, involution = 0, oracle = 0, checked_inv = 0;
  Rng rng(303);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto s = testing::random_annotated(rng, {.max_tokens = 20});
    const auto r = objectives::reorder_bunsetsu(s, cfg);
    auto a = s.tokens, b = r.tokens;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b || r.bunsetsu.size() != s.bunsetsu.size()) ++multiset;
    if (testing::brute_force_reorder(s, cfg) != r) ++oracle;
    if (!testing::has_topic_signal(s, cfg)) {
      ++checked_inv;
      if (objectives::reorder_bunsetsu(r, cfg) != s) ++involution;
    }
  }
  AnnotatedSentence ex;
  ex.lang = "ja";
  ex.tokens = {"B", "は", "B2", "B3", "B4", "。"};
  ex.bunsetsu = {{0, 2}, {2, 3}, {3, 4}, {4, 6}};
  const auto got = objectives::reorder_bunsetsu(ex, cfg);
  const std::vector<std::string> want = {"B", "は", "B4", "B3", "B2", "。"};
  const bool example_ok = got == testing::brute_force_reorder(ex, cfg) && got.tokens == want;
  return {multiset == 0 && involution == 0 && oracle == 0 && example_ok && checked_inv > 1000,
          "multiset " + std::to_string(multiset) + ", involution " + std::to_string(involution) +
              "/" + std::to_string(checked_inv) + ", oracle mismatches " + std::to_string(oracle) +
              ", worked example " + (example_ok ? "ok" : "mismatch")};
}

std::string model_text(const SubwordModel& m) {
  std::ostringstream a;
  subword::save_merges(m, a);
  subword::save_vocab(m, a);
  return a.str();
}

// 4. detokenize(apply_bpe(s)) = s and deterministic learning.
Outcome bpe_round_trip() {
  Rng rng(404);
  std::vector<std::vector<AnnotatedSentence>> mono(2);
  for (int i = 0; i < 3000; ++i) mono[0].push_back(testing::random_plain(rng, "en"));
  for (int i = 0; i < 3000; ++i) mono[1].push_back(testing::random_annotated(rng, {}, "ja"));
  std::vector<AnnotatedSentence> fine;
  for (int i = 0; i < 500; ++i) fine.push_back(testing::random_plain(rng, "ru"));
  subword::LearnOptions opt;
  opt.vocab_size = 400;
  opt.oversample_factor = 3;
  const auto model = subword::learn_bpe(mono, fine, opt);

  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    auto s = i % 2 ? testing::random_annotated(rng, {}, "ja") : testing::random_plain(rng, "en");
    if (i % 7 == 0) s.tokens.push_back("Ωmega");  // characters never seen in training
    const auto seg = subword::apply_bpe(s, model);
    if (subword::detokenize(seg.tokens, model) != s.tokens) ++failures;
    if (seg.bunsetsu.size() != s.bunsetsu.size()) ++failures;
  }
  const std::string ref = model_text(model);
  bool same = true;
  for (int run = 0; run < 2; ++run) same = same && model_text(subword::learn_bpe(mono, fine, opt)) == ref;
  opt.threads = 8;
  const bool parallel_same = model_text(subword::learn_bpe(mono, fine, opt)) == ref;
  return {failures == 0 && same && parallel_same && !model.merges().empty(),
          std::to_string(model.merges().size()) + " merges, " + std::to_string(failures) +
              " round-trip failures, 3 runs " + (same ? "identical" : "differ") + ", 1 vs 8 workers " +
              (parallel_same ? "identical" : "differ")};
}

// 5. Equal-weight mixing of three components.
Outcome mixing() {
  const SpecialTokens specials;
  const ReorderConfig cfg;
  Rng rng(505);
  std::vector<std::vector<TaggedPair>> streams(3);
  const std::size_t per = 10000;
  for (std::size_t i = 0; i < per; ++i) {
    const auto en = testing::random_plain(rng, "en");
    streams[0].push_back(mixer::tag_pair(
        objectives::make_masked_pair(en, objectives::sample_mass_mask(en.tokens.size(), 0.5, i),
                                     Task::kMass),
        specials));
    const auto ja = testing::random_annotated(rng);
    streams[1].push_back(mixer::tag_pair(
        objectives::make_masked_pair(ja, objectives::sample_bunsetsu_mask(ja, 0.5, i), Task::kBmass),
        specials));
    streams[2].push_back(
        mixer::tag_pair(objectives::make_brss_pair(ja, cfg, BrssDirection::kForward), specials));
  }
  MixSchedule sched;
  sched.components = {{Task::kMass, "en", 1}, {Task::kBmass, "ja", 1}, {Task::kBrss, "ja", 1}};
  sched.shard_size = 1000;
  sched.global_seed = 5;
  const auto mix = mixer::build_shards(streams, sched);
  const auto stats = mixer::sample_stats(mix.shards);
  std::size_t full = 0, missing = 0;
  std::map<std::string, std::size_t> totals;
  std::size_t records = 0;
  for (std::size_t k = 0; k < mix.shards.size(); ++k) {
    std::set<std::string> tasks;
    for (const auto& [key, n] : stats[k]) {
      tasks.insert(key.first);
      totals[key.first] += n;
      records += n;
    }
    if (mix.shards[k].records.size() == 1000) {
      ++full;
      if (tasks.size() != 3) ++missing;
    }
  }
  double worst = 0.0;
  for (const auto& [task, n] : totals) {
    worst = std::max(worst, std::abs(static_cast<double>(n) / records - 1.0 / 3.0));
  }
  return {missing == 0 && full >= 25 && totals.size() == 3 && worst <= 0.02,
          std::to_string(3 * per) + " input pairs, " + std::to_string(records) + " mixed, " +
              std::to_string(full) + " full shards, " + std::to_string(missing) +
              " missing a task, max deviation " + fmt("%.4f", worst)};
}

// 6. Finite-difference gradient check on a small model.
Outcome gradient_check() {
  const auto t0 = Clock::now();
  std::vector<std::string> toks = SpecialTokens().list();
  for (const char* w : {"a", "b", "c", "d"}) toks.emplace_back(w);
  const Vocab vocab(toks);
  ModelDims dims{.embed = 4, .hidden = 5, .attn = 3, .enc_window = 1, .dec_window = 2, .max_len = 7};
  TinyModel m(dims, vocab, 6);
  const std::size_t P = m.param_count();

  Example ex;
  ex.enc = {5, 8, 11, 12, 13, 14};
  ex.target = {4, 12, 13, 4, 14, 11};
  ex.dec_in = {2, 4, 12, 13, 4, 14};
  ex.loss = {1, 2};

  std::vector<double> grad(P, 0.0);
  minimodel::masked_nll_grad(m, ex, grad);
  double worst = 0.0;
  const double h = 1e-5;
  auto theta = m.params();
  for (std::size_t i = 0; i < P; ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = minimodel::masked_nll(m, ex);
    theta[i] = keep - h;
    const double down = minimodel::masked_nll(m, ex);
    theta[i] = keep;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
  }

  // Decoder positions after the last loss position feed only unsupervised
  // outputs, and target labels outside the loss set never enter the loss.
  std::size_t leaks = 0;
  const auto off = m.block_offset(ParamBlock::kDecoderPosition);
  for (std::size_t pos = 3; pos < dims.max_len; ++pos) {
    for (std::size_t e = 0; e < dims.embed; ++e) leaks += grad[off + pos * dims.embed + e] != 0.0;
  }
  Example relabeled = ex;
  relabeled.target = {9, 12, 13, 10, 5, 6};
  std::vector<double> grad2(P, 0.0);
  minimodel::masked_nll_grad(m, relabeled, grad2);
  leaks += grad2 != grad;

  const double secs = seconds_since(t0);
  return {P <= 1000 && worst < 1e-4 && leaks == 0 && secs < 60.0,
          std::to_string(P) + " parameters, max relative error " + fmt("%.2e", worst) + ", " +
              std::to_string(leaks) + " non-zero gradients through unsupervised positions, " +
              fmt("%.2fs", secs)};
}

std::vector<AnnotatedSentence> toy_corpus(std::uint64_t seed, std::size_t n) {
  ToyGrammar g(seed);
  std::vector<AnnotatedSentence> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(g.japanese());
  return out;
}

std::vector<TaggedPair> pairs_for(const std::vector<AnnotatedSentence>& corpus, Task task,
                                  std::uint64_t seed) {
  const SpecialTokens specials;
  std::vector<TaggedPair> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    const auto sseed = objectives::sentence_seed(seed, i, static_cast<std::uint64_t>(task));
    TrainingPair p;
    switch (task) {
      case Task::kMass:
        p = objectives::make_masked_pair(s, objectives::sample_mass_mask(s.tokens.size(), 0.5, sseed),
                                         Task::kMass);
        break;
      case Task::kBmass:
        p = objectives::make_masked_pair(s, objectives::sample_bunsetsu_mask(s, 0.5, sseed),
                                         Task::kBmass);
        break;
      case Task::kBrss:
        p = objectives::make_brss_pair(s, ReorderConfig{}, BrssDirection::kForward);
        break;
    }
    out.push_back(mixer::tag_pair(p, specials));
  }
  return out;
}

std::vector<Example> examples(const std::vector<TaggedPair>& pairs, const Vocab& v) {
  std::vector<Example> out;
  for (const auto& p : pairs) out.push_back(minimodel::make_example(p, v));
  return out;
}

const ModelDims kToyDims{.embed = 16, .hidden = 32, .attn = 16, .enc_window = 2, .dec_window = 2,
                         .max_len = 16};

// 7. Desk-scale pre-training.
Outcome desk_training() {
  const auto t0 = Clock::now();
  const SpecialTokens specials;
  const auto corpus = toy_corpus(7, 500);
  const auto held_out = toy_corpus(77, 100);
  const auto brss = pairs_for(corpus, Task::kBrss, 7);
  const auto mass = pairs_for(corpus, Task::kMass, 7);
  auto all = brss;
  all.insert(all.end(), mass.begin(), mass.end());
  const Vocab vocab = build_vocab(specials, all);
  std::set<std::string> corpus_vocab;
  for (const auto& s : corpus) corpus_vocab.insert(s.tokens.begin(), s.tokens.end());

  TrainConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.max_steps = 5000;
  cfg.batch_size = 16;
  cfg.checkpoint_every = 250;
  cfg.patience = 20;
  cfg.seed = 7;
  const auto brss_dev = examples(pairs_for(held_out, Task::kBrss, 77), vocab);
  const auto mass_dev = examples(pairs_for(held_out, Task::kMass, 77), vocab);
  const auto brss_run = minimodel::train(TinyModel(kToyDims, vocab, 70), examples(brss, vocab), cfg,
                                         brss_dev);
  const auto mass_run = minimodel::train(TinyModel(kToyDims, vocab, 70), examples(mass, vocab), cfg,
                                         mass_dev);
  const double brss_acc = minimodel::unigram_accuracy(brss_run.model, brss_dev);
  const double mass_acc = minimodel::unigram_accuracy(mass_run.model, mass_dev);

  bool monotone = mass_run.log.size() > 2;
  for (std::size_t i = 1; i < mass_run.log.size(); ++i) {
    monotone = monotone && mass_run.log[i].train_loss < mass_run.log[i - 1].train_loss;
  }
  const double secs = seconds_since(t0);
  const bool ordering = brss_acc >= mass_acc;
  std::printf("INFO [7] BRSS accuracy >= MASS accuracy at %zu steps: %s (%.4f vs %.4f)\n",
              cfg.max_steps, ordering ? "yes" : "no", brss_acc, mass_acc);
  return {corpus_vocab.size() <= 50 && brss_acc >= 0.90 && brss_run.best_step <= 5000 &&
              monotone && secs < 600.0,
          std::to_string(corpus_vocab.size()) + " corpus tokens, BRSS held-out accuracy " +
              fmt("%.4f", brss_acc) + " at step " + std::to_string(brss_run.best_step) +
              ", MASS checkpoint losses " + (monotone ? "strictly decreasing" : "not monotone") +
              " over " + std::to_string(mass_run.log.size()) + " checkpoints, " + fmt("%.1fs", secs)};
}

std::vector<ParallelPair> translation_pairs(const std::vector<AnnotatedSentence>& ja) {
  std::vector<ParallelPair> out;
  for (const auto& s : ja) {
    out.push_back({s, ToyGrammar::english(objectives::reorder_bunsetsu(s, ReorderConfig{}))});
  }
  return out;
}

// 8. Pre-training speeds up fine-tuning.
Outcome finetune_direction() {
  const SpecialTokens specials;
  const auto train_ja = toy_corpus(800, 200);
  const auto dev_ja = toy_corpus(801, 50);
  const auto train_pairs = translation_pairs(train_ja);
  const auto dev_pairs = translation_pairs(dev_ja);
  constexpr double kTargetLoss = 1.2;
  constexpr std::size_t kMaxSteps = 3000;

  std::string detail;
  std::size_t wins = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    // JASS on Japanese plus MASS on English, monolingual only.
    const auto mono_ja = toy_corpus(900 + seed, 500);
    std::vector<AnnotatedSentence> mono_en;
    for (const auto& p : translation_pairs(toy_corpus(950 + seed, 500))) mono_en.push_back(p.tgt);
    std::vector<std::vector<TaggedPair>> streams = {pairs_for(mono_ja, Task::kBmass, seed),
                                                    pairs_for(mono_ja, Task::kBrss, seed),
                                                    pairs_for(mono_en, Task::kMass, seed)};
    MixSchedule sched;
    sched.components = {{Task::kBmass, "ja", 1}, {Task::kBrss, "ja", 1}, {Task::kMass, "en", 1}};
    sched.global_seed = seed;
    sched.on_exhaust = ExhaustPolicy::kWrap;
    std::vector<TaggedPair> mixed;
    for (const auto& sh : mixer::build_shards(streams, sched).shards) {
      mixed.insert(mixed.end(), sh.records.begin(), sh.records.end());
    }
    std::vector<TaggedPair> vocab_source = mixed;
    for (const auto& p : train_pairs) {
      TaggedPair t;
      t.pair.enc_input = p.src.tokens;
      t.pair.dec_target = p.tgt.tokens;
      vocab_source.push_back(t);
    }
    const Vocab vocab = build_vocab(specials, vocab_source);

    TrainConfig pre;
    pre.learning_rate = 0.3;
    pre.max_steps = 3000;
    pre.checkpoint_every = 500;
    pre.patience = 20;
    pre.seed = seed;
    const auto mixed_ex = examples(mixed, vocab);
    const auto pretrained =
        minimodel::train(TinyModel(kToyDims, vocab, 10 + seed), mixed_ex, pre, {}).model;

    TrainConfig ft;
    ft.learning_rate = 0.3;
    ft.max_steps = kMaxSteps;
    ft.checkpoint_every = 25;
    ft.patience = kMaxSteps;
    ft.metric = DevMetric::kLoss;
    ft.target_dev_loss = kTargetLoss;
    ft.seed = 100 + seed;
    auto steps = [&](TinyModel init) {
      const auto r = minimodel::finetune(std::move(init), train_pairs, dev_pairs, vocab, specials, ft);
      return r.reached_target_at ? *r.reached_target_at : kMaxSteps + 1;
    };
    const std::size_t from_pre = steps(pretrained);
    const std::size_t from_scratch = steps(TinyModel(kToyDims, vocab, 10 + seed));
    wins += from_pre < from_scratch;
    detail += "seed " + std::to_string(seed) + ": " + std::to_string(from_pre) + " vs " +
              std::to_string(from_scratch) + "; ";
  }
  detail += "steps to dev loss " + fmt("%.2f", kTargetLoss) + " (pre-trained vs random)";
  return {wins == 3, detail};
}

// 9. BLEU against the brute-force oracle, and bootstrap against a second resampler.
Outcome bleu_oracle() {
  Rng rng(909);
  auto sentence = [&](std::size_t max_len) {
    TokenSeq s;
    const std::size_t n = rng.below(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) s.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
    return s;
  };
  double worst = 0.0;
  std::size_t identical_bad = 0;
  for (int c = 0; c < 100; ++c) {
    EvalCorpus corpus;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      corpus.hypotheses.push_back(sentence(8));
      corpus.references.push_back(sentence(8));
    }
    corpus.references[0].push_back("z");  // keeps every reference set non-empty
    for (std::size_t max_n : {1u, 2u, 4u}) {
      worst = std::max(worst, std::abs(evalmetrics::bleu(corpus, max_n) -
                                       testing::oracle_bleu(corpus, max_n)));
    }
    EvalCorpus same{corpus.references, corpus.references};
    identical_bad += evalmetrics::bleu(same) != 100.0;
  }

  // Systems with a per-sentence quality gap.
  EvalCorpus a, b;
  for (int i = 0; i < 40; ++i) {
    TokenSeq ref;
    for (int k = 0; k < 8; ++k) ref.push_back("w" + std::to_string(rng.below(12)));
    TokenSeq ha = ref, hb = ref;
    for (auto& t : ha) {
      if (rng.uniform() < 0.35) t = "x";
    }
    for (auto& t : hb) {
      if (rng.uniform() < 0.30) t = "x";
    }
    a.hypotheses.push_back(ha);
    b.hypotheses.push_back(hb);
    a.references.push_back(ref);
    b.references.push_back(ref);
  }
  const auto sig = evalmetrics::bootstrap_significance(a, b, 10000, 99);
  const double second = testing::oracle_bootstrap_p(a, b, 10000, 4242);
  const double gap = std::abs(sig.p_value - second);
  return {worst <= 1e-9 && identical_bad == 0 && gap <= 0.02,
          "max |BLEU - oracle| " + fmt("%.2e", worst) + ", identical-corpus misses " +
              std::to_string(identical_bad) + ", p " + fmt("%.4f", sig.p_value) + " vs " +
              fmt("%.4f", second) + " (gap " + fmt("%.4f", gap) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mask complementarity", mask_complementarity},
      {"BMASS bunsetsu alignment", bmass_alignment},
      {"bunsetsu reordering", reordering},
      {"BPE round trip and determinism", bpe_round_trip},
      {"objective mixing", mixing},
      {"gradient check", gradient_check},
      {"desk-scale training", desk_training},
      {"fine-tuning direction", finetune_direction},
      {"BLEU oracle", bleu_oracle},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
