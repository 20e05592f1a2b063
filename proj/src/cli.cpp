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
#include "jasskit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "jasskit/corpus_io.hpp"
#include "jasskit/error.hpp"
#include "jasskit/evalmetrics.hpp"
#include "jasskit/minimodel.hpp"
#include "jasskit/mixer.hpp"
#include "jasskit/objectives.hpp"
#include "jasskit/rng.hpp"
#include "jasskit/subword.hpp"

namespace jasskit::cli {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads "key = value" lines and appends "--key value" for every key not
// already given on the command line. "key = true" becomes a bare flag.
void append_config(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, path + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto flag = "--" + key;
    if (key.empty() || key == "config" || given(flag)) continue;
    if (value == "true") {
      extra.push_back(flag);
    } else if (value != "false") {
      for (const auto& v : split_list(value, ' ')) {
        extra.push_back(flag);
        extra.push_back(v);
      }
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

std::vector<AnnotatedSentence> load_corpus(const std::vector<std::string>& paths,
                                           const std::string& lang, std::size_t max_len,
                                           std::size_t* dropped = nullptr) {
  std::vector<AnnotatedSentence> out;
  for (const auto& p : paths) {
    for (auto& s : corpus::read_corpus_file(p, lang)) {
      if (corpus::within_length(s, max_len)) {
        out.push_back(std::move(s));
      } else if (dropped) {
        ++*dropped;
      }
    }
  }
  return out;
}

std::optional<SubwordModel> maybe_bpe(const std::string& merges, const std::string& vocab) {
  if (merges.empty() && vocab.empty()) return std::nullopt;
  if (merges.empty() || vocab.empty()) throw ConfigError("--merges and --vocab must be given together");
  return subword::load_model(merges, vocab);
}

Vocab read_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, path + ": vocabulary line lacks a tab");
    if (std::stoul(line.substr(tab + 1)) != tokens.size()) {
      throw ParseError(line_no, path + ": vocabulary ids are not consecutive");
    }
    tokens.push_back(line.substr(0, tab));
  }
  return Vocab(std::move(tokens));
}

std::vector<std::string> expand_shards(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".tsv") found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  if (files.empty()) throw ConfigError("no shard files found");
  return files;
}

std::vector<TaggedPair> read_shards(const std::vector<std::string>& inputs) {
  std::vector<TaggedPair> out;
  for (const auto& f : expand_shards(inputs)) {
    auto part = mixer::read_shard_file(f);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<TokenSeq> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<TokenSeq> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    TokenSeq toks;
    std::string w;
    while (ss >> w) toks.push_back(w);
    out.push_back(std::move(toks));
  }
  return out;
}

Smoothing parse_smoothing(const std::string& s) {
  if (s == "none") return Smoothing::kNone;
  if (s == "add-one") return Smoothing::kAddOne;
  throw ConfigError("unknown smoothing " + s);
}

DevMetric parse_metric(const std::string& s) {
  if (s == "accuracy") return DevMetric::kAccuracy;
  if (s == "loss") return DevMetric::kLoss;
  if (s == "bleu") return DevMetric::kBleu;
  throw ConfigError("unknown dev metric " + s);
}

std::size_t longest(std::span<const Example> data) {
  std::size_t n = 0;
  for (const auto& ex : data) n = std::max({n, ex.enc.size(), ex.dec_in.size()});
  return n;
}

ordered_json log_json(const TrainResult& r, std::uint64_t seed, std::size_t params) {
  ordered_json j;
  j["seed"] = seed;
  j["params"] = params;
  j["steps"] = r.steps;
  j["best_step"] = r.best_step;
  j["early_stopped"] = r.early_stopped;
  if (!r.log.empty()) {
    j["final_train_loss"] = r.log.back().train_loss;
    j["final_dev_metric"] = r.log.back().dev_metric;
    double best = r.log.front().dev_metric;
    for (const auto& rec : r.log) {
      if (rec.step == r.best_step) best = rec.dev_metric;
    }
    j["best_dev_metric"] = best;
  }
  return j;
}

void write_log(const std::string& path, const TrainResult& r) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  minimodel::write_log_csv(r.log, out);
}

enum class Objective { kMass, kBmass, kBrssF, kBrssR, kJass, kMassJass };

Objective parse_objective(const std::string& s) {
  static const std::map<std::string, Objective> names = {
      {"mass", Objective::kMass},   {"bmass", Objective::kBmass},
      {"brss.f", Objective::kBrssF}, {"brss.r", Objective::kBrssR},
      {"jass", Objective::kJass},   {"mass+jass", Objective::kMassJass}};
  auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown objective " + s);
  return it->second;
}

// Objective streams a sentence contributes to. Joint objectives apply the
// Japanese-specific tasks to Japanese and MASS to every other language.
enum class Stream : std::uint64_t { kMass = 1, kBmass = 2, kBrssF = 3, kBrssR = 4 };

std::vector<Stream> streams_for(Objective o, const std::string& lang) {
  const bool ja = lang == kJapanese;
  switch (o) {
    case Objective::kMass: return {Stream::kMass};
    case Objective::kBmass: return {Stream::kBmass};
    case Objective::kBrssF: return {Stream::kBrssF};
    case Objective::kBrssR: return {Stream::kBrssR};
    case Objective::kJass:
      if (ja) return {Stream::kBmass, Stream::kBrssF};
      return {Stream::kMass};
    case Objective::kMassJass:
      if (ja) return {Stream::kBmass, Stream::kBrssF, Stream::kMass};
      return {Stream::kMass};
  }
  return {};
}

struct TrainFlags {
  double lr = 0.1;
  std::size_t steps = 5000;
  std::size_t batch = 16;
  std::size_t checkpoint_every = 250;
  std::size_t patience = 5;
  std::string metric;
  ModelDims dims;
  std::string out;
  std::string log;

  void add(CLI::App* sub, const std::string& default_metric) {
    metric = default_metric;
    dims.max_len = 0;
    sub->add_option("--lr", lr, "learning rate")->capture_default_str();
    sub->add_option("--steps", steps, "maximum training steps")->capture_default_str();
    sub->add_option("--batch", batch, "examples per step")->capture_default_str();
    sub->add_option("--checkpoint-every", checkpoint_every, "steps between dev evaluations")
        ->capture_default_str();
    sub->add_option("--patience", patience, "checkpoints without improvement before stopping")
        ->capture_default_str();
    sub->add_option("--metric", metric, "dev metric: accuracy, loss or bleu")->capture_default_str();
    sub->add_option("--embed", dims.embed, "embedding size")->capture_default_str();
    sub->add_option("--hidden", dims.hidden, "hidden size")->capture_default_str();
    sub->add_option("--attn", dims.attn, "attention size")->capture_default_str();
    sub->add_option("--enc-window", dims.enc_window, "encoder half window")->capture_default_str();
    sub->add_option("--dec-window", dims.dec_window, "decoder window")->capture_default_str();
    sub->add_option("--max-len", dims.max_len, "position limit, 0 = longest example")
        ->capture_default_str();
    sub->add_option("--out", out, "checkpoint to write")->required();
    sub->add_option("--log", log, "checkpoint log CSV to write");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.learning_rate = lr;
    c.max_steps = steps;
    c.batch_size = batch;
    c.checkpoint_every = checkpoint_every;
    c.patience = patience;
    c.metric = parse_metric(metric);
    c.seed = seed;
    return c;
  }
};

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pre-training corpus toolkit: MASS, BMASS, BRSS and JASS data, a toy model, BLEU",
               "jasskit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string config_path;
  std::string languages = "ja,en,ru";
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads")->capture_default_str();
  app.add_option("--config", config_path, "flat key = value file mirroring the flags");
  app.add_option("--languages", languages, "configured language codes")->capture_default_str();

  // validate
  auto* validate = app.add_subcommand("validate", "check annotated or plain corpus files");
  std::vector<std::string> v_inputs;
  std::string v_lang;
  validate->add_option("--input", v_inputs, "corpus files (.jsonl annotated, else plain)")->check(CLI::ExistingPath)->required();
  validate->add_option("--lang", v_lang, "language for plain files and records without one");

  // learn-bpe
  auto* learn = app.add_subcommand("learn-bpe", "learn a joint BPE model");
  std::vector<std::string> l_mono, l_finetune;
  std::string l_lang, l_merges, l_vocab;
  std::size_t l_oversample = 1, l_vocab_size = subword::kDefaultVocabSize,
              l_max_len = corpus::kDefaultMaxLength;
  learn->add_option("--mono", l_mono, "monolingual corpus files")->check(CLI::ExistingPath);
  learn->add_option("--finetune", l_finetune, "fine-tuning corpus files (oversampled)")->check(CLI::ExistingPath);
  learn->add_option("--lang", l_lang, "language for plain files");
  learn->add_option("--oversample", l_oversample, "weight of each fine-tuning sentence")
      ->capture_default_str();
  learn->add_option("--vocab-size", l_vocab_size, "vocabulary size including special tokens")
      ->capture_default_str();
  learn->add_option("--max-len", l_max_len, "drop sentences with more word tokens")
      ->capture_default_str();
  learn->add_option("--merges-out", l_merges, "merge file to write")->required();
  learn->add_option("--vocab-out", l_vocab, "vocabulary file to write")->required();

  // apply-bpe
  auto* apply = app.add_subcommand("apply-bpe", "segment an annotated corpus into subwords");
  std::string a_merges, a_vocab, a_input, a_output, a_lang;
  apply->add_option("--merges", a_merges, "merge file")->check(CLI::ExistingPath)->required();
  apply->add_option("--vocab", a_vocab, "vocabulary file")->check(CLI::ExistingPath)->required();
  apply->add_option("--input", a_input, "input corpus")->check(CLI::ExistingPath)->required();
  apply->add_option("--lang", a_lang, "language for plain files");
  apply->add_option("--output", a_output, "output .jsonl")->required();

  // gen-pairs
  auto* gen = app.add_subcommand("gen-pairs", "generate tagged training pairs and mix them into shards");
  std::vector<std::string> g_inputs;
  std::string g_lang, g_objective, g_out_dir, g_weights, g_exhaust = "stop", g_merges, g_vocab,
                      g_punct;
  std::size_t g_shard_size = 1000, g_spans = 1, g_max_len = corpus::kDefaultMaxLength;
  double g_mask_ratio = objectives::kDefaultMaskRatio,
         g_bunsetsu_fraction = objectives::kDefaultBunsetsuFraction;
  bool g_no_topic = false;
  gen->add_option("--input", g_inputs, "corpus files")->check(CLI::ExistingPath)->required();
  gen->add_option("--lang", g_lang, "language for plain files");
  gen->add_option("--objective", g_objective, "mass, bmass, brss.f, brss.r, jass or mass+jass")
      ->required();
  gen->add_option("--out-dir", g_out_dir, "directory for shard files")->required();
  gen->add_option("--shard-size", g_shard_size, "records per shard")->capture_default_str();
  gen->add_option("--weights", g_weights, "task:lang:w[,...]; default uniform");
  gen->add_option("--on-exhaust", g_exhaust, "stop or wrap")->capture_default_str();
  gen->add_option("--mask-ratio", g_mask_ratio, "MASS masked fraction")->capture_default_str();
  gen->add_option("--mask-spans", g_spans, "MASS spans per sentence")->capture_default_str();
  gen->add_option("--bunsetsu-fraction", g_bunsetsu_fraction, "BMASS masked bunsetsu fraction")
      ->capture_default_str();
  gen->add_option("--max-len", g_max_len, "drop sentences with more word tokens")
      ->capture_default_str();
  gen->add_option("--merges", g_merges, "BPE merge file; segment before pairing")->check(CLI::ExistingPath);
  gen->add_option("--vocab", g_vocab, "BPE vocabulary file")->check(CLI::ExistingPath);
  gen->add_option("--punctuation", g_punct, "comma-separated punctuation anchors");
  gen->add_flag("--no-topic-signal", g_no_topic, "do not split chunks after the topic particle");

  // stats
  auto* stats = app.add_subcommand("stats", "per-shard counts by task and language");
  std::vector<std::string> s_shards;
  stats->add_option("--shards", s_shards, "shard files or directories")->check(CLI::ExistingPath)->required();

  // train-toy
  auto* train_cmd = app.add_subcommand("train-toy", "pre-train the toy encoder-decoder on shards");
  std::vector<std::string> t_train, t_dev;
  std::string t_vocab;
  TrainFlags t_flags;
  train_cmd->add_option("--train", t_train, "training shard files or directories")->check(CLI::ExistingPath)->required();
  train_cmd->add_option("--dev", t_dev, "dev shard files; defaults to the training data")->check(CLI::ExistingPath);
  train_cmd->add_option("--vocab", t_vocab, "BPE vocabulary file; default built from shards")->check(CLI::ExistingPath);
  t_flags.add(train_cmd, "accuracy");

  // finetune
  auto* ft = app.add_subcommand("finetune", "fine-tune on a parallel corpus");
  std::string f_model, f_src, f_tgt, f_src_lang, f_tgt_lang, f_dev_src, f_dev_tgt, f_merges, f_vocab;
  TrainFlags f_flags;
  ft->add_option("--model", f_model, "pre-trained checkpoint; omit for random init")->check(CLI::ExistingPath);
  ft->add_option("--src", f_src, "source plain file")->check(CLI::ExistingPath)->required();
  ft->add_option("--tgt", f_tgt, "target plain file")->check(CLI::ExistingPath)->required();
  ft->add_option("--src-lang", f_src_lang, "source language")->required();
  ft->add_option("--tgt-lang", f_tgt_lang, "target language")->required();
  ft->add_option("--dev-src", f_dev_src, "dev source file")->check(CLI::ExistingPath);
  ft->add_option("--dev-tgt", f_dev_tgt, "dev target file")->check(CLI::ExistingPath);
  ft->add_option("--merges", f_merges, "BPE merge file to segment the corpus")->check(CLI::ExistingPath);
  ft->add_option("--vocab", f_vocab, "BPE vocabulary file")->check(CLI::ExistingPath);
  f_flags.add(ft, "loss");

  // accuracy
  auto* acc = app.add_subcommand("accuracy", "1-gram accuracy of a checkpoint on shards");
  std::string c_model;
  std::vector<std::string> c_shards;
  acc->add_option("--model", c_model, "checkpoint")->check(CLI::ExistingPath)->required();
  acc->add_option("--shard", c_shards, "shard files or directories")->check(CLI::ExistingPath)->required();

  // translate
  auto* tr = app.add_subcommand("translate", "greedy-decode a plain source file");
  std::string r_model, r_input, r_output, r_lang, r_merges, r_vocab;
  std::size_t r_max = 0;
  tr->add_option("--model", r_model, "checkpoint")->check(CLI::ExistingPath)->required();
  tr->add_option("--input", r_input, "source plain file")->check(CLI::ExistingPath)->required();
  tr->add_option("--src-lang", r_lang, "source language")->required();
  tr->add_option("--output", r_output, "hypothesis file to write")->required();
  tr->add_option("--merges", r_merges, "BPE merge file; output is detokenized")->check(CLI::ExistingPath);
  tr->add_option("--vocab", r_vocab, "BPE vocabulary file")->check(CLI::ExistingPath);
  tr->add_option("--max-output", r_max, "output token limit, 0 = 2 x source + 8");

  // bleu
  auto* bl = app.add_subcommand("bleu", "corpus BLEU of a hypothesis file");
  std::string b_hyp, b_ref, b_smooth = "none";
  std::size_t b_max_n = 4;
  bl->add_option("--hyp", b_hyp, "hypothesis file")->check(CLI::ExistingPath)->required();
  bl->add_option("--ref", b_ref, "reference file")->check(CLI::ExistingPath)->required();
  bl->add_option("--max-n", b_max_n, "largest n-gram order")->capture_default_str();
  bl->add_option("--smooth", b_smooth, "none or add-one")->capture_default_str();

  // significance
  auto* sig = app.add_subcommand("significance", "paired bootstrap test that system b beats a");
  std::string g2_ref, g2_a, g2_b, g2_smooth = "none";
  std::size_t g2_samples = 1000, g2_max_n = 4;
  sig->add_option("--ref", g2_ref, "reference file")->check(CLI::ExistingPath)->required();
  sig->add_option("--hyp-a", g2_a, "baseline hypotheses")->check(CLI::ExistingPath)->required();
  sig->add_option("--hyp-b", g2_b, "candidate hypotheses")->check(CLI::ExistingPath)->required();
  sig->add_option("--samples", g2_samples, "bootstrap samples")->capture_default_str();
  sig->add_option("--max-n", g2_max_n, "largest n-gram order")->capture_default_str();
  sig->add_option("--smooth", g2_smooth, "none or add-one")->capture_default_str();

  std::vector<std::string> args = raw_args;
  try {
    append_config(args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    const SpecialTokens specials(split_list(languages));
    ordered_json j;

    if (validate->parsed()) {
      corpus::ValidationReport total;
      ordered_json violations = ordered_json::array();
      for (const auto& path : v_inputs) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open " + path);
        const bool annotated = path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl";
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          AnnotatedSentence s;
          std::optional<std::string> problem;
          try {
            s = annotated ? corpus::parse_annotated_record(line, v_lang, line_no)
                          : corpus::split_plain_line(line, v_lang);
          } catch (const ParseError& e) {
            problem = e.what();
          }
          if (!problem) {
            const auto r = corpus::validate_corpus(std::span(&s, 1));
            total.tokens += r.tokens;
            total.bunsetsus += r.bunsetsus;
            if (!r.ok()) problem = r.violations.front().message;
            else if (annotated && s.lang == kJapanese && !s.has_bunsetsu())
              problem = "Japanese record without bunsetsu spans";
          }
          ++total.sentences;
          if (problem) violations.push_back({{"file", path}, {"line", line_no}, {"message", *problem}});
        }
      }
      j["sentences"] = total.sentences;
      j["tokens"] = total.tokens;
      j["bunsetsus"] = total.bunsetsus;
      j["ok"] = violations.empty();
      j["violations"] = violations;
      out << j.dump() << '\n';
      return violations.empty() ? 0 : 1;
    }

    if (learn->parsed()) {
      if (l_mono.empty() && l_finetune.empty()) throw ConfigError("learn-bpe needs --mono or --finetune");
      std::size_t dropped = 0;
      std::vector<std::vector<AnnotatedSentence>> mono;
      std::size_t mono_count = 0;
      for (const auto& p : l_mono) {
        mono.push_back(load_corpus({p}, l_lang, l_max_len, &dropped));
        mono_count += mono.back().size();
      }
      const auto fine = load_corpus(l_finetune, l_lang, l_max_len, &dropped);
      subword::LearnOptions opts;
      opts.vocab_size = l_vocab_size;
      opts.oversample_factor = l_oversample;
      opts.threads = threads;
      opts.specials = specials;
      const auto model = subword::learn_bpe(mono, fine, opts);
      subword::save_model(model, l_merges, l_vocab);
      err << "learn-bpe: " << model.merges().size() << " merges, vocabulary " << model.size() << '\n';
      j["merges"] = model.merges().size();
      j["vocab"] = model.size();
      j["mono_sentences"] = mono_count;
      j["finetune_sentences"] = fine.size();
      j["dropped_by_length"] = dropped;
      j["merges_file"] = l_merges;
      j["vocab_file"] = l_vocab;
    } else if (apply->parsed()) {
      const auto model = subword::load_model(a_merges, a_vocab);
      const auto corpus_in = corpus::read_corpus_file(a_input, a_lang);
      std::ofstream o(a_output);
      if (!o) throw Error("cannot write " + a_output);
      std::size_t words = 0, pieces = 0;
      for (const auto& s : corpus_in) {
        auto seg = subword::apply_bpe(s, model);
        words += s.tokens.size();
        pieces += seg.tokens.size();
        o << corpus::serialize_annotated(seg) << '\n';
      }
      j["sentences"] = corpus_in.size();
      j["words"] = words;
      j["subwords"] = pieces;
    } else if (gen->parsed()) {
      const auto objective = parse_objective(g_objective);
      ExhaustPolicy policy;
      if (g_exhaust == "stop") policy = ExhaustPolicy::kStop;
      else if (g_exhaust == "wrap") policy = ExhaustPolicy::kWrap;
      else throw ConfigError("--on-exhaust must be stop or wrap");
      ReorderConfig rcfg;
      rcfg.topic_signal = !g_no_topic;
      if (!g_punct.empty()) {
        auto p = split_list(g_punct);
        rcfg.punctuation = std::set<std::string>(p.begin(), p.end());
      }
      const auto bpe = maybe_bpe(g_merges, g_vocab);
      std::size_t dropped = 0;
      auto sentences = load_corpus(g_inputs, g_lang, g_max_len, &dropped);

      std::map<std::pair<Task, std::string>, std::vector<TaggedPair>> by_component;
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        const AnnotatedSentence s = bpe ? subword::apply_bpe(sentences[i], *bpe) : sentences[i];
        for (auto stream : streams_for(objective, s.lang)) {
          const auto sseed = objectives::sentence_seed(seed, i, static_cast<std::uint64_t>(stream));
          TrainingPair p;
          switch (stream) {
            case Stream::kMass:
              p = objectives::make_masked_pair(
                  s, objectives::sample_mass_mask(s.tokens.size(), g_mask_ratio, sseed, g_spans),
                  Task::kMass);
              break;
            case Stream::kBmass:
              p = objectives::make_masked_pair(
                  s, objectives::sample_bunsetsu_mask(s, g_bunsetsu_fraction, sseed), Task::kBmass);
              break;
            case Stream::kBrssF:
              p = objectives::make_brss_pair(s, rcfg, BrssDirection::kForward);
              break;
            case Stream::kBrssR:
              p = objectives::make_brss_pair(s, rcfg, BrssDirection::kReverse);
              break;
          }
          by_component[{p.task, p.lang}].push_back(mixer::tag_pair(p, specials));
        }
      }
      if (by_component.empty()) throw ConfigError("no sentences to generate pairs from");

      MixSchedule schedule;
      schedule.shard_size = g_shard_size;
      schedule.global_seed = seed;
      schedule.on_exhaust = policy;
      std::vector<std::vector<TaggedPair>> streams;
      if (g_weights.empty()) {
        for (auto& [key, pairs] : by_component) {
          schedule.components.push_back({key.first, key.second, 1.0});
          streams.push_back(std::move(pairs));
        }
      } else {
        schedule.components = mixer::parse_weights(g_weights);
        for (const auto& c : schedule.components) {
          auto it = by_component.find({c.task, c.lang});
          if (it == by_component.end()) {
            throw ConfigError("weights name " + std::string(task_name(c.task)) + ":" + c.lang +
                              " but the corpus produced no such pairs");
          }
          streams.push_back(it->second);
        }
        for (const auto& [key, pairs] : by_component) {
          const bool listed = std::any_of(
              schedule.components.begin(), schedule.components.end(),
              [&](const MixComponent& c) { return c.task == key.first && c.lang == key.second; });
          if (!listed) {
            throw ConfigError("no weight given for " + std::string(task_name(key.first)) + ":" +
                              key.second);
          }
        }
      }
      const auto mix = mixer::build_shards(streams, schedule, threads);
      if (mix.truncated) {
        err << "warning: a component ran out first; remaining pairs of the other components were "
               "not written (use --on-exhaust wrap to recycle)\n";
      }
      const auto paths = mixer::write_shards(g_out_dir, mix, seed, threads);
      std::size_t records = 0;
      for (const auto& sh : mix.shards) records += sh.records.size();
      j["objective"] = g_objective;
      j["seed"] = seed;
      j["sentences"] = sentences.size();
      j["dropped_by_length"] = dropped;
      j["records"] = records;
      j["truncated"] = mix.truncated;
      auto comps = ordered_json::array();
      for (std::size_t c = 0; c < schedule.components.size(); ++c) {
        const auto& mc = schedule.components[c];
        comps.push_back({{"task", task_name(mc.task)},
                         {"lang", mc.lang},
                         {"weight", mc.weight},
                         {"pairs", streams[c].size()},
                         {"written", mix.drawn[c]}});
      }
      j["components"] = comps;
      j["shards"] = paths;
    } else if (stats->parsed()) {
      auto arr = ordered_json::array();
      for (const auto& f : expand_shards(s_shards)) {
        Shard sh;
        sh.records = mixer::read_shard_file(f);
        const auto st = mixer::sample_stats({sh}).front();
        ordered_json counts = ordered_json::object();
        for (const auto& [k, n] : st) counts[k.first + " " + k.second] = n;
        arr.push_back({{"file", f}, {"records", sh.records.size()}, {"counts", counts}});
      }
      j["shards"] = arr;
    } else if (train_cmd->parsed()) {
      const auto train_pairs = read_shards(t_train);
      const auto dev_pairs = t_dev.empty() ? std::vector<TaggedPair>{} : read_shards(t_dev);
      const Vocab vocab = t_vocab.empty() ? build_vocab(specials, train_pairs) : read_vocab_file(t_vocab);
      std::vector<Example> data, dev;
      for (const auto& p : train_pairs) data.push_back(minimodel::make_example(p, vocab));
      for (const auto& p : dev_pairs) dev.push_back(minimodel::make_example(p, vocab));
      ModelDims dims = t_flags.dims;
      if (dims.max_len == 0) dims.max_len = std::max(longest(data), longest(dev));
      TinyModel model(dims, vocab, derive_seed(seed, 1));
      err << "train-toy: " << data.size() << " examples, " << model.param_count() << " parameters\n";
      const auto result = minimodel::train(model, data, t_flags.config(seed), dev);
      minimodel::save_checkpoint(result.model, t_flags.out, "seed=" + std::to_string(seed));
      write_log(t_flags.log, result);
      j = log_json(result, seed, model.param_count());
      j["checkpoint"] = t_flags.out;
    } else if (ft->parsed()) {
      const auto bpe = maybe_bpe(f_merges, f_vocab);
      auto segment = [&](std::vector<ParallelPair> pairs) {
        if (bpe) {
          for (auto& p : pairs) {
            p.src = subword::apply_bpe(p.src, *bpe);
            p.tgt = subword::apply_bpe(p.tgt, *bpe);
          }
        }
        return pairs;
      };
      const auto train_pairs = segment(corpus::read_parallel_files(f_src, f_tgt, f_src_lang, f_tgt_lang));
      std::vector<ParallelPair> dev_pairs;
      if (!f_dev_src.empty() || !f_dev_tgt.empty()) {
        dev_pairs = segment(corpus::read_parallel_files(f_dev_src, f_dev_tgt, f_src_lang, f_tgt_lang));
      }
      std::optional<Vocab> data_vocab;
      if (bpe) data_vocab = Vocab(bpe->tokens());
      TinyModel model;
      if (!f_model.empty()) {
        model = minimodel::load_checkpoint_file(f_model);
        if (!data_vocab) data_vocab = model.vocab();
      } else {
        if (!data_vocab) {
          std::vector<TaggedPair> fake;
          for (const auto& p : train_pairs) {
            TaggedPair t;
            t.pair.enc_input = p.src.tokens;
            t.pair.dec_target = p.tgt.tokens;
            fake.push_back(std::move(t));
          }
          data_vocab = build_vocab(specials, fake);
        }
        ModelDims dims = f_flags.dims;
        if (dims.max_len == 0) {
          for (const auto& p : train_pairs) {
            dims.max_len = std::max({dims.max_len, p.src.tokens.size() + 1, p.tgt.tokens.size() + 1});
          }
          for (const auto& p : dev_pairs) {
            dims.max_len = std::max({dims.max_len, p.src.tokens.size() + 1, p.tgt.tokens.size() + 1});
          }
        }
        model = TinyModel(dims, *data_vocab, derive_seed(seed, 1));
      }
      const auto params = model.param_count();
      const auto result =
          minimodel::finetune(std::move(model), train_pairs, dev_pairs, *data_vocab, specials,
                              f_flags.config(seed));
      minimodel::save_checkpoint(result.model, f_flags.out, "seed=" + std::to_string(seed));
      write_log(f_flags.log, result);
      j = log_json(result, seed, params);
      j["checkpoint"] = f_flags.out;
    } else if (acc->parsed()) {
      const auto model = minimodel::load_checkpoint_file(c_model);
      std::vector<Example> data;
      std::size_t positions = 0;
      for (const auto& p : read_shards(c_shards)) {
        data.push_back(minimodel::make_example(p, model.vocab()));
        positions += data.back().loss.size();
      }
      if (data.empty()) throw Error("no records to evaluate");
      j["accuracy"] = minimodel::unigram_accuracy(model, data);
      j["records"] = data.size();
      j["positions"] = positions;
    } else if (tr->parsed()) {
      const auto model = minimodel::load_checkpoint_file(r_model);
      const auto bpe = maybe_bpe(r_merges, r_vocab);
      const auto sources = corpus::read_plain_file(r_input, r_lang);
      std::ofstream o(r_output);
      if (!o) throw Error("cannot write " + r_output);
      for (const auto& raw : sources) {
        const auto s = bpe ? subword::apply_bpe(raw, *bpe) : raw;
        ParallelPair probe{s, s};
        const auto ex = minimodel::make_translation_example(probe, model.vocab(), specials);
        const std::size_t limit = r_max ? r_max : 2 * s.tokens.size() + 8;
        std::vector<std::string> toks;
        for (int id : minimodel::greedy_decode(model, ex.enc, limit)) {
          const auto& t = model.vocab().token(id);
          if (!specials.is_special(t)) toks.push_back(t);
        }
        if (bpe) toks = subword::detokenize(toks, *bpe);
        for (std::size_t i = 0; i < toks.size(); ++i) o << (i ? " " : "") << toks[i];
        o << '\n';
      }
      j["sentences"] = sources.size();
      j["output"] = r_output;
    } else if (bl->parsed()) {
      EvalCorpus c{read_token_lines(b_hyp), read_token_lines(b_ref)};
      j["bleu"] = evalmetrics::bleu(c, b_max_n, parse_smoothing(b_smooth));
      j["sentences"] = c.hypotheses.size();
    } else if (sig->parsed()) {
      const auto refs = read_token_lines(g2_ref);
      EvalCorpus a{read_token_lines(g2_a), refs};
      EvalCorpus b{read_token_lines(g2_b), refs};
      const auto r = evalmetrics::bootstrap_significance(a, b, g2_samples, seed, g2_max_n,
                                                         parse_smoothing(g2_smooth), threads);
      j["bleu_a"] = r.bleu_a;
      j["bleu_b"] = r.bleu_b;
      j["p_value"] = r.p_value;
      j["samples"] = g2_samples;
      j["seed"] = seed;
    }
    out << j.dump() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace jasskit::cli
