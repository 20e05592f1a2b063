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
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jasskit/corpus_io.hpp"
#include "jasskit/mixer.hpp"
#include "jasskit/special_tokens.hpp"

namespace jasskit {

// Token <-> id map of a model. Ids are positions in tokens().
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  int find(std::string_view token) const;
  // Unknown tokens map to "<unk>"; throws ModelError if that is missing too.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  // FNV-1a over the id-ordered token list.
  std::uint64_t hash() const { return hash_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::uint64_t hash_ = 0;
};

// Special tokens followed by every other token seen in the pairs, sorted.
Vocab build_vocab(const SpecialTokens& specials, std::span<const TaggedPair> pairs);

struct ModelDims {
  std::size_t embed = 16;
  std::size_t hidden = 32;
  std::size_t attn = 16;
  std::size_t enc_window = 2;  // encoder reads positions i-w .. i+w
  std::size_t dec_window = 2;  // decoder reads its last w inputs
  std::size_t max_len = 64;    // longest encoder or decoder sequence
};

enum class ParamBlock {
  kTokenEmbedding,   // V x embed, shared by encoder and decoder
  kEncoderPosition,  // max_len x embed
  kDecoderPosition,  // max_len x embed
  kEncoderWeight,    // hidden x (2 enc_window + 1) embed
  kEncoderBias,
  kDecoderWeight,    // hidden x dec_window embed
  kDecoderBias,
  kQuery,            // attn x hidden
  kKey,              // attn x hidden
  kMixWeight,        // hidden x 2 hidden
  kMixBias,
  kOutputWeight,     // V x hidden
  kOutputBias,
};

/// Single-layer attention encoder-decoder.
///
/// Encoder: h_i = tanh(W_e [x_{i-w} .. x_{i+w}] + b_e) over token plus
/// position embeddings. Decoder: s_t = tanh(W_d [y_{t-w+1} .. y_t] + b_d) over
/// the shifted-right target. One dot-product attention head reads the h_i,
/// and g_t = tanh(W_m [s_t; c_t] + b_m) feeds the output softmax.
class TinyModel {
 public:
  TinyModel() = default;
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  TinyModel(ModelDims dims, Vocab vocab, std::uint64_t seed);
  // Takes explicit parameters; throws ModelError on a size mismatch.
  TinyModel(ModelDims dims, Vocab vocab, std::vector<double> params);

  const ModelDims& dims() const { return dims_; }
  const Vocab& vocab() const { return vocab_; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> block(ParamBlock b);
  std::span<const double> block(ParamBlock b) const;
  std::size_t block_offset(ParamBlock b) const;

 private:
  void layout();

  ModelDims dims_;
  Vocab vocab_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;  // one per ParamBlock plus the end
};

// Token ids for one teacher-forced example.
struct Example {
  std::vector<int> enc;
  std::vector<int> dec_in;  // <s> followed by target[0 .. n-1)
  std::vector<int> target;
  std::vector<std::size_t> loss;
};

enum class DevMetric {
  kAccuracy,  // 1-gram accuracy, higher is better
  kLoss,      // mean per-token masked NLL, lower is better
  kBleu,      // greedy-decode BLEU over vocabulary tokens, higher is better
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t max_steps = 5000;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  std::size_t patience = 5;  // checkpoints without improvement before stopping
  std::size_t checkpoint_every = 250;
  DevMetric metric = DevMetric::kAccuracy;
  // Stop as soon as the dev loss reaches this value.
  std::optional<double> target_dev_loss;
};

struct CheckpointRecord {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean per-token loss since the previous checkpoint
  double dev_metric = 0.0;
  double dev_loss = 0.0;
  bool operator==(const CheckpointRecord&) const = default;
};

struct TrainResult {
  TinyModel model;  // best checkpoint
  std::vector<CheckpointRecord> log;
  std::size_t best_step = 0;
  std::size_t steps = 0;
  bool early_stopped = false;
  std::optional<std::size_t> reached_target_at;
};

namespace minimodel {

Example make_example(const TaggedPair& p, const Vocab& vocab);

// Fine-tuning example: encoder gets the source language token then the
// source tokens; the target ends with </s> and every position is supervised.
Example make_translation_example(const ParallelPair& p, const Vocab& vocab,
                                 const SpecialTokens& specials);

// Per-position output distributions, one row of vocab().size() per decoder
// input. Throws ModelError for out-of-range ids or over-long sequences.
std::vector<std::vector<double>> forward(const TinyModel& m, std::span<const int> enc,
                                         std::span<const int> dec_in);

// Sum of -log p(target_t) over t in loss. Throws ModelError when loss is empty.
double masked_nll(const TinyModel& m, const Example& ex);
double masked_nll(const TinyModel& m, const TaggedPair& p);

// Adds d(masked_nll)/d(theta) to grad (size param_count()) and returns the loss.
double masked_nll_grad(const TinyModel& m, const Example& ex, std::span<double> grad);

// Fraction of loss positions whose argmax equals the target, micro-averaged.
double unigram_accuracy(const TinyModel& m, std::span<const Example> data);

// Mean per-token masked NLL.
double mean_loss(const TinyModel& m, std::span<const Example> data);

std::vector<int> greedy_decode(const TinyModel& m, std::span<const int> enc, std::size_t max_len);

// Mini-batch gradient descent with a fixed learning rate. Throws ModelError
// if the loss becomes NaN or infinite.
TrainResult train(TinyModel m, std::span<const Example> train, const TrainConfig& cfg,
                  std::span<const Example> dev);

// Full-sequence training from m's parameters. Throws ModelError when vocab
// differs from the model's vocabulary.
TrainResult finetune(TinyModel m, std::span<const ParallelPair> train,
                     std::span<const ParallelPair> dev, const Vocab& vocab,
                     const SpecialTokens& specials, const TrainConfig& cfg);

// meta is a free-form single line (e.g. "seed=7") stored with the weights.
void save_checkpoint(const TinyModel& m, std::ostream& out, const std::string& meta = "");
TinyModel load_checkpoint(std::istream& in);
void save_checkpoint(const TinyModel& m, const std::string& path, const std::string& meta = "");
TinyModel load_checkpoint_file(const std::string& path);

void write_log_csv(std::span<const CheckpointRecord> log, std::ostream& out);

}  // namespace minimodel
}  // namespace jasskit
