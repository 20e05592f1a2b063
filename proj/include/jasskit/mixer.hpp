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
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "jasskit/objectives.hpp"
#include "jasskit/special_tokens.hpp"

namespace jasskit {

// A TrainingPair whose encoder input starts with the task token and then the
// language token. dec_target and loss_positions are untouched, so loss
// positions still index the untagged decoder target.
struct TaggedPair {
  TrainingPair pair;

  const std::string& task_token() const { return pair.enc_input.at(0); }
  const std::string& lang_token() const { return pair.enc_input.at(1); }
  bool operator==(const TaggedPair&) const = default;
};

enum class ExhaustPolicy {
  kStop,  // end the mix as soon as any component runs dry
  kWrap,  // restart a dry component until every component finished one pass
};

struct MixComponent {
  Task task = Task::kMass;
  std::string lang;
  double weight = 1.0;
};

struct MixSchedule {
  std::vector<MixComponent> components;
  std::size_t shard_size = 1000;
  std::uint64_t global_seed = 0;
  ExhaustPolicy on_exhaust = ExhaustPolicy::kStop;
};

struct Shard {
  std::size_t index = 0;
  std::vector<TaggedPair> records;
};

struct MixResult {
  std::vector<Shard> shards;
  std::vector<std::size_t> drawn;  // records taken per component
  bool truncated = false;          // some component was not fully consumed
};

// (task token, language token) -> count
using ShardStats = std::map<std::pair<std::string, std::string>, std::size_t>;

namespace mixer {

TaggedPair tag_pair(const TrainingPair& p, const SpecialTokens& specials);

// Inverse of tag_pair.
TrainingPair untag(const TaggedPair& p);

// Throws ConfigError on duplicate (task, lang), non-positive weights or a zero
// shard size.
void check_schedule(const MixSchedule& schedule);

// Parses "task:lang:w[,...]" where task is mass|bmass|brss and w is a
// positive decimal or a fraction like 1/3.
std::vector<MixComponent> parse_weights(const std::string& text);

/// Interleaves the per-component streams into shuffled shards.
///
/// streams[i] feeds schedule.components[i] and must hold pairs of exactly that
/// task and language. Each stream is visited in a seeded permutation order;
/// the component of every record is drawn by weight from a generator seeded
/// with (global_seed, shard index), and each shard's record order is a
/// further seeded permutation. The result does not depend on threads.
MixResult build_shards(const std::vector<std::vector<TaggedPair>>& streams,
                       const MixSchedule& schedule, std::size_t threads = 1);

std::vector<ShardStats> sample_stats(const std::vector<Shard>& shards);

// TSV line: task token, language token, untagged encoder input, decoder target,
// comma-joined loss positions.
std::string format_record(const TaggedPair& p);
TaggedPair parse_record(const std::string& line, std::size_t line_no = 0);

void write_shard(std::ostream& out, const Shard& shard, std::uint64_t seed);
std::vector<TaggedPair> read_shard(std::istream& in);
std::vector<TaggedPair> read_shard_file(const std::string& path);

// Writes shard-NNNNN.tsv files into dir and returns their paths.
std::vector<std::string> write_shards(const std::string& dir, const MixResult& result,
                                      std::uint64_t seed, std::size_t threads = 1);

}  // namespace mixer
}  // namespace jasskit
