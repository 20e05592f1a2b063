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
#include "jasskit/mixer.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "jasskit/error.hpp"
#include "jasskit/rng.hpp"

namespace jasskit::mixer {
namespace {

constexpr std::uint64_t kStreamSalt = 0x5354524541ULL;  // per-component visiting order
constexpr std::uint64_t kDrawSalt = 0x44524157ULL;      // component draws per shard
constexpr std::uint64_t kOrderSalt = 0x4f52444552ULL;   // record order within a shard

std::string join(const std::vector<std::string>& v, char sep, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < v.size(); ++i) {
    if (i > from) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string lang_from_token(const std::string& tok) {
  if (tok.size() < 3 || tok.front() != '[' || tok.back() != ']') {
    throw ParseError(0, "malformed language token " + tok);
  }
  std::string lang = tok.substr(1, tok.size() - 2);
  lang[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(lang[0])));
  return lang;
}

Task parse_task_name(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (n == "mass") return Task::kMass;
  if (n == "bmass") return Task::kBmass;
  if (n == "brss" || n == "rss") return Task::kBrss;
  throw ConfigError("unknown task in weights: " + name);
}

double parse_weight(const std::string& w) {
  try {
    std::size_t used = 0;
    auto slash = w.find('/');
    double value;
    if (slash == std::string::npos) {
      value = std::stod(w, &used);
      if (used != w.size()) throw ConfigError("");
    } else {
      const auto num = w.substr(0, slash);
      const auto den = w.substr(slash + 1);
      double a = std::stod(num, &used);
      if (used != num.size()) throw ConfigError("");
      double b = std::stod(den, &used);
      if (used != den.size() || b == 0.0) throw ConfigError("");
      value = a / b;
    }
    return value;
  } catch (const std::exception&) {
    throw ConfigError("malformed weight: " + w);
  }
}

}  // namespace

TaggedPair tag_pair(const TrainingPair& p, const SpecialTokens& specials) {
  TaggedPair t;
  t.pair = p;
  t.pair.enc_input.clear();
  t.pair.enc_input.reserve(p.enc_input.size() + 2);
  t.pair.enc_input.emplace_back(task_token(p.task));
  t.pair.enc_input.push_back(specials.lang_token(p.lang));
  t.pair.enc_input.insert(t.pair.enc_input.end(), p.enc_input.begin(), p.enc_input.end());
  return t;
}

TrainingPair untag(const TaggedPair& p) {
  TrainingPair out = p.pair;
  if (out.enc_input.size() < 2) throw Error("tagged pair lacks task and language tokens");
  out.enc_input.erase(out.enc_input.begin(), out.enc_input.begin() + 2);
  return out;
}

void check_schedule(const MixSchedule& schedule) {
  if (schedule.components.empty()) throw ConfigError("mix schedule has no components");
  if (schedule.shard_size == 0) throw ConfigError("shard size must be positive");
  std::set<std::pair<Task, std::string>> seen;
  for (const auto& c : schedule.components) {
    if (!(c.weight > 0.0)) {
      throw ConfigError("weight of " + std::string(task_name(c.task)) + ":" + c.lang +
                        " must be positive");
    }
    if (!seen.emplace(c.task, c.lang).second) {
      throw ConfigError("duplicate mix component " + std::string(task_name(c.task)) + ":" + c.lang);
    }
  }
}

std::vector<MixComponent> parse_weights(const std::string& text) {
  std::vector<MixComponent> out;
  for (const auto& item : split(text, ',')) {
    auto parts = split(item, ':');
    if (parts.size() != 3 || parts[1].empty()) {
      throw ConfigError("weights entry must be task:lang:weight, got " + item);
    }
    out.push_back({parse_task_name(parts[0]), parts[1], parse_weight(parts[2])});
  }
  return out;
}

MixResult build_shards(const std::vector<std::vector<TaggedPair>>& streams,
                       const MixSchedule& schedule, std::size_t threads) {
  check_schedule(schedule);
  const auto& comps = schedule.components;
  if (streams.size() != comps.size()) {
    throw ConfigError("got " + std::to_string(streams.size()) + " streams for " +
                      std::to_string(comps.size()) + " mix components");
  }
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (streams[c].empty()) {
      throw ConfigError("stream for " + std::string(task_name(comps[c].task)) + ":" +
                        comps[c].lang + " is empty");
    }
    for (const auto& p : streams[c]) {
      if (p.pair.task != comps[c].task || p.pair.lang != comps[c].lang) {
        throw ConfigError("stream " + std::to_string(c) + " holds a pair of another component");
      }
    }
  }

  const std::uint64_t seed = schedule.global_seed;
  auto visiting_order = [&](std::size_t c, std::uint64_t epoch) {
    std::vector<std::size_t> order(streams[c].size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, kStreamSalt, derive_seed(c, epoch)));
    rng.shuffle(order.begin(), order.end());
    return order;
  };

  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& c : comps) cumulative.push_back(total += c.weight);

  const std::size_t k = comps.size();
  std::vector<std::vector<std::size_t>> order(k);
  std::vector<std::size_t> cursor(k, 0), epoch(k, 0);
  std::vector<bool> finished(k, false);
  for (std::size_t c = 0; c < k; ++c) order[c] = visiting_order(c, 0);

  // Phase 1: decide which record lands in which shard. This only moves
  // indices around; the draw for shard s depends on (seed, s) alone.
  using Slot = std::pair<std::size_t, std::size_t>;  // (component, stream index)
  std::vector<std::vector<Slot>> plan;
  MixResult result;
  result.drawn.assign(k, 0);
  bool done = false;
  for (std::size_t s = 0; !done; ++s) {
    Rng draw(derive_seed(seed, kDrawSalt, s));
    std::vector<Slot> slots;
    slots.reserve(schedule.shard_size);
    while (slots.size() < schedule.shard_size) {
      const double u = draw.uniform() * total;
      const auto c = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                       cumulative.begin(),
                                   static_cast<std::ptrdiff_t>(k - 1)));
      if (cursor[c] == order[c].size()) {
        if (schedule.on_exhaust == ExhaustPolicy::kStop) {
          done = true;
          break;
        }
        order[c] = visiting_order(c, ++epoch[c]);
        cursor[c] = 0;
      }
      slots.emplace_back(c, order[c][cursor[c]++]);
      ++result.drawn[c];
      if (cursor[c] == order[c].size()) finished[c] = true;
      if (schedule.on_exhaust == ExhaustPolicy::kWrap &&
          std::all_of(finished.begin(), finished.end(), [](bool f) { return f; })) {
        done = true;
        break;
      }
    }
    if (!slots.empty()) plan.push_back(std::move(slots));
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (result.drawn[c] < streams[c].size()) result.truncated = true;
  }

  // Phase 2: materialize and shuffle every shard independently.
  result.shards.resize(plan.size());
  auto fill = [&](std::size_t s) {
    Shard& shard = result.shards[s];
    shard.index = s;
    shard.records.reserve(plan[s].size());
    for (auto [c, i] : plan[s]) shard.records.push_back(streams[c][i]);
    Rng rng(derive_seed(seed, kOrderSalt, s));
    rng.shuffle(shard.records.begin(), shard.records.end());
  };
  threads = std::max<std::size_t>(1, std::min(threads, plan.size()));
  if (threads == 1) {
    for (std::size_t s = 0; s < plan.size(); ++s) fill(s);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < plan.size(); s += threads) fill(s);
      });
    }
    for (auto& th : pool) th.join();
  }
  return result;
}

std::vector<ShardStats> sample_stats(const std::vector<Shard>& shards) {
  std::vector<ShardStats> out;
  out.reserve(shards.size());
  for (const auto& s : shards) {
    ShardStats st;
    for (const auto& r : s.records) ++st[{r.task_token(), r.lang_token()}];
    out.push_back(std::move(st));
  }
  return out;
}

std::string format_record(const TaggedPair& p) {
  const auto& enc = p.pair.enc_input;
  if (enc.size() < 2) throw Error("tagged pair lacks task and language tokens");
  std::string line = enc[0];
  line += '\t';
  line += enc[1];
  line += '\t';
  line += join(enc, ' ', 2);
  line += '\t';
  line += join(p.pair.dec_target, ' ');
  line += '\t';
  for (std::size_t i = 0; i < p.pair.loss_positions.size(); ++i) {
    if (i) line += ',';
    line += std::to_string(p.pair.loss_positions[i]);
  }
  return line;
}

TaggedPair parse_record(const std::string& line, std::size_t line_no) {
  auto fields = split(line, '\t');
  if (fields.size() != 5) {
    throw ParseError(line_no, "shard record must have 5 tab-separated fields, got " +
                                  std::to_string(fields.size()));
  }
  TaggedPair t;
  try {
    t.pair.task = task_from_token(fields[0]);
    t.pair.lang = lang_from_token(fields[1]);
  } catch (const ParseError& e) {
    throw ParseError(line_no, e.what());
  }
  auto tokens = [](const std::string& f) {
    std::vector<std::string> v;
    std::istringstream ss(f);
    std::string w;
    while (ss >> w) v.push_back(w);
    return v;
  };
  t.pair.enc_input = {fields[0], fields[1]};
  for (auto& w : tokens(fields[2])) t.pair.enc_input.push_back(std::move(w));
  t.pair.dec_target = tokens(fields[3]);
  for (const auto& pos : split(fields[4], ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(pos, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != pos.size()) throw ParseError(line_no, "malformed loss position: " + pos);
    if (v >= t.pair.dec_target.size()) throw ParseError(line_no, "loss position out of range");
    if (!t.pair.loss_positions.empty() && v <= t.pair.loss_positions.back()) {
      throw ParseError(line_no, "loss positions must be strictly ascending");
    }
    t.pair.loss_positions.push_back(v);
  }
  return t;
}

void write_shard(std::ostream& out, const Shard& shard, std::uint64_t seed) {
  out << "# jasskit-shard version=1 seed=" << seed << " index=" << shard.index
      << " records=" << shard.records.size() << '\n';
  for (const auto& r : shard.records) out << format_record(r) << '\n';
}

std::vector<TaggedPair> read_shard(std::istream& in) {
  std::vector<TaggedPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

std::vector<TaggedPair> read_shard_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return read_shard(in);
  } catch (const ParseError& e) {
    throw ParseError(path, e);
  }
}

std::vector<std::string> write_shards(const std::string& dir, const MixResult& result,
                                      std::uint64_t seed, std::size_t threads) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths(result.shards.size());
  for (std::size_t s = 0; s < paths.size(); ++s) {
    std::ostringstream name;
    name << "shard-" << std::setw(5) << std::setfill('0') << result.shards[s].index << ".tsv";
    paths[s] = (std::filesystem::path(dir) / name.str()).string();
  }
  std::vector<std::string> errors(paths.size());
  auto write_one = [&](std::size_t s) {
    std::ofstream out(paths[s]);
    if (!out) {
      errors[s] = "cannot write " + paths[s];
      return;
    }
    write_shard(out, result.shards[s], seed);
  };
  threads = std::max<std::size_t>(1, std::min(threads, paths.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t s = t; s < paths.size(); s += threads) write_one(s);
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  return paths;
}

}  // namespace jasskit::mixer
