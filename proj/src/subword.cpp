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
#include "jasskit/subword.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "jasskit/error.hpp"
#include "utf8.hpp"

namespace jasskit {
namespace {

bool has_marker(std::string_view s) {
  return s.size() >= kContinuationMarker.size() &&
         s.substr(s.size() - kContinuationMarker.size()) == kContinuationMarker;
}

std::string_view strip_marker(std::string_view s) {
  return has_marker(s) ? s.substr(0, s.size() - kContinuationMarker.size()) : s;
}

std::string merge_key(std::string_view left, std::string_view right) {
  std::string k;
  k.reserve(left.size() + right.size() + 1);
  k += left;
  k += ' ';
  k += right;
  return k;
}

// Initial emitted-form units of a word: one per character.
std::vector<std::string> initial_units(std::string_view word) {
  auto chars = utf8::split_chars(word);
  for (std::size_t i = 0; i + 1 < chars.size(); ++i) chars[i] += kContinuationMarker;
  return chars;
}

}  // namespace

std::string MergeRule::product() const {
  std::string p(strip_marker(left));
  p += right;
  return p;
}

SubwordModel::SubwordModel(SpecialTokens specials, std::vector<MergeRule> merges,
                           std::vector<std::string> units, std::size_t vocab_size_target)
    : specials_(std::move(specials)),
      merges_(std::move(merges)),
      tokens_(specials_.list()),
      vocab_size_target_(vocab_size_target) {
  tokens_.insert(tokens_.end(), units.begin(), units.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ModelError("duplicate vocabulary entry: " + tokens_[i]);
    }
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& m = merges_[r];
    if (!has_marker(m.left)) throw ModelError("merge left side lacks continuation marker: " + m.left);
    ranks_.emplace(merge_key(m.left, m.right), RankedMerge{r, m.product()});
  }
}

int SubwordModel::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? -1 : it->second;
}

int SubwordModel::unk_id() const { return find(kUnkToken); }

std::vector<std::string> SubwordModel::segment(std::string_view word) const {
  auto units = initial_units(word);
  while (units.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    const RankedMerge* best = nullptr;
    std::string best_left, best_right;
    for (std::size_t i = 0; i + 1 < units.size(); ++i) {
      auto it = ranks_.find(merge_key(units[i], units[i + 1]));
      if (it == ranks_.end()) continue;
      // A word-final unit that looks continued would not detokenize back.
      if (i + 2 == units.size() && has_marker(it->second.product)) continue;
      if (it->second.rank < best_rank) {
        best_rank = it->second.rank;
        best = &it->second;
        best_left = units[i];
        best_right = units[i + 1];
      }
    }
    if (best == nullptr) break;
    std::vector<std::string> next;
    next.reserve(units.size());
    for (std::size_t i = 0; i < units.size();) {
      if (i + 1 < units.size() && units[i] == best_left && units[i + 1] == best_right) {
        next.push_back(best->product);
        i += 2;
      } else {
        next.push_back(std::move(units[i]));
        ++i;
      }
    }
    units = std::move(next);
  }
  return units;
}

namespace subword {
namespace {

using WordCounts = std::map<std::string, std::uint64_t>;

void count_words(std::span<const AnnotatedSentence> corpus, std::uint64_t weight,
                 std::size_t threads, WordCounts& total) {
  if (corpus.empty()) return;
  threads = std::max<std::size_t>(1, std::min(threads, corpus.size()));
  std::vector<std::unordered_map<std::string, std::uint64_t>> partial(threads);
  auto work = [&](std::size_t t) {
    const std::size_t lo = corpus.size() * t / threads;
    const std::size_t hi = corpus.size() * (t + 1) / threads;
    for (std::size_t i = lo; i < hi; ++i) {
      for (const auto& tok : corpus[i].tokens) partial[t][tok] += weight;
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  // Addition commutes, so the folded table does not depend on the split.
  for (auto& p : partial) {
    for (auto& [w, c] : p) total[w] += c;
  }
}

struct Word {
  std::vector<int> units;
  std::uint64_t freq;
};

std::uint64_t pair_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

class MergeLearner {
 public:
  MergeLearner(const WordCounts& counts, std::size_t budget) : budget_(budget) {
    std::map<std::string, std::uint64_t> alphabet;
    for (const auto& [w, f] : counts) {
      for (auto& u : initial_units(w)) alphabet[u] += f;
    }
    std::vector<std::string> kept;
    for (const auto& [u, f] : alphabet) kept.push_back(u);
    if (kept.size() > budget_) {
      // More distinct characters than room: keep the most frequent.
      std::stable_sort(kept.begin(), kept.end(), [&](const auto& x, const auto& y) {
        return alphabet[x] > alphabet[y];
      });
      kept.resize(budget_);
      std::sort(kept.begin(), kept.end());
    }
    for (auto& u : kept) add_unit(u);
    for (const auto& [w, f] : counts) {
      Word word{{}, f};
      for (auto& u : initial_units(w)) {
        auto it = ids_.find(u);
        word.units.push_back(it == ids_.end() ? -1 : it->second);
      }
      words_.push_back(std::move(word));
    }
  }

  std::vector<MergeRule> run() {
    for (std::uint32_t w = 0; w < words_.size(); ++w) {
      const auto& u = words_[w].units;
      for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        if (u[i] < 0 || u[i + 1] < 0) continue;
        const auto k = pair_key(u[i], u[i + 1]);
        counts_[k] += static_cast<std::int64_t>(words_[w].freq);
        auto& list = where_[k];
        if (list.empty() || list.back() != w) list.push_back(w);
      }
    }
    for (const auto& [k, c] : counts_) queue_.insert(entry(k, c));

    std::vector<MergeRule> merges;
    std::vector<std::size_t> stamp(words_.size(), std::numeric_limits<std::size_t>::max());
    while (units_.size() < budget_ && !queue_.empty()) {
      const Entry best = *queue_.begin();
      if (best.count < 2) break;
      const int a = best.a;
      const int b = best.b;
      const std::uint64_t key = pair_key(a, b);
      MergeRule rule{units_[a], units_[b]};
      const int merged = add_unit(rule.product());
      merges.push_back(std::move(rule));

      std::unordered_map<std::uint64_t, std::int64_t> delta;
      auto occurrences = std::move(where_[key]);
      where_.erase(key);
      const std::size_t iteration = merges.size();
      for (auto w : occurrences) {
        if (stamp[w] == iteration) continue;
        stamp[w] = iteration;
        auto& u = words_[w].units;
        const auto f = static_cast<std::int64_t>(words_[w].freq);
        bool present = false;
        for (std::size_t i = 0; i + 1 < u.size(); ++i) {
          if (u[i] == a && u[i + 1] == b) {
            present = true;
            break;
          }
        }
        if (!present) continue;
        for (std::size_t i = 0; i + 1 < u.size(); ++i) {
          if (u[i] >= 0 && u[i + 1] >= 0) delta[pair_key(u[i], u[i + 1])] -= f;
        }
        std::vector<int> next;
        next.reserve(u.size());
        for (std::size_t i = 0; i < u.size();) {
          if (i + 1 < u.size() && u[i] == a && u[i + 1] == b) {
            next.push_back(merged);
            i += 2;
          } else {
            next.push_back(u[i]);
            ++i;
          }
        }
        u = std::move(next);
        for (std::size_t i = 0; i + 1 < u.size(); ++i) {
          if (u[i] < 0 || u[i + 1] < 0) continue;
          const auto k = pair_key(u[i], u[i + 1]);
          delta[k] += f;
          if (u[i] == merged || u[i + 1] == merged) {
            auto& list = where_[k];
            if (list.empty() || list.back() != w) list.push_back(w);
          }
        }
      }
      for (const auto& [k, d] : delta) {
        if (d == 0) continue;
        auto it = counts_.find(k);
        const std::int64_t old = it == counts_.end() ? 0 : it->second;
        if (old > 0) queue_.erase(entry(k, old));
        const std::int64_t now = old + d;
        if (now > 0) {
          counts_[k] = now;
          queue_.insert(entry(k, now));
        } else if (it != counts_.end()) {
          counts_.erase(it);
        }
      }
    }
    return merges;
  }

  const std::vector<std::string>& units() const { return units_; }

 private:
  struct Entry {
    std::int64_t count;
    int a;
    int b;
  };

  // Highest count first; ties broken lexicographically on (left, right).
  struct EntryOrder {
    const std::vector<std::string>* units;
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.count != y.count) return x.count > y.count;
      const auto& u = *units;
      if (x.a != y.a) {
        if (u[x.a] != u[y.a]) return u[x.a] < u[y.a];
      }
      if (x.b != y.b) return u[x.b] < u[y.b];
      return false;
    }
  };

  Entry entry(std::uint64_t k, std::int64_t c) const {
    return {c, static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)};
  }

  int add_unit(const std::string& u) {
    auto [it, inserted] = ids_.emplace(u, static_cast<int>(units_.size()));
    if (inserted) units_.push_back(u);
    return it->second;
  }

  std::size_t budget_;
  std::vector<std::string> units_;
  std::unordered_map<std::string, int> ids_;
  std::vector<Word> words_;
  std::unordered_map<std::uint64_t, std::int64_t> counts_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where_;
  std::set<Entry, EntryOrder> queue_{EntryOrder{&units_}};
};

}  // namespace

SubwordModel learn_bpe(std::span<const std::vector<AnnotatedSentence>> mono,
                       std::span<const AnnotatedSentence> finetune, const LearnOptions& opts) {
  if (opts.vocab_size < opts.specials.size()) {
    throw ConfigError("vocab_size " + std::to_string(opts.vocab_size) +
                      " is smaller than the " + std::to_string(opts.specials.size()) +
                      " special tokens");
  }
  if (opts.oversample_factor == 0) throw ConfigError("oversample_factor must be positive");

  WordCounts counts;
  for (const auto& stream : mono) count_words(stream, 1, opts.threads, counts);
  count_words(finetune, opts.oversample_factor, opts.threads, counts);

  MergeLearner learner(counts, opts.vocab_size - opts.specials.size());
  auto merges = learner.run();
  return SubwordModel(opts.specials, std::move(merges), learner.units(), opts.vocab_size);
}

AnnotatedSentence apply_bpe(const AnnotatedSentence& s, const SubwordModel& m) {
  AnnotatedSentence out;
  out.lang = s.lang;
  std::vector<std::size_t> start;
  start.reserve(s.tokens.size() + 1);
  for (const auto& word : s.tokens) {
    start.push_back(out.tokens.size());
    for (auto& piece : m.segment(word)) out.tokens.push_back(std::move(piece));
  }
  start.push_back(out.tokens.size());
  out.bunsetsu.reserve(s.bunsetsu.size());
  for (const auto& sp : s.bunsetsu) out.bunsetsu.push_back({start[sp.begin], start[sp.end]});
  return out;
}

std::vector<std::string> detokenize(std::span<const std::string> tokens, const SubwordModel& m) {
  std::vector<std::string> words;
  std::string current;
  bool open = false;
  for (const auto& t : tokens) {
    if (m.specials().is_special(t)) throw Error("cannot detokenize special token " + t);
    if (has_marker(t)) {
      current += strip_marker(t);
      open = true;
    } else {
      current += t;
      words.push_back(std::move(current));
      current.clear();
      open = false;
    }
  }
  if (open) words.push_back(std::move(current));
  return words;
}

std::vector<int> to_ids(std::span<const std::string> tokens, const SubwordModel& m) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(m.id_or_unk(t));
  return ids;
}

namespace {
constexpr std::string_view kMergeHeader = "#jasskit-bpe";
}

void save_merges(const SubwordModel& m, std::ostream& out) {
  out << kMergeHeader << " version=1 marker=" << kContinuationMarker
      << " vocab_size=" << m.vocab_size_target() << " languages=";
  const auto& langs = m.specials().languages();
  for (std::size_t i = 0; i < langs.size(); ++i) out << (i ? "," : "") << langs[i];
  out << '\n';
  for (const auto& r : m.merges()) out << r.left << ' ' << r.right << '\n';
}

void save_vocab(const SubwordModel& m, std::ostream& out) {
  const auto& t = m.tokens();
  for (std::size_t i = 0; i < t.size(); ++i) out << t[i] << '\t' << i << '\n';
}

SubwordModel load_model(std::istream& merges_in, std::istream& vocab_in) {
  std::string line;
  if (!std::getline(merges_in, line)) throw ParseError(1, "empty merge file");
  std::istringstream header(line);
  std::string word;
  header >> word;
  if (word != kMergeHeader) throw ParseError(1, "not a jasskit BPE merge file");
  std::size_t vocab_size = 0;
  std::vector<std::string> langs;
  bool version_ok = false;
  while (header >> word) {
    auto eq = word.find('=');
    if (eq == std::string::npos) throw ParseError(1, "malformed header field: " + word);
    auto key = word.substr(0, eq);
    auto val = word.substr(eq + 1);
    if (key == "version") {
      version_ok = val == "1";
    } else if (key == "marker") {
      if (val != kContinuationMarker) throw ParseError(1, "unsupported continuation marker " + val);
    } else if (key == "vocab_size") {
      vocab_size = std::stoul(val);
    } else if (key == "languages") {
      std::stringstream ss(val);
      std::string l;
      while (std::getline(ss, l, ',')) langs.push_back(l);
    }
  }
  if (!version_ok) throw ParseError(1, "unsupported merge file version");

  std::vector<MergeRule> merges;
  std::size_t line_no = 1;
  while (std::getline(merges_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    MergeRule r;
    std::string extra;
    if (!(ls >> r.left >> r.right) || (ls >> extra)) throw ParseError(line_no, "malformed merge rule");
    merges.push_back(std::move(r));
  }

  SpecialTokens specials(langs);
  std::vector<std::string> units;
  line_no = 0;
  while (std::getline(vocab_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "vocabulary line lacks a tab");
    auto tok = line.substr(0, tab);
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "vocabulary id is not an integer");
    }
    const std::size_t expected = specials.size() + units.size();
    if (id < specials.size()) {
      if (id != line_no - 1 || specials.list()[id] != tok) {
        throw ParseError(line_no, "special token mismatch at id " + std::to_string(id));
      }
      continue;
    }
    if (id != expected) throw ParseError(line_no, "vocabulary ids are not consecutive");
    units.push_back(std::move(tok));
  }
  return SubwordModel(std::move(specials), std::move(merges), std::move(units), vocab_size);
}

void save_model(const SubwordModel& m, const std::string& merges_path, const std::string& vocab_path) {
  std::ofstream mo(merges_path);
  std::ofstream vo(vocab_path);
  if (!mo) throw Error("cannot write " + merges_path);
  if (!vo) throw Error("cannot write " + vocab_path);
  save_merges(m, mo);
  save_vocab(m, vo);
}

SubwordModel load_model(const std::string& merges_path, const std::string& vocab_path) {
  std::ifstream mi(merges_path);
  std::ifstream vi(vocab_path);
  if (!mi) throw Error("cannot open " + merges_path);
  if (!vi) throw Error("cannot open " + vocab_path);
  return load_model(mi, vi);
}

}  // namespace subword
}  // namespace jasskit
