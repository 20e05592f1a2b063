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
#include "jasskit/corpus_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "jasskit/error.hpp"
#include "jasskit/special_tokens.hpp"
#include "utf8.hpp"

namespace jasskit::corpus {
namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::optional<std::string> check_token(const std::string& tok, std::size_t i) {
  const auto at = " (token " + std::to_string(i) + ")";
  if (tok.empty()) return "empty token" + at;
  for (char c : tok) {
    if (is_ascii_space(c)) return "token contains whitespace" + at;
  }
  if (!utf8::valid(tok)) return "token is not valid UTF-8" + at;
  if (is_reserved_token(tok)) return "token is a reserved special token: " + tok + at;
  return std::nullopt;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return in;
}

}  // namespace

std::optional<std::string> check_sentence(const AnnotatedSentence& s) {
  if (s.lang.empty()) return "missing language code";
  if (s.tokens.empty()) return "sentence has no tokens";
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (auto err = check_token(s.tokens[i], i)) return err;
  }
  std::size_t expected = 0;
  for (std::size_t k = 0; k < s.bunsetsu.size(); ++k) {
    const Span& sp = s.bunsetsu[k];
    const auto at = " (span " + std::to_string(k) + ")";
    if (sp.end > s.tokens.size()) return "span out of range" + at;
    if (sp.begin >= sp.end) return "empty or inverted span" + at;
    if (sp.begin < expected) return "overlapping spans" + at;
    if (sp.begin > expected) return "gap between spans" + at;
    expected = sp.end;
  }
  if (!s.bunsetsu.empty() && expected != s.tokens.size()) {
    return "spans do not tile the token range";
  }
  return std::nullopt;
}

AnnotatedSentence parse_annotated_record(std::string_view line, std::string_view default_lang,
                                         std::size_t line_no) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");

  AnnotatedSentence s;
  if (auto it = j.find("lang"); it != j.end()) {
    if (!it->is_string()) throw ParseError(line_no, "\"lang\" must be a string");
    s.lang = it->get<std::string>();
  } else {
    s.lang = default_lang;
  }

  auto tok = j.find("tokens");
  if (tok == j.end() || !tok->is_array()) {
    throw ParseError(line_no, "\"tokens\" must be an array of strings");
  }
  s.tokens.reserve(tok->size());
  for (const auto& t : *tok) {
    if (!t.is_string()) throw ParseError(line_no, "\"tokens\" must be an array of strings");
    s.tokens.push_back(t.get<std::string>());
  }

  if (auto b = j.find("bunsetsu"); b != j.end()) {
    if (!b->is_array()) throw ParseError(line_no, "\"bunsetsu\" must be an array of pairs");
    for (const auto& p : *b) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() ||
          !p[1].is_number_unsigned()) {
        throw ParseError(line_no, "bunsetsu entries must be [start, end] pairs of non-negative integers");
      }
      s.bunsetsu.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
    }
  }

  return s;
}

AnnotatedSentence parse_annotated_line(std::string_view line, std::string_view default_lang,
                                       std::size_t line_no) {
  auto s = parse_annotated_record(line, default_lang, line_no);
  if (auto err = check_sentence(s)) throw ParseError(line_no, *err);
  if (s.lang == kJapanese && s.bunsetsu.empty()) {
    throw ParseError(line_no, "Japanese record without bunsetsu spans");
  }
  return s;
}

std::string serialize_annotated(const AnnotatedSentence& s) {
  nlohmann::ordered_json j;
  j["lang"] = s.lang;
  j["tokens"] = s.tokens;
  if (!s.bunsetsu.empty()) {
    auto spans = nlohmann::ordered_json::array();
    for (const auto& sp : s.bunsetsu) spans.push_back({sp.begin, sp.end});
    j["bunsetsu"] = std::move(spans);
  }
  return j.dump();
}

AnnotatedSentence split_plain_line(std::string_view line, std::string_view lang) {
  AnnotatedSentence s;
  s.lang = lang;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_ascii_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_ascii_space(line[j])) ++j;
    if (j > i) s.tokens.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return s;
}

AnnotatedSentence parse_plain_line(std::string_view line, std::string_view lang,
                                   std::size_t line_no) {
  auto s = split_plain_line(line, lang);
  if (auto err = check_sentence(s)) throw ParseError(line_no, *err);
  return s;
}

std::vector<AnnotatedSentence> filter_by_length(std::span<const AnnotatedSentence> corpus,
                                                std::size_t max_len) {
  std::vector<AnnotatedSentence> out;
  for (const auto& s : corpus) {
    if (within_length(s, max_len)) out.push_back(s);
  }
  return out;
}

ValidationReport validate_corpus(std::span<const AnnotatedSentence> corpus) {
  ValidationReport r;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& s = corpus[i];
    ++r.sentences;
    r.tokens += s.tokens.size();
    r.bunsetsus += s.bunsetsu.size();
    if (auto err = check_sentence(s)) r.violations.push_back({i, *err});
  }
  return r;
}

void for_each_annotated(std::istream& in, std::string_view default_lang,
                        const std::function<void(AnnotatedSentence&&)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(parse_annotated_line(line, default_lang, line_no));
  }
}

void for_each_plain(std::istream& in, std::string_view lang,
                    const std::function<void(AnnotatedSentence&&)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(parse_plain_line(line, lang, line_no));
  }
}

std::vector<AnnotatedSentence> read_annotated_file(const std::string& path,
                                                   std::string_view default_lang) {
  auto in = open_or_throw(path);
  std::vector<AnnotatedSentence> out;
  try {
    for_each_annotated(in, default_lang, [&](AnnotatedSentence&& s) { out.push_back(std::move(s)); });
  } catch (const ParseError& e) {
    throw ParseError(path, e);
  }
  return out;
}

std::vector<AnnotatedSentence> read_plain_file(const std::string& path, std::string_view lang) {
  auto in = open_or_throw(path);
  std::vector<AnnotatedSentence> out;
  try {
    for_each_plain(in, lang, [&](AnnotatedSentence&& s) { out.push_back(std::move(s)); });
  } catch (const ParseError& e) {
    throw ParseError(path, e);
  }
  return out;
}

std::vector<AnnotatedSentence> read_corpus_file(const std::string& path, std::string_view lang) {
  if (ends_with(path, ".jsonl")) return read_annotated_file(path, lang);
  return read_plain_file(path, lang);
}

std::vector<ParallelPair> read_parallel_files(const std::string& src_path,
                                              const std::string& tgt_path,
                                              std::string_view src_lang,
                                              std::string_view tgt_lang) {
  if (src_lang == tgt_lang) {
    throw ConfigError("parallel corpus needs two different languages, got " + std::string(src_lang));
  }
  auto src = open_or_throw(src_path);
  auto tgt = open_or_throw(tgt_path);
  std::vector<ParallelPair> out;
  std::string a, b;
  std::size_t line_no = 0;
  while (true) {
    const bool has_a = static_cast<bool>(std::getline(src, a));
    const bool has_b = static_cast<bool>(std::getline(tgt, b));
    if (!has_a && !has_b) break;
    ++line_no;
    if (has_a != has_b) {
      throw ParseError(line_no, "parallel files have different line counts: " + src_path +
                                    " vs " + tgt_path);
    }
    try {
      ParallelPair p{parse_plain_line(a, src_lang, line_no), parse_plain_line(b, tgt_lang, line_no)};
      out.push_back(std::move(p));
    } catch (const ParseError& e) {
      throw ParseError(line_no, src_path + " / " + tgt_path + ": " + e.what());
    }
  }
  return out;
}

void write_annotated(std::ostream& out, std::span<const AnnotatedSentence> corpus) {
  for (const auto& s : corpus) out << serialize_annotated(s) << '\n';
}

}  // namespace jasskit::corpus
