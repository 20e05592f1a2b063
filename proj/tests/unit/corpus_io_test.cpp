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
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jasskit/corpus_io.hpp"
#include "jasskit/error.hpp"
#include "support/fuzz.hpp"

namespace jasskit {
namespace {

TEST(ParseAnnotated, SingleToken) {
  const auto s = corpus::parse_annotated_line(R"({"tokens":["a"],"bunsetsu":[[0,1]]})", "ja");
  EXPECT_EQ(s.lang, "ja");
  EXPECT_EQ(s.tokens, std::vector<std::string>{"a"});
  EXPECT_EQ(s.bunsetsu, (std::vector<Span>{{0, 1}}));
}

TEST(ParseAnnotated, TwoBunsetsus) {
  const auto s = corpus::parse_annotated_line(R"({"tokens":["x","y","z"],"bunsetsu":[[0,2],[2,3]]})", "ja");
  EXPECT_EQ(s.bunsetsu, (std::vector<Span>{{0, 2}, {2, 3}}));
}

TEST(ParseAnnotated, LangKeyOverridesDefault) {
  const auto s = corpus::parse_annotated_line(R"({"lang":"en","tokens":["x"]})", "ja");
  EXPECT_EQ(s.lang, "en");
  EXPECT_FALSE(s.has_bunsetsu());
}

void expect_parse_error(const std::string& line, const std::string& fragment, std::size_t line_no = 7) {
  try {
    corpus::parse_annotated_line(line, "ja", line_no);
    FAIL() << "accepted " << line;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line_no);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find(std::to_string(line_no)), std::string::npos) << e.what();
  }
}

TEST(ParseAnnotated, RejectsBadSpans) {
  expect_parse_error(R"({"tokens":["x","y"],"bunsetsu":[[0,1]]})", "tile");
  expect_parse_error(R"({"tokens":["x","y"],"bunsetsu":[[0,1],[2,2]]})", "");
  expect_parse_error(R"({"tokens":["x","y"],"bunsetsu":[[0,2],[1,2]]})", "");
  expect_parse_error(R"({"tokens":["x","y"],"bunsetsu":[[0,3]]})", "");
  expect_parse_error(R"({"tokens":["x","y"],"bunsetsu":[[1,2],[0,1]]})", "");
}

TEST(ParseAnnotated, RejectsBadTokens) {
  expect_parse_error(R"({"tokens":["x",""],"bunsetsu":[[0,2]]})", "empty");
  expect_parse_error(R"({"tokens":["x y"],"bunsetsu":[[0,1]]})", "whitespace");
  expect_parse_error(R"({"tokens":["[M]"],"bunsetsu":[[0,1]]})", "reserved");
  expect_parse_error(R"({"tokens":["[Ja]"],"bunsetsu":[[0,1]]})", "reserved");
  expect_parse_error(R"({"tokens":[],"bunsetsu":[]})", "");
}

TEST(ParseAnnotated, RejectsMalformedRecords) {
  expect_parse_error("not json", "");
  expect_parse_error(R"({"tokens":"x"})", "");
  expect_parse_error(R"({"tokens":["x"],"bunsetsu":[[0]]})", "");
  expect_parse_error(R"({"tokens":["x"],"bunsetsu":[[0,-1]]})", "");
}

TEST(ParseAnnotated, JapaneseNeedsBunsetsu) {
  expect_parse_error(R"({"lang":"ja","tokens":["x"]})", "bunsetsu");
  EXPECT_NO_THROW(corpus::parse_annotated_record(R"({"lang":"ja","tokens":["x"]})", "ja"));
}

TEST(ParseAnnotated, RoundTripOnFuzz) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const auto s = testing::random_annotated(rng);
    const auto line = corpus::serialize_annotated(s);
    const auto back = corpus::parse_annotated_line(line, "en");
    EXPECT_EQ(back, s);
    EXPECT_EQ(corpus::serialize_annotated(back), line);
  }
}

TEST(ParsePlain, SplitsOnWhitespace) {
  const auto s = corpus::parse_plain_line("  the\tcat  sat ", "en");
  EXPECT_EQ(s.tokens, (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_EQ(s.lang, "en");
  EXPECT_THROW(corpus::parse_plain_line("a [MASS] b", "en", 3), ParseError);
  EXPECT_THROW(corpus::parse_plain_line("   ", "en", 3), ParseError);
}

AnnotatedSentence of_length(std::size_t n) {
  AnnotatedSentence s;
  s.lang = "en";
  for (std::size_t i = 0; i < n; ++i) s.tokens.push_back("w" + std::to_string(i));
  return s;
}

TEST(FilterByLength, Boundary) {
  const std::vector<AnnotatedSentence> c = {of_length(175), of_length(176), of_length(3)};
  const auto kept = corpus::filter_by_length(c);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].tokens.size(), 175u);
  EXPECT_EQ(kept[1].tokens.size(), 3u);
  EXPECT_TRUE(corpus::filter_by_length(std::vector<AnnotatedSentence>{}).empty());
}

TEST(FilterByLength, IdempotentAndOrderPreserving) {
  Rng rng(2);
  std::vector<AnnotatedSentence> c;
  for (int i = 0; i < 300; ++i) c.push_back(of_length(1 + rng.below(20)));
  const auto once = corpus::filter_by_length(c, 10);
  EXPECT_EQ(corpus::filter_by_length(once, 10), once);
  std::size_t j = 0;
  for (const auto& s : c) {
    if (s.tokens.size() <= 10) EXPECT_EQ(once.at(j++), s);
  }
  EXPECT_EQ(j, once.size());
}

TEST(Validate, Counts) {
  AnnotatedSentence a{"ja", {"x", "y", "z"}, {{0, 1}, {1, 3}}};
  AnnotatedSentence b{"en", {"p", "q", "r"}, {}};
  const auto r = corpus::validate_corpus(std::vector<AnnotatedSentence>{a, b});
  EXPECT_EQ(r.sentences, 2u);
  EXPECT_EQ(r.tokens, 6u);
  EXPECT_EQ(r.bunsetsus, 2u);
  EXPECT_TRUE(r.ok());
}

TEST(Validate, ReportsOverlap) {
  AnnotatedSentence a{"ja", {"x", "y", "z"}, {{0, 2}, {1, 3}}};
  AnnotatedSentence b{"ja", {"x"}, {{0, 1}}};
  const auto r = corpus::validate_corpus(std::vector<AnnotatedSentence>{b, a});
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].index, 1u);
}

TEST(Validate, Empty) {
  const auto r = corpus::validate_corpus(std::vector<AnnotatedSentence>{});
  EXPECT_EQ(r.sentences, 0u);
  EXPECT_EQ(r.tokens, 0u);
  EXPECT_TRUE(r.ok());
}

TEST(Streaming, SkipsBlankLinesButCountsThem) {
  std::istringstream in("{\"tokens\":[\"a\"],\"bunsetsu\":[[0,1]]}\n\n{\"tokens\":[\"b\"],\"bunsetsu\":[[0,2]]}\n");
  std::vector<AnnotatedSentence> seen;
  try {
    corpus::for_each_annotated(in, "ja", [&](AnnotatedSentence&& s) { seen.push_back(s); });
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_EQ(seen.size(), 1u);
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("jasskit_corpus_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string write(const std::string& name, const std::string& text) {
    const auto p = (dir_ / name).string();
    std::ofstream(p) << text;
    return p;
  }
  std::filesystem::path dir_;
};

using CorpusFiles = TempDir;

TEST_F(CorpusFiles, ParallelNeedsEqualLengths) {
  const auto src = write("s.txt", "a b\nc d\n");
  const auto tgt = write("t.txt", "x\n");
  EXPECT_THROW(corpus::read_parallel_files(src, tgt, "ja", "en"), ParseError);
  const auto tgt2 = write("t2.txt", "x\ny z\n");
  const auto pairs = corpus::read_parallel_files(src, tgt2, "ja", "en");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].tgt.tokens, (std::vector<std::string>{"y", "z"}));
  EXPECT_THROW(corpus::read_parallel_files(src, tgt2, "en", "en"), Error);
}

TEST_F(CorpusFiles, ExtensionSelectsFormat) {
  const auto j = write("c.jsonl", R"({"lang":"ja","tokens":["a","b"],"bunsetsu":[[0,2]]})" "\n");
  const auto p = write("c.txt", "a b\n");
  EXPECT_TRUE(corpus::read_corpus_file(j, "en")[0].has_bunsetsu());
  EXPECT_EQ(corpus::read_corpus_file(p, "en")[0].lang, "en");
  EXPECT_THROW(corpus::read_corpus_file((dir_ / "missing").string(), "en"), Error);
}

TEST_F(CorpusFiles, WriteThenRead) {
  Rng rng(3);
  std::vector<AnnotatedSentence> c;
  for (int i = 0; i < 50; ++i) c.push_back(testing::random_annotated(rng));
  std::ostringstream out;
  corpus::write_annotated(out, c);
  const auto path = write("w.jsonl", out.str());
  EXPECT_EQ(corpus::read_annotated_file(path), c);
}

}  // namespace
}  // namespace jasskit
