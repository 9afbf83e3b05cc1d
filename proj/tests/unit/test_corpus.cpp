// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "embforge/corpus.hpp"
#include "embforge/error.hpp"
#include "helpers.hpp"

using namespace embforge;
using embforge::testing::TempDir;
using embforge::testing::write_file;

TEST_CASE("load_corpus reads ids, optional titles and text") {
  TempDir dir;
  write_file(dir / "c.jsonl",
             "{\"id\":\"b\",\"title\":\"T\",\"text\":\"beta\"}\n\n{\"id\":\"a\",\"text\":\"alpha\",\"title\":null}\n");
  const Corpus c = load_corpus(dir / "c.jsonl");
  REQUIRE(c.size() == 2);
  CHECK(c.at("b").title == std::optional<std::string>("T"));
  CHECK_FALSE(c.at("a").title.has_value());
  CHECK(c.find("zzz") == nullptr);
  CHECK_THROWS_AS(c.at("zzz"), ValidationError);
}

TEST_CASE("load_corpus reports the line of a bad record") {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"b\",\"text\":\"   \"}\n");
  try {
    load_corpus(dir / "c.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  write_file(dir / "d.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\nnot json\n");
  CHECK_THROWS_AS(load_corpus(dir / "d.jsonl"), ParseError);
  write_file(dir / "e.jsonl", "{\"id\":\"a\"}\n");
  CHECK_THROWS_AS(load_corpus(dir / "e.jsonl"), ParseError);
}

TEST_CASE("duplicate document ids are rejected, naming both lines") {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
  try {
    load_corpus(dir / "c.jsonl");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("'a'") != std::string::npos);
  }
}

TEST_CASE("qrels require integer labels >= 1") {
  TempDir dir;
  write_file(dir / "q.jsonl", "{\"query_id\":\"q\",\"doc_id\":\"d\",\"label\":2}\n");
  CHECK(load_qrels(dir / "q.jsonl").at(0).label == 2);
  write_file(dir / "bad.jsonl", "{\"query_id\":\"q\",\"doc_id\":\"d\",\"label\":0}\n");
  CHECK_THROWS_AS(load_qrels(dir / "bad.jsonl"), ParseError);
}

TEST_CASE("pair expansion yields one record per positive") {
  const std::vector<RawPair> raw{{"A", {"A1", "A2"}, "MSMARCO"}};
  const auto out = expand_pairs(raw);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == QueryPositive{"A", "A1", "MSMARCO"});
  CHECK(out[1] == QueryPositive{"A", "A2", "MSMARCO"});
}

TEST_CASE("pairs file with no positives is rejected") {
  TempDir dir;
  write_file(dir / "p.jsonl", "{\"query\":\"A\",\"positives\":[],\"task\":\"t\"}\n");
  CHECK_THROWS_AS(load_pairs(dir / "p.jsonl"), ParseError);
}

TEST_CASE("dedup keeps the first occurrence under NFC and trimming") {
  const std::vector<QueryPositive> in{{"q", "p", "t1"}, {" q", "p ", "t2"}, {"q", "P", "t3"}, {"Cafe\xCC\x81", "x", "t"},
                                      {"Caf\xC3\xA9", "x", "t"}};
  const auto out = dedup(in);
  REQUIRE(out.size() == 3);
  CHECK(out[0].source_task == "t1");
  CHECK(out[1].positive == "P");
}

TEST_CASE("dedup is idempotent and order-preserving on random data") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> pick(0, 40);
  const char* pads[] = {"", " ", "\t", "  "};
  std::vector<QueryPositive> in;
  for (int i = 0; i < 1000; ++i) {
    in.push_back({std::string(pads[rng() % 4]) + "q" + std::to_string(pick(rng)),
                  "p" + std::to_string(pick(rng)) + pads[rng() % 4], "t"});
  }
  const auto once = dedup(in);
  CHECK(dedup(once) == once);
  CHECK(once.size() < in.size());
  // Output is a subsequence of the input.
  std::size_t j = 0;
  for (const auto& r : in) {
    if (j < once.size() && r == once[j]) ++j;
  }
  CHECK(j == once.size());
}

TEST_CASE("query positives round-trip through JSONL") {
  TempDir dir;
  const std::vector<QueryPositive> in{{"q\n1", "p \"x\"", "SQuAD"}, {"q2", "p2", "MSMARCO"}};
  save_query_positives(dir / "qp.jsonl", in);
  CHECK(load_query_positives(dir / "qp.jsonl") == in);
}
