// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <random>

#include "embforge/error.hpp"
#include "embforge/fusion.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace embforge;
using embforge::testing::TempDir;

namespace {

RankedList list_of(Channel c, const std::vector<std::string>& ids) {
  RankedList l{c, {}};
  double s = static_cast<double>(ids.size());
  for (const auto& id : ids) l.entries.push_back({id, s--});
  return l;
}

std::vector<std::string> ids_of(const RankedList& l) {
  std::vector<std::string> out;
  for (const auto& e : l.entries) out.push_back(e.doc_id);
  return out;
}

}  // namespace

TEST_CASE("ranks (1, 2, 1) with k = 60") {
  const std::vector<RankedList> lists{list_of(Channel::kLexical, {"x", "y"}), list_of(Channel::kSemantic, {"y", "x"}),
                                      list_of(Channel::kReranker, {"x"})};
  const RankedList fused = rrf_fuse(lists);
  CHECK(fused.channel == Channel::kFused);
  REQUIRE(fused.entries.at(0).doc_id == "x");
  CHECK(std::abs(fused.entries[0].score - (1.0 / 61 + 1.0 / 62 + 1.0 / 61)) <= 1e-12);
  CHECK(std::abs(fused.entries[0].score - 0.048916) <= 1e-6);
}

TEST_CASE("matches the brute-force oracle on random lists") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int pool = 3 + static_cast<int>(rng() % 20);
    std::vector<std::string> all;
    for (int i = 0; i < pool; ++i) all.push_back("d" + std::to_string(i));
    std::vector<RankedList> lists;
    std::vector<std::vector<std::string>> raw;
    const int nlists = 1 + static_cast<int>(rng() % 5);
    for (int l = 0; l < nlists; ++l) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<std::string> ids(all.begin(), all.begin() + 1 + static_cast<long>(rng() % all.size()));
      raw.push_back(ids);
      lists.push_back(list_of(Channel::kLexical, ids));
    }
    const double k = trial % 2 ? 60.0 : 1.0 + static_cast<double>(rng() % 100);
    const auto expected = oracle::rrf_brute_force(raw, k);
    const RankedList fused = rrf_fuse(lists, k);
    REQUIRE(fused.entries.size() == expected.size());
    for (const auto& e : fused.entries) CHECK(e.score == expected.at(e.doc_id));
    CHECK(std::is_sorted(fused.entries.begin(), fused.entries.end(), ranks_before) );
  }
}

TEST_CASE("fusion is invariant to list order and ignores raw scores") {
  auto a = list_of(Channel::kLexical, {"a", "b", "c"});
  auto b = list_of(Channel::kSemantic, {"c", "a"});
  auto c = list_of(Channel::kReranker, {"b", "d", "a"});
  const RankedList one = rrf_fuse(std::vector<RankedList>{a, b, c});
  const RankedList two = rrf_fuse(std::vector<RankedList>{c, a, b});
  CHECK(one.entries == two.entries);
  for (auto& e : a.entries) e.score *= 1000;
  CHECK(rrf_fuse(std::vector<RankedList>{a, b, c}).entries == one.entries);
}

TEST_CASE("a document absent from a list gets no term from it") {
  const RankedList fused = rrf_fuse(std::vector<RankedList>{list_of(Channel::kLexical, {"a"}),
                                                            list_of(Channel::kSemantic, {"b"})});
  REQUIRE(fused.entries.size() == 2);
  CHECK(fused.entries[0].score == 1.0 / 61);
  CHECK(ids_of(fused) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("invalid fusion input") {
  CHECK_THROWS_AS(rrf_fuse({}), std::invalid_argument);
  const std::vector<RankedList> one{list_of(Channel::kLexical, {"a"})};
  CHECK_THROWS_AS(rrf_fuse(one, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rrf_fuse(one, -5.0), std::invalid_argument);
  const std::vector<RankedList> dup{list_of(Channel::kLexical, {"a", "a"})};
  CHECK_THROWS_AS(rrf_fuse(dup), ValidationError);
}

TEST_CASE("teacher scores record per-channel hits") {
  const Query q{"q1", "text", "MSMARCO"};
  const auto lex = list_of(Channel::kLexical, {"a", "b"});
  const auto sem = list_of(Channel::kSemantic, {"b", "c"});
  RankedList rer{Channel::kReranker, {{"b", 0.9}, {"a", 0.4}, {"c", 0.1}}};
  const TeacherScoreSet t = build_teacher_scores(q, lex, sem, rer);
  CHECK(t.query_id == "q1");
  REQUIRE(t.candidates.size() == 3);
  CHECK(t.candidates[0].doc_id == "b");
  const TeacherCandidate* a = t.find("a");
  REQUIRE(a != nullptr);
  CHECK(a->channels.at(Channel::kLexical).rank == 1);
  CHECK(a->channels.at(Channel::kReranker).score == 0.4);
  CHECK(a->channels.count(Channel::kSemantic) == 0);
  CHECK(t.find("zz") == nullptr);
  CHECK_THROWS_AS(build_teacher_scores(q, sem, lex, rer), ValidationError);

  TempDir dir;
  save_teacher_scores(dir / "t.jsonl", std::vector<TeacherScoreSet>{t});
  CHECK(load_teacher_scores(dir / "t.jsonl").at(0) == t);
}

TEST_CASE("runs round-trip") {
  TempDir dir;
  const std::vector<QueryRun> runs{{"q1", list_of(Channel::kSemantic, {"a", "b"})},
                                   {"q2", RankedList{Channel::kReranker, {{"z", -0.5}}}}};
  save_runs(dir / "r.jsonl", runs);
  const auto back = load_runs(dir / "r.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].query_id == "q1");
  CHECK(back[0].list == runs[0].list);
  CHECK(back[1].list == runs[1].list);
}
