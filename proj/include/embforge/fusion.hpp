// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "embforge/corpus.hpp"
#include "embforge/ranked_list.hpp"

namespace embforge {

inline constexpr double kDefaultRrfK = 60.0;

/// Reciprocal Rank Fusion. Every document in any list scores
/// sum over the lists containing it of 1 / (k + rank), rank 1-based. A list
/// that does not contain the document adds nothing.
///
/// Each document's terms are added in ascending rank order, so the result
/// does not depend on the order of `lists`, and only list positions (never
/// raw scores) are read. Output is sorted score-descending, ties by doc id.
///
/// Throws std::invalid_argument on an empty collection or k <= 0, and
/// ValidationError on a repeated id inside one list.
RankedList rrf_fuse(std::span<const RankedList> lists, double k = kDefaultRrfK);

/// Raw score and 1-based rank of a candidate inside one channel.
struct ChannelHit {
  double score = 0.0;
  std::size_t rank = 0;

  friend bool operator==(const ChannelHit&, const ChannelHit&) = default;
};

struct TeacherCandidate {
  std::string doc_id;
  double fused_score = 0.0;
  std::map<Channel, ChannelHit> channels;

  friend bool operator==(const TeacherCandidate&, const TeacherCandidate&) = default;
};

/// Soft teacher labels for one query, fused-score descending.
struct TeacherScoreSet {
  std::string query_id;
  std::vector<TeacherCandidate> candidates;

  const TeacherCandidate* find(std::string_view doc_id) const;

  friend bool operator==(const TeacherScoreSet&, const TeacherScoreSet&) = default;
};

/// RRF over the three channels, keeping raw scores and ranks for audit.
/// Throws ValidationError when a list carries the wrong channel tag or a
/// repeated doc id.
TeacherScoreSet build_teacher_scores(const Query& query, const RankedList& lexical, const RankedList& semantic,
                                     const RankedList& reranker, double k = kDefaultRrfK);

/// {"query_id", "candidates": [{"doc_id", "score", "channels"?: {...}}]}
nlohmann::json teacher_to_json(const TeacherScoreSet& set);
TeacherScoreSet teacher_from_json(const nlohmann::json& record);

void save_teacher_scores(const std::filesystem::path& path, std::span<const TeacherScoreSet> sets);
std::vector<TeacherScoreSet> load_teacher_scores(const std::filesystem::path& path);

/// Run file: {"query_id", "channel", "entries": [{"doc_id", "score"}]} per
/// line, as produced by the index and rerank commands.
struct QueryRun {
  std::string query_id;
  RankedList list;
};
void save_runs(const std::filesystem::path& path, std::span<const QueryRun> runs);
std::vector<QueryRun> load_runs(const std::filesystem::path& path);

}  // namespace embforge
