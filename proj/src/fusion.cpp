// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"

namespace embforge {

RankedList rrf_fuse(std::span<const RankedList> lists, double k) {
  if (lists.empty()) {
    throw std::invalid_argument("rrf_fuse: no input lists");
  }
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw std::invalid_argument("rrf_fuse: k must be a positive finite constant");
  }
  std::map<std::string_view, std::vector<std::size_t>> ranks;
  for (const auto& list : lists) {
    require_unique_ids(list);
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      ranks[list.entries[i].doc_id].push_back(i + 1);
    }
  }
  std::vector<RankedEntry> fused;
  fused.reserve(ranks.size());
  for (auto& [doc, r] : ranks) {
    std::sort(r.begin(), r.end());
    double score = 0.0;
    for (std::size_t rank : r) {
      score += 1.0 / (k + static_cast<double>(rank));
    }
    fused.push_back({std::string(doc), score});
  }
  return make_ranked_list(Channel::kFused, std::move(fused));
}

const TeacherCandidate* TeacherScoreSet::find(std::string_view doc_id) const {
  auto it = std::find_if(candidates.begin(), candidates.end(),
                         [&](const TeacherCandidate& c) { return c.doc_id == doc_id; });
  return it == candidates.end() ? nullptr : &*it;
}

TeacherScoreSet build_teacher_scores(const Query& query, const RankedList& lexical, const RankedList& semantic,
                                     const RankedList& reranker, double k) {
  const std::array<const RankedList*, 3> channels{&lexical, &semantic, &reranker};
  const std::array<Channel, 3> expected{Channel::kLexical, Channel::kSemantic, Channel::kReranker};
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i]->channel != expected[i]) {
      throw ValidationError("query '" + query.id + "': expected a " + std::string(to_string(expected[i])) +
                            " list, got " + std::string(to_string(channels[i]->channel)));
    }
  }
  const std::array<RankedList, 3> lists{lexical, semantic, reranker};
  const RankedList fused = rrf_fuse(lists, k);

  std::map<std::string_view, std::map<Channel, ChannelHit>> hits;
  for (const RankedList* list : channels) {
    for (std::size_t i = 0; i < list->entries.size(); ++i) {
      hits[list->entries[i].doc_id][list->channel] = {list->entries[i].score, i + 1};
    }
  }
  TeacherScoreSet set{query.id, {}};
  set.candidates.reserve(fused.entries.size());
  for (const auto& e : fused.entries) {
    set.candidates.push_back({e.doc_id, e.score, hits[e.doc_id]});
  }
  return set;
}

nlohmann::json teacher_to_json(const TeacherScoreSet& set) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : set.candidates) {
    nlohmann::json item{{"doc_id", c.doc_id}, {"score", c.fused_score}};
    if (!c.channels.empty()) {
      nlohmann::json channels = nlohmann::json::object();
      for (const auto& [channel, hit] : c.channels) {
        channels[std::string(to_string(channel))] = {{"score", hit.score}, {"rank", hit.rank}};
      }
      item["channels"] = std::move(channels);
    }
    candidates.push_back(std::move(item));
  }
  return {{"query_id", set.query_id}, {"candidates", std::move(candidates)}};
}

TeacherScoreSet teacher_from_json(const nlohmann::json& record) {
  TeacherScoreSet set;
  set.query_id = jsonl::require_string(record, "query_id");
  auto it = record.find("candidates");
  if (it == record.end() || !it->is_array()) {
    throw std::invalid_argument("field 'candidates' must be an array");
  }
  for (const auto& item : *it) {
    TeacherCandidate c;
    c.doc_id = jsonl::require_string(item, "doc_id");
    c.fused_score = jsonl::require_number(item, "score");
    if (auto ch = item.find("channels"); ch != item.end()) {
      for (const auto& [name, hit] : ch->items()) {
        c.channels[channel_from_string(name)] = {jsonl::require_number(hit, "score"),
                                                 static_cast<std::size_t>(jsonl::require_number(hit, "rank"))};
      }
    }
    if (set.find(c.doc_id) != nullptr) {
      throw ValidationError("query '" + set.query_id + "': duplicate candidate '" + c.doc_id + "'");
    }
    set.candidates.push_back(std::move(c));
  }
  return set;
}

void save_teacher_scores(const std::filesystem::path& path, std::span<const TeacherScoreSet> sets) {
  std::vector<nlohmann::json> lines;
  lines.reserve(sets.size());
  for (const auto& s : sets) {
    lines.push_back(teacher_to_json(s));
  }
  jsonl::write_lines(path, lines);
}

std::vector<TeacherScoreSet> load_teacher_scores(const std::filesystem::path& path) {
  std::vector<TeacherScoreSet> out;
  jsonl::for_each_record(path, [&](const nlohmann::json& rec, std::size_t) { out.push_back(teacher_from_json(rec)); });
  return out;
}

void save_runs(const std::filesystem::path& path, std::span<const QueryRun> runs) {
  std::vector<nlohmann::json> lines;
  for (const auto& run : runs) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : run.list.entries) {
      entries.push_back({{"doc_id", e.doc_id}, {"score", e.score}});
    }
    lines.push_back({{"query_id", run.query_id},
                     {"channel", std::string(to_string(run.list.channel))},
                     {"entries", std::move(entries)}});
  }
  jsonl::write_lines(path, lines);
}

std::vector<QueryRun> load_runs(const std::filesystem::path& path) {
  std::vector<QueryRun> runs;
  jsonl::for_each_record(path, [&](const nlohmann::json& rec, std::size_t) {
    QueryRun run;
    run.query_id = jsonl::require_string(rec, "query_id");
    run.list.channel = channel_from_string(jsonl::require_string(rec, "channel"));
    auto it = rec.find("entries");
    if (it == rec.end() || !it->is_array()) {
      throw std::invalid_argument("field 'entries' must be an array");
    }
    for (const auto& e : *it) {
      run.list.entries.push_back({jsonl::require_string(e, "doc_id"), jsonl::require_number(e, "score")});
    }
    require_unique_ids(run.list);
    runs.push_back(std::move(run));
  });
  return runs;
}

}  // namespace embforge
