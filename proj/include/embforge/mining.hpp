// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "embforge/fusion.hpp"

namespace embforge {

/// Which teacher number drives the margin filter.
enum class TeacherSignal { kFused, kReranker };

std::string_view to_string(TeacherSignal signal) noexcept;
TeacherSignal teacher_signal_from_string(std::string_view name);

struct MiningConfig {
  double margin = 0.95;
  std::size_t top_k = 30;
  std::size_t num_negatives = 7;
  std::uint64_t seed = 0;
  TeacherSignal signal = TeacherSignal::kFused;

  /// Throws std::invalid_argument unless 0 < margin <= 1, top_k >= 1,
  /// 1 <= num_negatives <= top_k.
  void validate() const;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

struct MinedNegatives {
  std::string query_id;
  std::string positive_id;
  double positive_score = 0.0;
  double threshold = 0.0;
  std::vector<ScoredDoc> negatives;
  bool shortfall = false;
  /// Per-query generator seed actually used (see query_seed).
  std::uint64_t seed = 0;

  friend bool operator==(const MinedNegatives&, const MinedNegatives&) = default;
};

/// Largest teacher score a negative may carry: positive_score * margin.
/// Throws std::invalid_argument unless margin is in (0, 1].
double margin_threshold(double positive_score, double margin);

/// Teacher scores of every candidate under `signal`, best first (ties by doc
/// id). With kReranker, candidates that have no reranker score are left out.
std::vector<ScoredDoc> teacher_scores(const TeacherScoreSet& set, TeacherSignal signal);

/// Margin filter. Drops the positive, every id in `exclude`, and every
/// candidate scoring strictly above margin_threshold(positive_score, margin);
/// a candidate exactly at the threshold survives. When `positive_score` is
/// not given it is looked up in `candidates`; ValidationError if absent.
std::vector<ScoredDoc> filter_candidates(std::span<const ScoredDoc> candidates, std::string_view positive_id,
                                         std::optional<double> positive_score, double margin,
                                         const std::set<std::string, std::less<>>& exclude = {});

/// Generator seed for one query, derived from the global seed and the query
/// id only, so it does not depend on processing order or partitioning.
std::uint64_t query_seed(std::uint64_t seed, std::string_view query_id);

/// Keeps the first top_k of `filtered` (already best first), then draws
/// num_negatives of them uniformly without replacement. Drawn negatives are
/// returned in their original order. With fewer survivors than
/// num_negatives, all are returned and `shortfall` is set.
MinedNegatives sample_negatives(std::span<const ScoredDoc> filtered, const MiningConfig& config,
                                std::string_view query_id, std::string_view positive_id, double positive_score);

nlohmann::json mined_to_json(const MinedNegatives& m);
MinedNegatives mined_from_json(const nlohmann::json& record);
void save_mined(const std::filesystem::path& path, std::span<const MinedNegatives> mined);
std::vector<MinedNegatives> load_mined(const std::filesystem::path& path);

}  // namespace embforge
