// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embforge/forge.hpp"
#include "embforge/fusion.hpp"
#include "embforge/lexical.hpp"
#include "embforge/mining.hpp"

namespace embforge {

struct LossConfig {
  double tau = 0.05;
  double tau_teacher = 0.05;
  double lambda = 0.5;
};

struct NliConfig {
  double high = 1.0;
  double low = 0.0;
};

/// Relative paths in a config file are resolved against the file's directory.
struct PathsConfig {
  std::filesystem::path corpus;
  std::filesystem::path queries;
  std::filesystem::path qrels;
  std::filesystem::path doc_vectors;
  std::filesystem::path query_vectors;
  std::optional<std::filesystem::path> reranker_scores;
  std::optional<std::string> reranker_endpoint;
  std::optional<std::filesystem::path> instructions;
  std::filesystem::path output_dir;
};

struct PipelineConfig {
  Bm25Params bm25;
  double rrf_k = kDefaultRrfK;
  /// Top-N taken from each of the lexical and semantic channels.
  std::size_t candidate_pool = 50;
  MiningConfig mining;
  SoftScoreSource soft_scores = SoftScoreSource::kRerankerRaw;
  LossConfig loss;
  NliConfig nli;
  PromptOptions prompt;
  PathsConfig paths;
  /// Missing reranker score: abort (strict) or drop the candidate.
  bool strict = true;
  std::size_t workers = 1;
};

/// Every problem found in `doc`, each prefixed with the dotted key it
/// concerns ("mining.margin: ..."). Empty means valid.
std::vector<std::string> validate_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
std::vector<std::string> validate_config(const std::filesystem::path& path);

/// Throws ValidationError listing every problem.
PipelineConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of everything that determines output bytes. `workers`
/// and `paths.output_dir` are left out.
nlohmann::json config_to_json(const PipelineConfig& config);
std::string config_hash(const PipelineConfig& config);

struct MineSummary {
  std::size_t queries = 0;
  std::size_t records = 0;
  std::size_t shortfalls = 0;
  std::size_t dropped_candidates = 0;
  std::filesystem::path manifest;
};

/// Output file names inside `paths.output_dir`.
inline constexpr const char* kTrainingRecordsFile = "training_records.jsonl";
inline constexpr const char* kMinedFile = "mined.jsonl";
inline constexpr const char* kTeacherScoresFile = "teacher_scores.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

/// Runs retrieval, reranking, fusion, mining and record emission for every
/// query, ordered by query id. Stage failures throw StageError; any output
/// written by the failed run is removed.
MineSummary run_mine(const PipelineConfig& config);

}  // namespace embforge
