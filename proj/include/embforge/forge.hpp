// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "embforge/corpus.hpp"
#include "embforge/fusion.hpp"
#include "embforge/mining.hpp"

namespace embforge {

class RerankClient;

// ---------------------------------------------------------------------------
// NLI -> STS

/// Raw NLI pair. `label` is validated by convert_nli.
struct NliRecord {
  std::string premise;
  std::string hypothesis;
  std::string label;
};

struct StsRecord {
  std::string sentence_a;
  std::string sentence_b;
  double similarity = 0.0;
  std::optional<double> soft_score;

  friend bool operator==(const StsRecord&, const StsRecord&) = default;
};

/// entailment -> similarity `high`, contradiction -> `low`, neutral dropped.
/// Order is preserved. Throws std::invalid_argument unless
/// 0 <= low < high <= 1, and ValidationError naming the 1-based record
/// index for any other label.
std::vector<StsRecord> convert_nli(std::span<const NliRecord> records, double high = 1.0, double low = 0.0);

/// Fills `soft_score` of every record with the teacher's score for
/// (sentence_a, sentence_b).
void attach_soft_scores(std::span<StsRecord> records, RerankClient& teacher);

std::vector<NliRecord> load_nli(const std::filesystem::path& path);
void save_sts(const std::filesystem::path& path, std::span<const StsRecord> records);

// ---------------------------------------------------------------------------
// Instructions

enum class TaskKind { kRetrieval, kReranking, kClassification, kClustering, kSts };

std::string_view to_string(TaskKind kind) noexcept;
TaskKind task_kind_from_string(std::string_view name);

/// Task name -> instruction text. Starts from the built-in table of training
/// tasks; entries may be added or overridden.
class InstructionRegistry {
 public:
  static InstructionRegistry builtin();

  /// Throws ValidationError listing every known task when `task` is unknown.
  const std::string& instruction_for(std::string_view task) const;
  TaskKind kind_of(std::string_view task) const;
  bool contains(std::string_view task) const { return entries_.find(task) != entries_.end(); }
  std::vector<std::string> tasks() const;

  /// Overwrites the instruction of an existing task (keeping its kind unless
  /// one is given) or adds a new one (retrieval unless a kind is given).
  void set(std::string task, std::string instruction, std::optional<TaskKind> kind = std::nullopt);

  /// File of {"task", "instruction", "kind"?} lines merged over the current
  /// entries.
  void merge_overrides(const std::filesystem::path& path);

 private:
  struct Entry {
    std::string instruction;
    TaskKind kind;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

inline const std::string& instruction_for(const InstructionRegistry& registry, std::string_view task) {
  return registry.instruction_for(task);
}

// ---------------------------------------------------------------------------
// Prompts

inline constexpr std::string_view kDefaultEosMarker = "</s>";

/// A demonstration (query, passage) pair.
struct Shot {
  std::string query;
  std::string passage;

  friend bool operator==(const Shot&, const Shot&) = default;
};

/// Renders
///
///   Instruct: {instruction}\nQuery: {shot query}\nResponse: {shot passage}
///
/// for each shot, each followed by one blank line, then
///
///   Instruct: {instruction}\nQuery: {query}{eos_marker}
std::string format_prompt(std::string_view instruction, std::span<const Shot> shots, std::string_view query,
                          std::string_view eos_marker = kDefaultEosMarker);

struct PromptOptions {
  std::string eos_marker{kDefaultEosMarker};
  std::map<std::string, std::vector<Shot>, std::less<>> shots;

  std::span<const Shot> shots_for(std::string_view task) const;
};

// ---------------------------------------------------------------------------
// Training records

struct SoftNegative {
  std::string text;
  double score = 0.0;

  friend bool operator==(const SoftNegative&, const SoftNegative&) = default;
};

struct TrainingRecord {
  std::string task;
  std::string instruction;
  std::string query;
  std::string positive;
  std::optional<double> positive_soft_score;
  std::vector<SoftNegative> negatives;
  std::string prompt;
  bool shortfall = false;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

/// A judged (query id, positive doc id) pair, usually one qrel line.
struct LabeledPair {
  std::string query_id;
  std::string positive_id;
};

/// Where record soft scores come from. kRerankerRaw uses a candidate's raw
/// reranker score and falls back to its fused score when the reranker did
/// not score it; kFused always uses the fused score.
enum class SoftScoreSource { kRerankerRaw, kFused };

struct EmitOptions {
  PromptOptions prompt;
  SoftScoreSource soft_scores = SoftScoreSource::kRerankerRaw;
  std::size_t num_negatives = 7;
};

/// Joins pairs with query and document text, mined negatives and teacher
/// scores. One record per pair, in pair order. Retrieval-task pairs must
/// have a mined entry; other task kinds get an empty negative list when
/// none exists. Unknown ids raise ValidationError naming the id.
std::vector<TrainingRecord> emit_training_records(std::span<const LabeledPair> pairs, const QuerySet& queries,
                                                  const Corpus& corpus, std::span<const MinedNegatives> mined,
                                                  std::span<const TeacherScoreSet> teacher,
                                                  const InstructionRegistry& registry, const EmitOptions& options);

/// Prompt-only records for text pairs (no negatives, no soft scores).
std::vector<TrainingRecord> records_from_pairs(std::span<const QueryPositive> pairs,
                                               const InstructionRegistry& registry, const PromptOptions& options);

nlohmann::json training_record_to_json(const TrainingRecord& r);
TrainingRecord training_record_from_json(const nlohmann::json& record);
void save_training_records(const std::filesystem::path& path, std::span<const TrainingRecord> records);
std::vector<TrainingRecord> load_training_records(const std::filesystem::path& path);

}  // namespace embforge
