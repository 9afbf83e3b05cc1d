// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/forge.hpp"

#include <stdexcept>
#include <utility>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"
#include "embforge/rerank.hpp"

namespace embforge {

// ---------------------------------------------------------------------------
// NLI -> STS

std::vector<StsRecord> convert_nli(std::span<const NliRecord> records, double high, double low) {
  if (!(low >= 0.0 && high <= 1.0 && low < high)) {
    throw std::invalid_argument("convert_nli: need 0 <= low < high <= 1");
  }
  std::vector<StsRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const NliRecord& r = records[i];
    if (r.label == "entailment") {
      out.push_back({r.premise, r.hypothesis, high, std::nullopt});
    } else if (r.label == "contradiction") {
      out.push_back({r.premise, r.hypothesis, low, std::nullopt});
    } else if (r.label != "neutral") {
      throw ValidationError("NLI record " + std::to_string(i + 1) + " has unknown label '" + r.label + "'");
    }
  }
  return out;
}

void attach_soft_scores(std::span<StsRecord> records, RerankClient& teacher) {
  std::vector<TextPair> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) {
    pairs.push_back({r.sentence_a, r.sentence_b});
  }
  const auto scores = teacher.request_scores(pairs);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].soft_score = scores[i];
  }
}

std::vector<NliRecord> load_nli(const std::filesystem::path& path) {
  std::vector<NliRecord> out;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    out.push_back({jsonl::require_string(rec, "premise"), jsonl::require_string(rec, "hypothesis"),
                   jsonl::require_string(rec, "label")});
  });
  return out;
}

void save_sts(const std::filesystem::path& path, std::span<const StsRecord> records) {
  std::vector<jsonl::Json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    jsonl::Json line{{"sentence_a", r.sentence_a}, {"sentence_b", r.sentence_b}, {"similarity", r.similarity}};
    if (r.soft_score) {
      line["soft_score"] = *r.soft_score;
    }
    lines.push_back(std::move(line));
  }
  jsonl::write_lines(path, lines);
}

// ---------------------------------------------------------------------------
// Instructions

std::string_view to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::kRetrieval:
      return "retrieval";
    case TaskKind::kReranking:
      return "reranking";
    case TaskKind::kClassification:
      return "classification";
    case TaskKind::kClustering:
      return "clustering";
    case TaskKind::kSts:
      return "sts";
  }
  return "retrieval";
}

TaskKind task_kind_from_string(std::string_view name) {
  for (TaskKind k : {TaskKind::kRetrieval, TaskKind::kReranking, TaskKind::kClassification, TaskKind::kClustering,
                     TaskKind::kSts}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw ValidationError("unknown task kind '" + std::string(name) + "'");
}

InstructionRegistry InstructionRegistry::builtin() {
  using K = TaskKind;
  InstructionRegistry r;
  const auto add = [&r](const char* task, const char* instruction, TaskKind kind) {
    r.entries_.emplace(task, Entry{instruction, kind});
  };
  add("ArguAna", "Given a claim, find documents that refute the claim.", K::kRetrieval);
  add("ELI5", "Provided a user question, retrieve the highest voted answers on Reddit ELI5 forum.", K::kRetrieval);
  add("FEVER", "Given a claim, retrieve documents that support or refute the claim.", K::kRetrieval);
  add("FiQA2018", "Given a financial question, retrieve user replies that best answer the question.",
      K::kRetrieval);
  add("HotpotQA", "Given a multi-hop question, retrieve documents that can help answer the question.",
      K::kRetrieval);
  add("MSMARCO", "Given a web search query, retrieve relevant passages that answer the query.", K::kRetrieval);
  add("Natural Question", "Given a question, retrieve Wikipedia passages that answer the question.",
      K::kRetrieval);
  add("QuoraDupQuestion", "Given a question, retrieve questions that are semantically equivalent to the given question.",
      K::kRetrieval);
  add("SQuAD", "Given a question, retrieve passages that answer the question", K::kRetrieval);
  add("STS12", "Retrieve semantically similar text.", K::kSts);
  add("STS22", "Retrieve semantically similar text.", K::kSts);
  add("STSBenchmark", "Retrieve semantically similar text.", K::kSts);
  add("AmazonCounterfactualClassification",
      "Classify a given Amazon customer review text as either counterfactual or not-counterfactual.",
      K::kClassification);
  add("AmazonReviewsClassification", "Classify the given Amazon review into its appropriate rating category.",
      K::kClassification);
  add("Banking77Classification", "Given a online banking query, find the corresponding intents.",
      K::kClassification);
  add("EmotionClassification",
      "Classify the emotion expressed in the given Twitter message into one of the six emotions: anger, fear, "
      "joy, love, sadness, and surprise.",
      K::kClassification);
  add("ImdbClassification", "Classify the sentiment expressed in the given movie review text from the IMDB dataset.",
      K::kClassification);
  add("MTOPIntentClassification", "Classify the intent of the given utterance in task-oriented conversation.",
      K::kClassification);
  add("ToxicConversationsClassification", "Classify the given comments as either toxic or not toxic.",
      K::kClassification);
  add("TweetSentimentExtractionClassification",
      "Classify the sentiment of a given tweet as either positive, negative, or neutral.", K::kClassification);
  add("ArxivClusteringP2P",
      "Identify the main and secondary category of Arxiv papers based on the titles and abstracts.",
      K::kClustering);
  add("ArxivClusteringS2S", "Identify the main and secondary category of Arxiv papers based on the titles.",
      K::kClustering);
  add("BiorxivClusteringP2P", "Identify the main category of Biorxiv papers based on the titles and abstracts.",
      K::kClustering);
  add("BiorxivClusteringS2S", "Identify the main category of Biorxiv papers based on the titles.", K::kClustering);
  add("MedrxivClusteringP2P", "Identify the main category of Medrxiv papers based on the titles and abstracts.",
      K::kClustering);
  add("MedrxivClusteringS2S", "Identify the main category of Medrxiv papers based on the titles.", K::kClustering);
  add("RedditClustering", "Identify the topic or theme of Reddit posts based on the titles.", K::kClustering);
  add("RedditClusteringS2S", "Identify the topic or theme of Reddit posts based on the titles and posts.",
      K::kClustering);
  add("StackexchangeClustering", "Identify the topic or theme of StackExchange posts based on the titles.",
      K::kClustering);
  add("StackexchangeClusteringP2P", "Identify the topic or theme of StackExchange posts based on the given paragraphs.",
      K::kClustering);
  add("TwentyNewsgroupsClustering", "Identify the topic or theme of the given news articles.", K::kClustering);
  add("SciDocsRR", "Given a title of a scientific paper, retrieve the titles of other relevant papers.",
      K::kReranking);
  add("StackOverflowDupQuestions", "Retrieve duplicate questions from StackOverflow forum.", K::kReranking);
  return r;
}

const std::string& InstructionRegistry::instruction_for(std::string_view task) const {
  auto it = entries_.find(task);
  if (it == entries_.end()) {
    std::string known;
    for (const auto& [name, entry] : entries_) {
      known += known.empty() ? name : ", " + name;
    }
    throw ValidationError("unknown task '" + std::string(task) + "'; known tasks: " + known);
  }
  return it->second.instruction;
}

TaskKind InstructionRegistry::kind_of(std::string_view task) const {
  instruction_for(task);
  return entries_.find(task)->second.kind;
}

std::vector<std::string> InstructionRegistry::tasks() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) {
    out.push_back(name);
  }
  return out;
}

void InstructionRegistry::set(std::string task, std::string instruction, std::optional<TaskKind> kind) {
  auto it = entries_.find(task);
  if (it == entries_.end()) {
    entries_.emplace(std::move(task), Entry{std::move(instruction), kind.value_or(TaskKind::kRetrieval)});
    return;
  }
  it->second.instruction = std::move(instruction);
  if (kind) {
    it->second.kind = *kind;
  }
}

void InstructionRegistry::merge_overrides(const std::filesystem::path& path) {
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    std::optional<TaskKind> kind;
    if (auto it = rec.find("kind"); it != rec.end()) {
      if (!it->is_string()) {
        throw std::invalid_argument("field 'kind' must be a string");
      }
      kind = task_kind_from_string(it->get<std::string>());
    }
    set(jsonl::require_string(rec, "task"), jsonl::require_string(rec, "instruction"), kind);
  });
}

// ---------------------------------------------------------------------------
// Prompts

std::string format_prompt(std::string_view instruction, std::span<const Shot> shots, std::string_view query,
                          std::string_view eos_marker) {
  std::string out;
  for (const Shot& shot : shots) {
    out.append("Instruct: ").append(instruction);
    out.append("\nQuery: ").append(shot.query);
    out.append("\nResponse: ").append(shot.passage);
    out.append("\n\n");
  }
  out.append("Instruct: ").append(instruction);
  out.append("\nQuery: ").append(query);
  out.append(eos_marker);
  return out;
}

std::span<const Shot> PromptOptions::shots_for(std::string_view task) const {
  auto it = shots.find(task);
  if (it == shots.end()) {
    return {};
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Training records

namespace {

double soft_score_of(const TeacherCandidate& c, SoftScoreSource source) {
  if (source == SoftScoreSource::kRerankerRaw) {
    if (auto it = c.channels.find(Channel::kReranker); it != c.channels.end()) {
      return it->second.score;
    }
  }
  return c.fused_score;
}

}  // namespace

std::vector<TrainingRecord> emit_training_records(std::span<const LabeledPair> pairs, const QuerySet& queries,
                                                  const Corpus& corpus, std::span<const MinedNegatives> mined,
                                                  std::span<const TeacherScoreSet> teacher,
                                                  const InstructionRegistry& registry, const EmitOptions& options) {
  std::map<std::pair<std::string_view, std::string_view>, const MinedNegatives*> mined_by_pair;
  for (const auto& m : mined) {
    if (!mined_by_pair.emplace(std::make_pair(std::string_view(m.query_id), std::string_view(m.positive_id)), &m)
             .second) {
      throw ValidationError("duplicate mined entry for (" + m.query_id + ", " + m.positive_id + ")");
    }
  }
  std::map<std::string_view, const TeacherScoreSet*> teacher_by_query;
  for (const auto& t : teacher) {
    teacher_by_query.emplace(t.query_id, &t);
  }
  const auto doc_text = [&](std::string_view id) -> const std::string& {
    const Document* d = corpus.find(id);
    if (d == nullptr) {
      throw ValidationError("document '" + std::string(id) + "' is not in the corpus");
    }
    return d->text;
  };

  std::vector<TrainingRecord> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    const Query* q = queries.find(pair.query_id);
    if (q == nullptr) {
      throw ValidationError("query '" + pair.query_id + "' is not in the query set");
    }
    TrainingRecord rec;
    rec.task = q->task;
    rec.instruction = registry.instruction_for(q->task);
    rec.query = q->text;
    rec.positive = doc_text(pair.positive_id);
    rec.prompt = format_prompt(rec.instruction, options.prompt.shots_for(q->task), q->text, options.prompt.eos_marker);

    const TeacherScoreSet* t = nullptr;
    if (auto it = teacher_by_query.find(pair.query_id); it != teacher_by_query.end()) {
      t = it->second;
    }
    const MinedNegatives* m = nullptr;
    if (auto it = mined_by_pair.find({pair.query_id, pair.positive_id}); it != mined_by_pair.end()) {
      m = it->second;
    }

    if (t != nullptr) {
      if (const TeacherCandidate* c = t->find(pair.positive_id)) {
        rec.positive_soft_score = soft_score_of(*c, options.soft_scores);
      }
    }
    if (!rec.positive_soft_score && m != nullptr) {
      rec.positive_soft_score = m->positive_score;
    }

    if (m == nullptr) {
      if (registry.kind_of(q->task) == TaskKind::kRetrieval) {
        throw ValidationError("no mined negatives for retrieval pair (" + pair.query_id + ", " + pair.positive_id +
                              ")");
      }
    } else {
      if (m->negatives.size() > options.num_negatives) {
        throw ValidationError("mined entry for (" + pair.query_id + ", " + pair.positive_id + ") has " +
                              std::to_string(m->negatives.size()) + " negatives, more than the configured " +
                              std::to_string(options.num_negatives));
      }
      rec.shortfall = m->shortfall;
      for (const auto& n : m->negatives) {
        double s = n.score;
        if (t != nullptr) {
          if (const TeacherCandidate* c = t->find(n.doc_id)) {
            s = soft_score_of(*c, options.soft_scores);
          }
        }
        rec.negatives.push_back({doc_text(n.doc_id), s});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<TrainingRecord> records_from_pairs(std::span<const QueryPositive> pairs,
                                               const InstructionRegistry& registry, const PromptOptions& options) {
  std::vector<TrainingRecord> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    TrainingRecord rec;
    rec.task = p.source_task;
    rec.instruction = registry.instruction_for(p.source_task);
    rec.query = p.query;
    rec.positive = p.positive;
    rec.prompt = format_prompt(rec.instruction, options.shots_for(p.source_task), p.query, options.eos_marker);
    out.push_back(std::move(rec));
  }
  return out;
}

nlohmann::json training_record_to_json(const TrainingRecord& r) {
  nlohmann::json negatives = nlohmann::json::array();
  for (const auto& n : r.negatives) {
    negatives.push_back({{"text", n.text}, {"score", n.score}});
  }
  return {{"task", r.task},
          {"instruction", r.instruction},
          {"query", r.query},
          {"positive", r.positive},
          {"positive_soft_score", r.positive_soft_score ? nlohmann::json(*r.positive_soft_score) : nlohmann::json()},
          {"negatives", std::move(negatives)},
          {"prompt", r.prompt},
          {"shortfall", r.shortfall}};
}

TrainingRecord training_record_from_json(const nlohmann::json& record) {
  TrainingRecord r;
  r.task = jsonl::require_string(record, "task");
  r.instruction = jsonl::require_string(record, "instruction");
  r.query = jsonl::require_string(record, "query");
  r.positive = jsonl::require_string(record, "positive");
  if (auto it = record.find("positive_soft_score"); it != record.end() && !it->is_null()) {
    r.positive_soft_score = jsonl::require_number(record, "positive_soft_score");
  }
  if (auto it = record.find("negatives"); it != record.end()) {
    for (const auto& n : *it) {
      r.negatives.push_back({jsonl::require_string(n, "text"), jsonl::require_number(n, "score")});
    }
  }
  r.prompt = jsonl::require_string(record, "prompt");
  r.shortfall = record.value("shortfall", false);
  return r;
}

void save_training_records(const std::filesystem::path& path, std::span<const TrainingRecord> records) {
  std::vector<nlohmann::json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    lines.push_back(training_record_to_json(r));
  }
  jsonl::write_lines(path, lines);
}

std::vector<TrainingRecord> load_training_records(const std::filesystem::path& path) {
  std::vector<TrainingRecord> out;
  jsonl::for_each_record(path,
                         [&](const nlohmann::json& rec, std::size_t) { out.push_back(training_record_from_json(rec)); });
  return out;
}

}  // namespace embforge
