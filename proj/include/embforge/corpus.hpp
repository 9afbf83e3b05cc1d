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

namespace embforge {

struct Document {
  std::string id;
  std::optional<std::string> title;
  std::string text;
};

struct Query {
  std::string id;
  std::string text;
  std::string task;
};

/// Relevance judgment; `label` is at least 1.
struct Qrel {
  std::string query_id;
  std::string doc_id;
  int label = 1;
};

/// A query with one or more positives as found in raw training data.
struct RawPair {
  std::string query;
  std::vector<std::string> positives;
  std::string source_task;
};

/// A single (query, positive) training instance.
struct QueryPositive {
  std::string query;
  std::string positive;
  std::string source_task;

  friend bool operator==(const QueryPositive&, const QueryPositive&) = default;
};

/// Id-indexed collection with first-load order preserved.
template <typename Record>
class Store {
 public:
  Store() = default;
  explicit Store(std::vector<Record> records);

  const Record* find(std::string_view id) const;
  /// Throws ValidationError naming the id when absent.
  const Record& at(std::string_view id) const;

  std::span<const Record> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

 private:
  std::vector<Record> records_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
};

using Corpus = Store<Document>;
using QuerySet = Store<Query>;

extern template class Store<Document>;
extern template class Store<Query>;

/// Corpus file: {"id", "title"?, "text"} per line. Empty text (after trim)
/// or a repeated id raise errors naming the line or the id.
Corpus load_corpus(const std::filesystem::path& path);

/// Query file: {"id", "text", "task"} per line.
QuerySet load_queries(const std::filesystem::path& path);

/// Qrels file: {"query_id", "doc_id", "label" >= 1} per line, in file order.
std::vector<Qrel> load_qrels(const std::filesystem::path& path);

/// Pairs file: {"query", "positives": [...], "task"} per line.
std::vector<RawPair> load_pairs(const std::filesystem::path& path);

/// One QueryPositive per positive, in input order.
std::vector<QueryPositive> expand_pairs(std::span<const RawPair> pairs);

/// Drops records whose (normalize_key(query), normalize_key(positive)) was
/// already seen. First occurrence wins; relative order is kept.
std::vector<QueryPositive> dedup(std::span<const QueryPositive> records);

std::vector<QueryPositive> load_query_positives(const std::filesystem::path& path);
void save_query_positives(const std::filesystem::path& path, std::span<const QueryPositive> records);

}  // namespace embforge
