// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/corpus.hpp"

#include <set>
#include <stdexcept>
#include <utility>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"
#include "embforge/text.hpp"

namespace embforge {

template <typename Record>
Store<Record>::Store(std::vector<Record> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto [it, inserted] = by_id_.emplace(records_[i].id, i);
    if (!inserted) {
      throw ValidationError("duplicate id '" + records_[i].id + "'");
    }
  }
}

template <typename Record>
const Record* Store<Record>::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

template <typename Record>
const Record& Store<Record>::at(std::string_view id) const {
  if (const Record* r = find(id)) {
    return *r;
  }
  throw ValidationError("unknown id '" + std::string(id) + "'");
}

template class Store<Document>;
template class Store<Query>;

namespace {

// Duplicate ids are reported with both line numbers.
template <typename Record>
void check_unique(std::map<std::string, std::size_t>& seen, const Record& r, const std::filesystem::path& path,
                  std::size_t line) {
  auto [it, inserted] = seen.emplace(r.id, line);
  if (!inserted) {
    throw ParseError(path.string(), line,
                     "duplicate id '" + r.id + "' (first seen on line " + std::to_string(it->second) + ")");
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::map<std::string, std::size_t> seen;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t line) {
    Document d;
    d.id = jsonl::require_string(rec, "id");
    d.text = jsonl::require_string(rec, "text");
    if (auto it = rec.find("title"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw std::invalid_argument("field 'title' must be a string");
      }
      d.title = it->get<std::string>();
    }
    if (text::trim(d.text).empty()) {
      throw std::invalid_argument("document '" + d.id + "' has empty text");
    }
    check_unique(seen, d, path, line);
    docs.push_back(std::move(d));
  });
  return Corpus(std::move(docs));
}

QuerySet load_queries(const std::filesystem::path& path) {
  std::vector<Query> queries;
  std::map<std::string, std::size_t> seen;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t line) {
    Query q{jsonl::require_string(rec, "id"), jsonl::require_string(rec, "text"),
            jsonl::require_string(rec, "task")};
    check_unique(seen, q, path, line);
    queries.push_back(std::move(q));
  });
  return QuerySet(std::move(queries));
}

std::vector<Qrel> load_qrels(const std::filesystem::path& path) {
  std::vector<Qrel> qrels;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    auto it = rec.find("label");
    if (it == rec.end() || !it->is_number_integer()) {
      throw std::invalid_argument("field 'label' must be an integer");
    }
    const auto label = it->get<long long>();
    if (label < 1) {
      throw std::invalid_argument("label must be >= 1");
    }
    qrels.push_back({jsonl::require_string(rec, "query_id"), jsonl::require_string(rec, "doc_id"),
                     static_cast<int>(label)});
  });
  return qrels;
}

std::vector<RawPair> load_pairs(const std::filesystem::path& path) {
  std::vector<RawPair> pairs;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    RawPair p{jsonl::require_string(rec, "query"), jsonl::require_string_array(rec, "positives"),
              jsonl::require_string(rec, "task")};
    if (p.positives.empty()) {
      throw std::invalid_argument("'positives' must not be empty");
    }
    pairs.push_back(std::move(p));
  });
  return pairs;
}

std::vector<QueryPositive> expand_pairs(std::span<const RawPair> pairs) {
  std::vector<QueryPositive> out;
  for (const auto& p : pairs) {
    for (const auto& positive : p.positives) {
      out.push_back({p.query, positive, p.source_task});
    }
  }
  return out;
}

std::vector<QueryPositive> dedup(std::span<const QueryPositive> records) {
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<QueryPositive> out;
  for (const auto& r : records) {
    if (seen.emplace(text::normalize_key(r.query), text::normalize_key(r.positive)).second) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<QueryPositive> load_query_positives(const std::filesystem::path& path) {
  std::vector<QueryPositive> out;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    out.push_back({jsonl::require_string(rec, "query"), jsonl::require_string(rec, "positive"),
                   jsonl::require_string(rec, "task")});
  });
  return out;
}

void save_query_positives(const std::filesystem::path& path, std::span<const QueryPositive> records) {
  std::vector<jsonl::Json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    lines.push_back({{"query", r.query}, {"positive", r.positive}, {"task", r.source_task}});
  }
  jsonl::write_lines(path, lines);
}

}  // namespace embforge
