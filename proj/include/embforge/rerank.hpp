// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace embforge {

/// Teacher relevance for one (query, document) pair. Scores are arbitrary
/// reals; no range is assumed.
struct PairScore {
  std::string query_id;
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const PairScore&, const PairScore&) = default;
};

/// Reranker scores keyed by (query id, doc id).
class ScoreSet {
 public:
  /// Throws ValidationError naming the pair when it is already present, or
  /// when the score is not finite.
  void insert(const PairScore& s);
  /// Inserts or overwrites.
  void assign(const PairScore& s);

  /// nullopt when the pair is unknown; never a stand-in number.
  std::optional<double> find(std::string_view query_id, std::string_view doc_id) const;

  std::size_t size() const noexcept { return scores_.size(); }
  /// All entries in (query id, doc id) order.
  std::vector<PairScore> entries() const;

  friend bool operator==(const ScoreSet&, const ScoreSet&) = default;

 private:
  std::map<std::pair<std::string, std::string>, double> scores_;
};

/// Score file: {"query_id", "doc_id", "score"} per line.
ScoreSet load_scores(const std::filesystem::path& path);
/// Writes entries in (query id, doc id) order.
void save_scores(const std::filesystem::path& path, const ScoreSet& set);

inline std::optional<double> score(const ScoreSet& set, std::string_view query_id, std::string_view doc_id) {
  return set.find(query_id, doc_id);
}

struct TextPair {
  std::string query;
  std::string doc;

  friend auto operator<=>(const TextPair&, const TextPair&) = default;
};

struct RerankClientOptions {
  /// Largest batch sent in one request. A server may lower it by answering
  /// 413 with {"max_batch_size": n}.
  std::size_t max_batch = 64;
  /// Total attempts per batch on transport failure (>= 1).
  int attempts = 3;
  std::chrono::milliseconds backoff{100};
  std::chrono::seconds timeout{30};
};

/// Client for a cross-encoder scoring service.
///
/// Wire format, one POST per batch to the endpoint URL:
///   request  {"pairs": [{"query": "...", "doc": "..."}, ...]}
///   response {"scores": [number, ...]}   same length and order
/// A non-2xx status raises TransportError (retried up to `attempts`); a
/// malformed body or a length mismatch raises ProtocolError.
///
/// Every returned score is cached by text pair. Concurrent callers asking
/// for the same pair share a single upstream request.
class RerankClient {
 public:
  explicit RerankClient(std::string endpoint, RerankClientOptions options = {});
  RerankClient(const RerankClient&) = delete;
  RerankClient& operator=(const RerankClient&) = delete;

  std::vector<double> request_scores(std::span<const TextPair> pairs);

  /// Number of HTTP requests sent so far.
  std::size_t upstream_calls() const noexcept { return upstream_calls_.load(); }
  std::size_t batch_limit() const;
  std::optional<double> cached(const TextPair& pair) const;
  std::size_t cache_size() const;

  /// Cache file: {"query", "doc", "score"} per line, sorted by pair.
  void save_cache(const std::filesystem::path& path) const;
  void load_cache(const std::filesystem::path& path);

 private:
  std::vector<double> fetch(std::span<const TextPair> batch);
  std::vector<double> post_once(std::span<const TextPair> batch);

  std::string base_;
  std::string path_;
  RerankClientOptions options_;
  std::atomic<std::size_t> upstream_calls_{0};

  mutable std::mutex mu_;
  std::map<TextPair, double> cache_;
  std::map<TextPair, std::shared_future<double>> inflight_;
};

}  // namespace embforge
