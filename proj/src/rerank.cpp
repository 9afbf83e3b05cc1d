// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/rerank.hpp"

#include <httplib.h>

#include <cmath>
#include <stdexcept>
#include <thread>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"

namespace embforge {

// ---------------------------------------------------------------------------
// ScoreSet

namespace {

std::string pair_name(std::string_view query_id, std::string_view doc_id) {
  return "(" + std::string(query_id) + ", " + std::string(doc_id) + ")";
}

}  // namespace

void ScoreSet::insert(const PairScore& s) {
  if (!std::isfinite(s.score)) {
    throw ValidationError("non-finite score for pair " + pair_name(s.query_id, s.doc_id));
  }
  if (!scores_.emplace(std::make_pair(s.query_id, s.doc_id), s.score).second) {
    throw ValidationError("duplicate score for pair " + pair_name(s.query_id, s.doc_id));
  }
}

void ScoreSet::assign(const PairScore& s) {
  if (!std::isfinite(s.score)) {
    throw ValidationError("non-finite score for pair " + pair_name(s.query_id, s.doc_id));
  }
  scores_[std::make_pair(s.query_id, s.doc_id)] = s.score;
}

std::optional<double> ScoreSet::find(std::string_view query_id, std::string_view doc_id) const {
  auto it = scores_.find(std::make_pair(std::string(query_id), std::string(doc_id)));
  if (it == scores_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::vector<PairScore> ScoreSet::entries() const {
  std::vector<PairScore> out;
  out.reserve(scores_.size());
  for (const auto& [key, value] : scores_) {
    out.push_back({key.first, key.second, value});
  }
  return out;
}

ScoreSet load_scores(const std::filesystem::path& path) {
  ScoreSet set;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    const auto& q = jsonl::require_string(rec, "query_id");
    const auto& d = jsonl::require_string(rec, "doc_id");
    auto it = rec.find("score");
    if (it == rec.end() || !it->is_number() || !std::isfinite(it->get<double>())) {
      throw ValidationError("score for pair " + pair_name(q, d) + " is missing or not a finite number");
    }
    set.insert({q, d, it->get<double>()});
  });
  return set;
}

void save_scores(const std::filesystem::path& path, const ScoreSet& set) {
  std::vector<jsonl::Json> lines;
  for (const auto& s : set.entries()) {
    lines.push_back({{"query_id", s.query_id}, {"doc_id", s.doc_id}, {"score", s.score}});
  }
  jsonl::write_lines(path, lines);
}

// ---------------------------------------------------------------------------
// RerankClient

namespace {

struct BatchTooLarge {
  std::size_t limit;
};

}  // namespace

RerankClient::RerankClient(std::string endpoint, RerankClientOptions options) : options_(options) {
  if (options_.max_batch == 0 || options_.attempts < 1) {
    throw std::invalid_argument("rerank client: max_batch and attempts must be positive");
  }
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw std::invalid_argument("rerank endpoint must be an http(s) URL: '" + endpoint + "'");
  }
  const auto slash = endpoint.find('/', scheme + 3);
  base_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::size_t RerankClient::batch_limit() const {
  std::lock_guard lock(mu_);
  return options_.max_batch;
}

std::optional<double> RerankClient::cached(const TextPair& pair) const {
  std::lock_guard lock(mu_);
  auto it = cache_.find(pair);
  if (it == cache_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::size_t RerankClient::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

void RerankClient::save_cache(const std::filesystem::path& path) const {
  std::vector<jsonl::Json> lines;
  {
    std::lock_guard lock(mu_);
    for (const auto& [pair, value] : cache_) {
      lines.push_back({{"query", pair.query}, {"doc", pair.doc}, {"score", value}});
    }
  }
  jsonl::write_lines(path, lines);
}

void RerankClient::load_cache(const std::filesystem::path& path) {
  std::map<TextPair, double> loaded;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    TextPair pair{jsonl::require_string(rec, "query"), jsonl::require_string(rec, "doc")};
    const double value = jsonl::require_number(rec, "score");
    if (!loaded.emplace(std::move(pair), value).second) {
      throw std::invalid_argument("duplicate cached pair");
    }
  });
  std::lock_guard lock(mu_);
  for (auto& [pair, value] : loaded) {
    cache_.insert_or_assign(pair, value);
  }
}

std::vector<double> RerankClient::post_once(std::span<const TextPair> batch) {
  jsonl::Json body;
  auto& arr = body["pairs"] = jsonl::Json::array();
  for (const auto& p : batch) {
    arr.push_back({{"query", p.query}, {"doc", p.doc}});
  }

  httplib::Client http(base_);
  http.set_connection_timeout(options_.timeout);
  http.set_read_timeout(options_.timeout);
  http.set_write_timeout(options_.timeout);
  ++upstream_calls_;
  auto res = http.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw TransportError("rerank request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 413) {
    try {
      auto info = jsonl::Json::parse(res->body);
      if (auto it = info.find("max_batch_size"); it != info.end() && it->is_number_unsigned() &&
                                                 it->get<std::size_t>() > 0 && it->get<std::size_t>() < batch.size()) {
        throw BatchTooLarge{it->get<std::size_t>()};
      }
    } catch (const jsonl::Json::exception&) {
    }
    throw ProtocolError("rerank service rejected a batch of " + std::to_string(batch.size()) +
                        " without declaring a smaller max_batch_size");
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("rerank service answered HTTP " + std::to_string(res->status));
  }

  jsonl::Json reply;
  try {
    reply = jsonl::Json::parse(res->body);
  } catch (const jsonl::Json::parse_error& e) {
    throw ProtocolError(std::string("rerank response is not JSON: ") + e.what());
  }
  auto it = reply.find("scores");
  if (!reply.is_object() || it == reply.end() || !it->is_array()) {
    throw ProtocolError("rerank response lacks a 'scores' array");
  }
  if (it->size() != batch.size()) {
    throw ProtocolError("rerank response has " + std::to_string(it->size()) + " scores for " +
                        std::to_string(batch.size()) + " pairs");
  }
  std::vector<double> scores;
  scores.reserve(batch.size());
  for (const auto& v : *it) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ProtocolError("rerank response holds a non-numeric or non-finite score");
    }
    scores.push_back(v.get<double>());
  }
  return scores;
}

std::vector<double> RerankClient::fetch(std::span<const TextPair> batch) {
  const std::size_t limit = batch_limit();
  if (batch.size() > limit) {
    std::vector<double> out;
    out.reserve(batch.size());
    for (std::size_t at = 0; at < batch.size(); at += limit) {
      auto part = fetch(batch.subspan(at, std::min(limit, batch.size() - at)));
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  for (int attempt = 1;; ++attempt) {
    try {
      return post_once(batch);
    } catch (const BatchTooLarge& e) {
      {
        std::lock_guard lock(mu_);
        options_.max_batch = std::min(options_.max_batch, e.limit);
      }
      return fetch(batch);
    } catch (const TransportError&) {
      if (attempt >= options_.attempts) {
        throw;
      }
      std::this_thread::sleep_for(options_.backoff * attempt);
    }
  }
}

std::vector<double> RerankClient::request_scores(std::span<const TextPair> pairs) {
  std::vector<double> out(pairs.size(), 0.0);
  std::vector<std::shared_future<double>> waits(pairs.size());
  std::vector<TextPair> missing;
  std::vector<std::promise<double>> promises;
  {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (auto hit = cache_.find(pairs[i]); hit != cache_.end()) {
        out[i] = hit->second;
        continue;
      }
      if (auto pending = inflight_.find(pairs[i]); pending != inflight_.end()) {
        waits[i] = pending->second;
        continue;
      }
      std::promise<double> p;
      waits[i] = p.get_future().share();
      inflight_.emplace(pairs[i], waits[i]);
      missing.push_back(pairs[i]);
      promises.push_back(std::move(p));
    }
  }

  // Commit batch by batch so a late failure keeps earlier scores cached.
  const std::span<const TextPair> todo(missing);
  std::size_t done = 0;
  try {
    while (done < todo.size()) {
      const std::size_t n = std::min(batch_limit(), todo.size() - done);
      auto scores = fetch(todo.subspan(done, n));
      std::lock_guard lock(mu_);
      for (std::size_t j = 0; j < n; ++j) {
        cache_.insert_or_assign(todo[done + j], scores[j]);
        inflight_.erase(todo[done + j]);
        promises[done + j].set_value(scores[j]);
      }
      done += n;
    }
  } catch (...) {
    std::lock_guard lock(mu_);
    for (std::size_t j = done; j < todo.size(); ++j) {
      inflight_.erase(todo[j]);
      promises[j].set_exception(std::current_exception());
    }
    throw;
  }

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (waits[i].valid()) {
      out[i] = waits[i].get();
    }
  }
  return out;
}

}  // namespace embforge
