// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/mining.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"

namespace embforge {

std::string_view to_string(TeacherSignal signal) noexcept {
  return signal == TeacherSignal::kReranker ? "reranker" : "fused";
}

TeacherSignal teacher_signal_from_string(std::string_view name) {
  if (name == "fused") return TeacherSignal::kFused;
  if (name == "reranker") return TeacherSignal::kReranker;
  throw ValidationError("unknown teacher signal '" + std::string(name) + "' (expected fused or reranker)");
}

void MiningConfig::validate() const {
  if (!(margin > 0.0 && margin <= 1.0)) {
    throw std::invalid_argument("mining.margin must lie in (0, 1]");
  }
  if (top_k == 0) {
    throw std::invalid_argument("mining.top_k must be >= 1");
  }
  if (num_negatives == 0) {
    throw std::invalid_argument("mining.num_negatives must be >= 1");
  }
  if (num_negatives > top_k) {
    throw std::invalid_argument("mining.num_negatives must not exceed mining.top_k");
  }
}

double margin_threshold(double positive_score, double margin) {
  if (!(margin > 0.0 && margin <= 1.0)) {
    throw std::invalid_argument("margin must lie in (0, 1]");
  }
  return positive_score * margin;
}

std::vector<ScoredDoc> teacher_scores(const TeacherScoreSet& set, TeacherSignal signal) {
  std::vector<ScoredDoc> out;
  out.reserve(set.candidates.size());
  for (const auto& c : set.candidates) {
    if (signal == TeacherSignal::kFused) {
      out.push_back({c.doc_id, c.fused_score});
    } else if (auto it = c.channels.find(Channel::kReranker); it != c.channels.end()) {
      out.push_back({c.doc_id, it->second.score});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
  });
  return out;
}

std::vector<ScoredDoc> filter_candidates(std::span<const ScoredDoc> candidates, std::string_view positive_id,
                                         std::optional<double> positive_score, double margin,
                                         const std::set<std::string, std::less<>>& exclude) {
  if (!positive_score) {
    auto it = std::find_if(candidates.begin(), candidates.end(),
                           [&](const ScoredDoc& c) { return c.doc_id == positive_id; });
    if (it == candidates.end()) {
      throw ValidationError("positive '" + std::string(positive_id) +
                            "' has no teacher score: it is not among the candidates and none was supplied");
    }
    positive_score = it->score;
  }
  const double threshold = margin_threshold(*positive_score, margin);
  std::vector<ScoredDoc> out;
  for (const auto& c : candidates) {
    if (c.doc_id == positive_id || exclude.contains(c.doc_id) || c.score > threshold) {
      continue;
    }
    out.push_back(c);
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Unbiased draw from [0, n). std::uniform_int_distribution is not specified
// bit-for-bit across standard libraries.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t reject_below = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= reject_below) {
      return r % n;
    }
  }
}

}  // namespace

std::uint64_t query_seed(std::uint64_t seed, std::string_view query_id) {
  return splitmix64(seed ^ splitmix64(fnv1a64(query_id)));
}

MinedNegatives sample_negatives(std::span<const ScoredDoc> filtered, const MiningConfig& config,
                                std::string_view query_id, std::string_view positive_id, double positive_score) {
  config.validate();
  MinedNegatives out;
  out.query_id = query_id;
  out.positive_id = positive_id;
  out.positive_score = positive_score;
  out.threshold = margin_threshold(positive_score, config.margin);
  out.seed = query_seed(config.seed, query_id);

  const std::size_t pool = std::min(config.top_k, filtered.size());
  if (pool <= config.num_negatives) {
    out.negatives.assign(filtered.begin(), filtered.begin() + static_cast<std::ptrdiff_t>(pool));
    out.shortfall = pool < config.num_negatives;
    return out;
  }

  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(out.seed);
  for (std::size_t i = 0; i < config.num_negatives; ++i) {
    const auto j = i + static_cast<std::size_t>(draw_below(rng, pool - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(config.num_negatives);
  std::sort(idx.begin(), idx.end());
  out.negatives.reserve(idx.size());
  for (std::size_t i : idx) {
    out.negatives.push_back(filtered[i]);
  }
  return out;
}

nlohmann::json mined_to_json(const MinedNegatives& m) {
  nlohmann::json negatives = nlohmann::json::array();
  for (const auto& n : m.negatives) {
    negatives.push_back({{"doc_id", n.doc_id}, {"score", n.score}});
  }
  return {{"query_id", m.query_id},       {"positive_id", m.positive_id}, {"positive_score", m.positive_score},
          {"threshold", m.threshold},     {"negatives", std::move(negatives)},
          {"shortfall", m.shortfall},     {"seed", m.seed}};
}

MinedNegatives mined_from_json(const nlohmann::json& record) {
  MinedNegatives m;
  m.query_id = jsonl::require_string(record, "query_id");
  m.positive_id = jsonl::require_string(record, "positive_id");
  m.positive_score = jsonl::require_number(record, "positive_score");
  m.threshold = jsonl::require_number(record, "threshold");
  auto it = record.find("negatives");
  if (it == record.end() || !it->is_array()) {
    throw std::invalid_argument("field 'negatives' must be an array");
  }
  for (const auto& n : *it) {
    m.negatives.push_back({jsonl::require_string(n, "doc_id"), jsonl::require_number(n, "score")});
  }
  m.shortfall = record.value("shortfall", false);
  auto seed = record.find("seed");
  if (seed == record.end() || !seed->is_number_unsigned()) {
    throw std::invalid_argument("field 'seed' must be a non-negative integer");
  }
  m.seed = seed->get<std::uint64_t>();
  return m;
}

void save_mined(const std::filesystem::path& path, std::span<const MinedNegatives> mined) {
  std::vector<nlohmann::json> lines;
  lines.reserve(mined.size());
  for (const auto& m : mined) {
    lines.push_back(mined_to_json(m));
  }
  jsonl::write_lines(path, lines);
}

std::vector<MinedNegatives> load_mined(const std::filesystem::path& path) {
  std::vector<MinedNegatives> out;
  jsonl::for_each_record(path, [&](const nlohmann::json& rec, std::size_t) { out.push_back(mined_from_json(rec)); });
  return out;
}

}  // namespace embforge
