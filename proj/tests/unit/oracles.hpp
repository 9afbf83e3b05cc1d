// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used as test oracles. They share no
// code with the library beyond plain data types.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace embforge::oracle {

struct Doc {
  std::string id;
  std::string body;  // title and text joined by a space
};

inline std::vector<Doc> read_docs(const std::filesystem::path& path) {
  std::vector<Doc> docs;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    std::string body = j.contains("title") ? j["title"].get<std::string>() + " " : "";
    docs.push_back({j["id"].get<std::string>(), body + j["text"].get<std::string>()});
  }
  return docs;
}

/// ASCII-only tokenizer: lowercased runs of [A-Za-z0-9].
inline std::vector<std::string> ascii_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Okapi BM25 straight from the formula, scoring every document in full.
/// Returns (id, score) for documents sharing at least one query term,
/// ordered by score descending then id, truncated to n.
inline std::vector<std::pair<std::string, double>> bm25_full_scan(const std::vector<Doc>& docs,
                                                                   const std::string& query, std::size_t n,
                                                                   double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(ascii_tokens(d.body));
    total += static_cast<double>(toks.back().size());
  }
  const double N = static_cast<double>(docs.size());
  const double avgdl = total / N;
  const auto q = ascii_tokens(query);

  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double score = 0;
    bool hit = false;
    const double dl = static_cast<double>(toks[i].size());
    for (const auto& t : q) {
      const double f = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), t));
      if (f == 0) continue;
      hit = true;
      double df = 0;
      for (const auto& other : toks) {
        if (std::find(other.begin(), other.end(), t) != other.end()) df += 1;
      }
      const double idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
      score += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * dl / avgdl));
    }
    if (hit) out.emplace_back(docs[i].id, score);
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });
  if (out.size() > n) out.resize(n);
  return out;
}

/// Reciprocal rank fusion over lists of ids given in rank order.
inline std::map<std::string, double> rrf_brute_force(const std::vector<std::vector<std::string>>& lists, double k) {
  std::map<std::string, std::vector<double>> terms;
  for (const auto& list : lists) {
    for (std::size_t r = 0; r < list.size(); ++r) {
      terms[list[r]].push_back(1.0 / (k + static_cast<double>(r + 1)));
    }
  }
  std::map<std::string, double> out;
  for (auto& [id, ts] : terms) {
    // Largest terms first, matching the library's summation order.
    std::sort(ts.begin(), ts.end(), std::greater<>());
    double s = 0;
    for (double t : ts) s += t;
    out[id] = s;
  }
  return out;
}

/// Central finite difference of f at x along coordinate i.
template <typename F>
double central_difference(F&& f, std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

}  // namespace embforge::oracle
