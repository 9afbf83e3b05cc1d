// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"

namespace embforge {

VectorStore::VectorStore(std::size_t dim, std::vector<std::pair<std::string, std::vector<double>>> records)
    : dim_(dim) {
  if (dim == 0) {
    throw ValidationError("vector dimension must be positive");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].first < records[b].first; });

  ids_.reserve(records.size());
  values_.reserve(records.size() * dim);
  for (std::size_t i : order) {
    auto& [id, vec] = records[i];
    if (vec.size() != dim) {
      throw ValidationError("vector '" + id + "' has dimension " + std::to_string(vec.size()) + ", expected " +
                            std::to_string(dim));
    }
    if (!std::all_of(vec.begin(), vec.end(), [](double x) { return std::isfinite(x); })) {
      throw ValidationError("vector '" + id + "' has a non-finite component");
    }
    if (!ids_.empty() && ids_.back() == id) {
      throw ValidationError("duplicate vector id '" + id + "'");
    }
    ids_.push_back(std::move(id));
    values_.insert(values_.end(), vec.begin(), vec.end());
  }
}

std::span<const double> VectorStore::find(std::string_view id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) {
    return {};
  }
  return vector_at(static_cast<std::size_t>(it - ids_.begin()));
}

VectorStore load_vectors(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<double>>> records;
  std::optional<std::size_t> dim;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    const std::string& id = jsonl::require_string(rec, "id");
    auto it = rec.find("vector");
    if (it == rec.end() || !it->is_array()) {
      throw std::invalid_argument("field 'vector' must be an array");
    }
    std::vector<double> vec;
    vec.reserve(it->size());
    for (const auto& x : *it) {
      if (!x.is_number()) {
        throw ValidationError("vector '" + id + "' has a non-numeric component");
      }
      const double v = x.get<double>();
      if (!std::isfinite(v)) {
        throw ValidationError("vector '" + id + "' has a non-finite component");
      }
      vec.push_back(v);
    }
    if (!dim) {
      dim = vec.size();
    } else if (vec.size() != *dim) {
      throw ValidationError("vector '" + id + "' has dimension " + std::to_string(vec.size()) + ", expected " +
                            std::to_string(*dim));
    }
    records.emplace_back(id, std::move(vec));
  });
  if (!dim) {
    throw ValidationError("'" + path.string() + "' holds no vectors");
  }
  return VectorStore(*dim, std::move(records));
}

double semantic_score(std::span<const double> q_vec, std::span<const double> d_vec) {
  if (q_vec.size() != d_vec.size()) {
    throw std::invalid_argument("semantic_score: length mismatch (" + std::to_string(q_vec.size()) + " vs " +
                                std::to_string(d_vec.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < q_vec.size(); ++i) {
    sum += q_vec[i] * d_vec[i];
  }
  return sum;
}

RankedList search_semantic(const VectorStore& store, std::span<const double> q_vec, std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("search_semantic: n must be >= 1");
  }
  if (q_vec.size() != store.dim()) {
    throw std::invalid_argument("search_semantic: query has dimension " + std::to_string(q_vec.size()) +
                                ", store has " + std::to_string(store.dim()));
  }
  std::vector<RankedEntry> entries;
  entries.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    entries.push_back({store.ids()[i], semantic_score(q_vec, store.vector_at(i))});
  }
  return make_ranked_list(Channel::kSemantic, std::move(entries), n);
}

}  // namespace embforge
