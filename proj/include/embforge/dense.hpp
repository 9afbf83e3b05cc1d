// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embforge/ranked_list.hpp"

namespace embforge {

/// Fixed-dimension double-precision vectors keyed by id, held in ascending
/// id order regardless of load order. Exact full-scan search only.
class VectorStore {
 public:
  /// Throws ValidationError on dim == 0, a length mismatch, a non-finite
  /// component or a repeated id, naming the offending id.
  VectorStore(std::size_t dim, std::vector<std::pair<std::string, std::vector<double>>> records);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  /// Empty span when the id is unknown.
  std::span<const double> find(std::string_view id) const;
  std::span<const double> vector_at(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
};

/// Vector file: {"id", "vector": [number, ...]} per line. The dimension is
/// taken from the first record.
VectorStore load_vectors(const std::filesystem::path& path);

/// Sequential sum of q[i] * d[i]. Throws std::invalid_argument on a length
/// mismatch.
double semantic_score(std::span<const double> q_vec, std::span<const double> d_vec);

/// Top `n` ids by dot product, ties to the smaller id. Throws
/// std::invalid_argument when n == 0 or the query has the wrong dimension.
RankedList search_semantic(const VectorStore& store, std::span<const double> q_vec, std::size_t n);

}  // namespace embforge
