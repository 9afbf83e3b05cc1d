// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace embforge {

enum class Channel { kLexical, kSemantic, kReranker, kFused };

std::string_view to_string(Channel channel) noexcept;
/// Throws ValidationError on an unknown name.
Channel channel_from_string(std::string_view name);

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Scores are non-increasing; position i has rank i + 1.
struct RankedList {
  Channel channel = Channel::kFused;
  std::vector<RankedEntry> entries;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Score descending, then doc id ascending.
inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) noexcept {
  if (a.score != b.score) {
    return a.score > b.score;
  }
  return a.doc_id < b.doc_id;
}

/// Sorts `entries` by ranks_before and keeps the first `n` (n == 0 keeps all).
RankedList make_ranked_list(Channel channel, std::vector<RankedEntry> entries, std::size_t n = 0);

/// Throws ValidationError naming the first repeated doc id.
void require_unique_ids(const RankedList& list);

}  // namespace embforge
