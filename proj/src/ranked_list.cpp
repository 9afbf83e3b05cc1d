// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/ranked_list.hpp"

#include <algorithm>
#include <set>

#include "embforge/error.hpp"

namespace embforge {

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::kLexical:
      return "lexical";
    case Channel::kSemantic:
      return "semantic";
    case Channel::kReranker:
      return "reranker";
    case Channel::kFused:
      return "fused";
  }
  return "fused";
}

Channel channel_from_string(std::string_view name) {
  if (name == "lexical") return Channel::kLexical;
  if (name == "semantic") return Channel::kSemantic;
  if (name == "reranker") return Channel::kReranker;
  if (name == "fused") return Channel::kFused;
  throw ValidationError("unknown channel '" + std::string(name) + "'");
}

RankedList make_ranked_list(Channel channel, std::vector<RankedEntry> entries, std::size_t n) {
  if (n != 0 && n < entries.size()) {
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n), entries.end(),
                      ranks_before);
    entries.resize(n);
  } else {
    std::sort(entries.begin(), entries.end(), ranks_before);
  }
  return RankedList{channel, std::move(entries)};
}

void require_unique_ids(const RankedList& list) {
  std::set<std::string_view> seen;
  for (const auto& e : list.entries) {
    if (!seen.insert(e.doc_id).second) {
      throw ValidationError("duplicate doc id '" + e.doc_id + "' in " + std::string(to_string(list.channel)) +
                            " list");
    }
  }
}

}  // namespace embforge
