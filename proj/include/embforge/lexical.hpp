// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embforge/corpus.hpp"
#include "embforge/ranked_list.hpp"

namespace embforge {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// Throws std::invalid_argument unless k1 > 0 and 0 <= b <= 1.
  void validate() const;
};

struct Posting {
  std::uint32_t doc = 0;  // index into InvertedIndex::doc_ids()
  std::uint32_t tf = 0;
};

/// Term -> postings plus the length statistics BM25 needs. Documents are
/// held in ascending id order, so two permutations of a corpus build the
/// same index. Immutable once built.
class InvertedIndex {
 public:
  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  double avg_length() const noexcept { return avg_length_; }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
  const Bm25Params& build_params() const noexcept { return params_; }

  /// Position of `doc_id` in doc_ids(); throws ValidationError if unknown.
  std::uint32_t doc_index(std::string_view doc_id) const;
  std::uint32_t doc_length(std::string_view doc_id) const { return doc_lengths_[doc_index(doc_id)]; }

  /// Postings sorted by document index; empty for unseen terms.
  std::span<const Posting> postings(std::string_view term) const;
  std::size_t document_frequency(std::string_view term) const { return postings(term).size(); }
  std::uint32_t term_frequency(std::string_view term, std::uint32_t doc) const;
  std::size_t vocabulary_size() const noexcept { return postings_.size(); }

  friend InvertedIndex build_index(std::span<const Document> corpus, const Bm25Params& params);
  friend void save_index(const std::filesystem::path& path, const InvertedIndex& index);
  friend InvertedIndex load_index(const std::filesystem::path& path);

  friend bool operator==(const InvertedIndex&, const InvertedIndex&);

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  std::map<std::string, std::vector<Posting>, std::less<>> postings_;
  double avg_length_ = 0.0;
  Bm25Params params_;
};

/// Indexes title (when present) followed by text. Throws ValidationError on
/// an empty corpus or a repeated id.
InvertedIndex build_index(std::span<const Document> corpus, const Bm25Params& params = {});
inline InvertedIndex build_index(const Corpus& corpus, const Bm25Params& params = {}) {
  return build_index(corpus.records(), params);
}

/// ln(1 + (N - df + 0.5) / (df + 0.5)). Non-negative for every df in [0, N].
double idf(const InvertedIndex& index, std::string_view term);

/// Okapi BM25 summed over query tokens, repeats included.
/// Throws ValidationError for an unknown doc id.
double bm25_score(const InvertedIndex& index, const Bm25Params& params, std::string_view query_text,
                  std::string_view doc_id);
inline double bm25_score(const InvertedIndex& index, const Bm25Params& params, const Query& query,
                         std::string_view doc_id) {
  return bm25_score(index, params, query.text, doc_id);
}

/// Top `n` documents with a positive score. Ties go to the smaller doc id.
/// Throws std::invalid_argument when n == 0.
RankedList search_lexical(const InvertedIndex& index, const Bm25Params& params, std::string_view query_text,
                          std::size_t n);
inline RankedList search_lexical(const InvertedIndex& index, const Bm25Params& params, const Query& query,
                                 std::size_t n) {
  return search_lexical(index, params, query.text, n);
}

/// Binary file with a magic header and format version; load rejects any
/// other file or version with ValidationError.
void save_index(const std::filesystem::path& path, const InvertedIndex& index);
InvertedIndex load_index(const std::filesystem::path& path);

}  // namespace embforge
