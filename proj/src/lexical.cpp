// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/lexical.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "embforge/error.hpp"
#include "embforge/text.hpp"

namespace embforge {

void Bm25Params::validate() const {
  if (!(k1 > 0.0) || !std::isfinite(k1)) {
    throw std::invalid_argument("bm25.k1 must be > 0");
  }
  if (!(b >= 0.0 && b <= 1.0)) {
    throw std::invalid_argument("bm25.b must lie in [0, 1]");
  }
}

std::uint32_t InvertedIndex::doc_index(std::string_view doc_id) const {
  auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
  if (it == doc_ids_.end() || *it != doc_id) {
    throw ValidationError("unknown doc id '" + std::string(doc_id) + "'");
  }
  return static_cast<std::uint32_t>(it - doc_ids_.begin());
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(term);
  if (it == postings_.end()) {
    return {};
  }
  return it->second;
}

std::uint32_t InvertedIndex::term_frequency(std::string_view term, std::uint32_t doc) const {
  auto list = postings(term);
  auto it = std::lower_bound(list.begin(), list.end(), doc,
                             [](const Posting& p, std::uint32_t d) { return p.doc < d; });
  return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
  if (a.doc_ids_ != b.doc_ids_ || a.doc_lengths_ != b.doc_lengths_ || a.avg_length_ != b.avg_length_ ||
      a.params_.k1 != b.params_.k1 || a.params_.b != b.params_.b || a.postings_.size() != b.postings_.size()) {
    return false;
  }
  return std::equal(a.postings_.begin(), a.postings_.end(), b.postings_.begin(), [](const auto& x, const auto& y) {
    return x.first == y.first &&
           std::equal(x.second.begin(), x.second.end(), y.second.begin(), y.second.end(),
                      [](const Posting& p, const Posting& q) { return p.doc == q.doc && p.tf == q.tf; });
  });
}

InvertedIndex build_index(std::span<const Document> corpus, const Bm25Params& params) {
  params.validate();
  if (corpus.empty()) {
    throw ValidationError("cannot build an index over an empty corpus");
  }
  std::vector<const Document*> order;
  order.reserve(corpus.size());
  for (const auto& d : corpus) {
    order.push_back(&d);
  }
  std::sort(order.begin(), order.end(), [](const Document* a, const Document* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->id == order[i - 1]->id) {
      throw ValidationError("duplicate id '" + order[i]->id + "'");
    }
  }

  InvertedIndex index;
  index.params_ = params;
  index.doc_ids_.reserve(order.size());
  index.doc_lengths_.reserve(order.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Document& d = *order[i];
    std::vector<std::string> tokens = d.title ? text::tokenize(*d.title) : std::vector<std::string>{};
    auto body = text::tokenize(d.text);
    tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));

    std::map<std::string, std::uint32_t> tf;
    for (auto& t : tokens) {
      ++tf[std::move(t)];
    }
    const auto doc = static_cast<std::uint32_t>(i);
    for (auto& [term, count] : tf) {
      index.postings_[term].push_back({doc, count});
    }
    index.doc_ids_.push_back(d.id);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total += tokens.size();
  }
  index.avg_length_ = static_cast<double>(total) / static_cast<double>(order.size());
  return index;
}

double idf(const InvertedIndex& index, std::string_view term) {
  const auto n = static_cast<double>(index.doc_count());
  const auto df = static_cast<double>(index.document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

namespace {

double term_weight(double term_idf, std::uint32_t tf, std::uint32_t len, double avg_length, const Bm25Params& p) {
  const double f = tf;
  // avg_length is zero only when every document tokenized to nothing, and
  // then no term can match.
  const double norm = avg_length > 0.0 ? static_cast<double>(len) / avg_length : 0.0;
  return term_idf * (f * (p.k1 + 1.0)) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace

double bm25_score(const InvertedIndex& index, const Bm25Params& params, std::string_view query_text,
                  std::string_view doc_id) {
  params.validate();
  const std::uint32_t doc = index.doc_index(doc_id);
  const std::uint32_t len = index.doc_lengths()[doc];
  double score = 0.0;
  for (const auto& term : text::tokenize(query_text)) {
    const std::uint32_t tf = index.term_frequency(term, doc);
    if (tf == 0) {
      continue;
    }
    score += term_weight(idf(index, term), tf, len, index.avg_length(), params);
  }
  return score;
}

RankedList search_lexical(const InvertedIndex& index, const Bm25Params& params, std::string_view query_text,
                          std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("search_lexical: n must be >= 1");
  }
  params.validate();
  std::vector<double> acc(index.doc_count(), 0.0);
  std::vector<char> hit(index.doc_count(), 0);
  // Term-at-a-time in query-token order: each document accumulates its
  // contributions in the same order bm25_score adds them.
  for (const auto& term : text::tokenize(query_text)) {
    const auto list = index.postings(term);
    if (list.empty()) {
      continue;
    }
    const double term_idf = idf(index, term);
    for (const Posting& p : list) {
      acc[p.doc] += term_weight(term_idf, p.tf, index.doc_lengths()[p.doc], index.avg_length(), params);
      hit[p.doc] = 1;
    }
  }
  std::vector<RankedEntry> entries;
  for (std::size_t d = 0; d < acc.size(); ++d) {
    if (hit[d]) {
      entries.push_back({index.doc_ids()[d], acc[d]});
    }
  }
  return make_ranked_list(Channel::kLexical, std::move(entries), n);
}

// ---------------------------------------------------------------------------
// Persistence. Little-endian, length-prefixed strings.

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'M', 'B', 'F', 'B', 'M', '2', '5'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}

  template <typename T>
  void pod(T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bytes.begin(), bytes.end());
    }
    out_.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string source) : in_(in), source_(std::move(source)) {}

  template <typename T>
  T pod() {
    std::array<unsigned char, sizeof(T)> bytes{};
    in_.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    check();
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 30)) {
      fail("string length out of range");
    }
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("'" + source_ + "' is not a valid index file: " + what);
  }

 private:
  void check() const {
    if (!in_) {
      fail("truncated");
    }
  }
  std::ifstream& in_;
  std::string source_;
};

}  // namespace

void save_index(const std::filesystem::path& path, const InvertedIndex& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out.write(kMagic.data(), kMagic.size());
  Writer w(out);
  w.pod(kFormatVersion);
  w.pod(index.params_.k1);
  w.pod(index.params_.b);
  w.pod<std::uint64_t>(index.doc_ids_.size());
  for (std::size_t i = 0; i < index.doc_ids_.size(); ++i) {
    w.str(index.doc_ids_[i]);
    w.pod(index.doc_lengths_[i]);
  }
  w.pod<std::uint64_t>(index.postings_.size());
  for (const auto& [term, list] : index.postings_) {
    w.str(term);
    w.pod<std::uint64_t>(list.size());
    for (const Posting& p : list) {
      w.pod(p.doc);
      w.pod(p.tf);
    }
  }
  if (!out) {
    throw Error("write failed for '" + path.string() + "'");
  }
}

InvertedIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + path.string() + "'");
  }
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    r.fail("bad magic header");
  }
  if (const auto version = r.pod<std::uint32_t>(); version != kFormatVersion) {
    r.fail("unsupported format version " + std::to_string(version));
  }
  InvertedIndex index;
  index.params_.k1 = r.pod<double>();
  index.params_.b = r.pod<double>();
  const auto docs = r.pod<std::uint64_t>();
  if (docs == 0 || docs > std::numeric_limits<std::uint32_t>::max()) {
    r.fail("document count out of range");
  }
  std::uint64_t total = 0;
  for (std::uint64_t i = 0; i < docs; ++i) {
    index.doc_ids_.push_back(r.str());
    index.doc_lengths_.push_back(r.pod<std::uint32_t>());
    total += index.doc_lengths_.back();
    if (i > 0 && !(index.doc_ids_[i - 1] < index.doc_ids_[i])) {
      r.fail("document ids not strictly ascending");
    }
  }
  const auto terms = r.pod<std::uint64_t>();
  for (std::uint64_t t = 0; t < terms; ++t) {
    std::string term = r.str();
    const auto n = r.pod<std::uint64_t>();
    if (n == 0 || n > docs) {
      r.fail("posting list size out of range");
    }
    std::vector<Posting> list;
    list.reserve(n);
    for (std::uint64_t j = 0; j < n; ++j) {
      Posting p{r.pod<std::uint32_t>(), r.pod<std::uint32_t>()};
      if (p.doc >= docs || p.tf == 0 || (!list.empty() && list.back().doc >= p.doc)) {
        r.fail("corrupt posting for term '" + term + "'");
      }
      list.push_back(p);
    }
    index.postings_.emplace(std::move(term), std::move(list));
  }
  index.avg_length_ = static_cast<double>(total) / static_cast<double>(docs);
  return index;
}

}  // namespace embforge
