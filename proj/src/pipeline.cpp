// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <thread>

#include "embforge/corpus.hpp"
#include "embforge/dense.hpp"
#include "embforge/digest.hpp"
#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"
#include "embforge/rerank.hpp"

namespace embforge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::size_t kMaxWorkers = 256;

std::string_view soft_source_name(SoftScoreSource s) {
  return s == SoftScoreSource::kFused ? "fused" : "reranker";
}

class ConfigReader {
 public:
  explicit ConfigReader(fs::path base_dir) : base_(std::move(base_dir)) {}

  std::vector<std::string> errors;

  void fail(const std::string& key, const std::string& what) { errors.push_back(key + ": " + what); }

  // Returns the sub-object at `key`, or nullptr when absent or malformed.
  const json* section(const json& parent, const char* key, const std::string& dotted,
                      std::initializer_list<const char*> allowed) {
    auto it = parent.find(key);
    if (it == parent.end()) {
      return nullptr;
    }
    if (!it->is_object()) {
      fail(dotted, "must be an object");
      return nullptr;
    }
    check_keys(*it, dotted, allowed);
    return &*it;
  }

  void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        fail(prefix.empty() ? k : prefix + "." + k, "unknown key");
      }
    }
  }

  void number(const json* obj, const char* key, const std::string& dotted, double& out) {
    if (obj == nullptr) return;
    auto it = obj->find(key);
    if (it == obj->end()) return;
    if (!it->is_number() || !std::isfinite(it->get<double>())) {
      fail(dotted, "must be a finite number");
      return;
    }
    out = it->get<double>();
  }

  void count(const json* obj, const char* key, const std::string& dotted, std::size_t& out) {
    if (obj == nullptr) return;
    auto it = obj->find(key);
    if (it == obj->end()) return;
    if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<long long>() < 0)) {
      fail(dotted, "must be a non-negative integer");
      return;
    }
    out = it->get<std::size_t>();
  }

  void seed(const json* obj, const char* key, const std::string& dotted, std::uint64_t& out) {
    if (obj == nullptr) return;
    auto it = obj->find(key);
    if (it == obj->end()) return;
    if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<long long>() < 0)) {
      fail(dotted, "must be a non-negative integer");
      return;
    }
    out = it->get<std::uint64_t>();
  }

  void boolean(const json* obj, const char* key, const std::string& dotted, bool& out) {
    if (obj == nullptr) return;
    auto it = obj->find(key);
    if (it == obj->end()) return;
    if (!it->is_boolean()) {
      fail(dotted, "must be true or false");
      return;
    }
    out = it->get<bool>();
  }

  std::optional<std::string> string(const json* obj, const char* key, const std::string& dotted) {
    if (obj == nullptr) return std::nullopt;
    auto it = obj->find(key);
    if (it == obj->end()) return std::nullopt;
    if (!it->is_string()) {
      fail(dotted, "must be a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<fs::path> input_file(const json* obj, const char* key, bool required) {
    const std::string dotted = std::string("paths.") + key;
    auto s = string(obj, key, dotted);
    if (!s) {
      if (required && (obj == nullptr || !obj->contains(key))) {
        fail(dotted, "is required");
      }
      return std::nullopt;
    }
    fs::path p = resolve(*s);
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
      fail(dotted, "file '" + p.string() + "' does not exist");
    }
    return p;
  }

  fs::path resolve(const std::string& s) const {
    fs::path p(s);
    return p.is_absolute() || base_.empty() ? p : base_ / p;
  }

 private:
  fs::path base_;
};

PipelineConfig parse_config(const json& doc, const fs::path& base_dir, std::vector<std::string>& errors) {
  ConfigReader r(base_dir);
  PipelineConfig c;
  if (!doc.is_object()) {
    errors.push_back("config: must be a JSON object");
    return c;
  }
  r.check_keys(doc, "",
               {"bm25", "rrf_k", "candidate_pool", "mining", "soft_scores", "loss", "nli", "prompt", "paths", "strict",
                "workers"});

  const json* bm25 = r.section(doc, "bm25", "bm25", {"k1", "b"});
  r.number(bm25, "k1", "bm25.k1", c.bm25.k1);
  r.number(bm25, "b", "bm25.b", c.bm25.b);
  if (!(c.bm25.k1 > 0.0)) r.fail("bm25.k1", "must be > 0");
  if (!(c.bm25.b >= 0.0 && c.bm25.b <= 1.0)) r.fail("bm25.b", "must lie in [0, 1]");

  r.number(&doc, "rrf_k", "rrf_k", c.rrf_k);
  if (!(c.rrf_k > 0.0)) r.fail("rrf_k", "must be > 0");
  r.count(&doc, "candidate_pool", "candidate_pool", c.candidate_pool);
  if (c.candidate_pool == 0) r.fail("candidate_pool", "must be >= 1");

  const json* mining = r.section(doc, "mining", "mining", {"margin", "top_k", "num_negatives", "seed", "signal"});
  r.number(mining, "margin", "mining.margin", c.mining.margin);
  r.count(mining, "top_k", "mining.top_k", c.mining.top_k);
  r.count(mining, "num_negatives", "mining.num_negatives", c.mining.num_negatives);
  r.seed(mining, "seed", "mining.seed", c.mining.seed);
  if (auto s = r.string(mining, "signal", "mining.signal")) {
    if (*s == "fused" || *s == "reranker") {
      c.mining.signal = teacher_signal_from_string(*s);
    } else {
      r.fail("mining.signal", "must be \"fused\" or \"reranker\"");
    }
  }
  if (!(c.mining.margin > 0.0 && c.mining.margin <= 1.0)) r.fail("mining.margin", "must lie in (0, 1]");
  if (c.mining.top_k == 0) r.fail("mining.top_k", "must be >= 1");
  if (c.mining.num_negatives == 0) r.fail("mining.num_negatives", "must be >= 1");
  if (c.mining.num_negatives > c.mining.top_k) {
    r.fail("mining.num_negatives", "must not exceed mining.top_k (" + std::to_string(c.mining.num_negatives) + " > " +
                                       std::to_string(c.mining.top_k) + ")");
  }

  if (auto s = r.string(&doc, "soft_scores", "soft_scores")) {
    if (*s == "reranker") {
      c.soft_scores = SoftScoreSource::kRerankerRaw;
    } else if (*s == "fused") {
      c.soft_scores = SoftScoreSource::kFused;
    } else {
      r.fail("soft_scores", "must be \"reranker\" or \"fused\"");
    }
  }

  const json* loss = r.section(doc, "loss", "loss", {"tau", "tau_teacher", "lambda"});
  r.number(loss, "tau", "loss.tau", c.loss.tau);
  r.number(loss, "tau_teacher", "loss.tau_teacher", c.loss.tau_teacher);
  r.number(loss, "lambda", "loss.lambda", c.loss.lambda);
  if (!(c.loss.tau > 0.0)) r.fail("loss.tau", "must be > 0");
  if (!(c.loss.tau_teacher > 0.0)) r.fail("loss.tau_teacher", "must be > 0");
  if (!(c.loss.lambda >= 0.0 && c.loss.lambda <= 1.0)) r.fail("loss.lambda", "must lie in [0, 1]");

  const json* nli = r.section(doc, "nli", "nli", {"high", "low"});
  r.number(nli, "high", "nli.high", c.nli.high);
  r.number(nli, "low", "nli.low", c.nli.low);
  if (!(c.nli.low >= 0.0 && c.nli.high <= 1.0)) r.fail("nli", "high and low must lie in [0, 1]");
  if (!(c.nli.low < c.nli.high)) r.fail("nli", "low must be below high");

  const json* prompt = r.section(doc, "prompt", "prompt", {"eos_marker", "shots"});
  if (auto s = r.string(prompt, "eos_marker", "prompt.eos_marker")) {
    c.prompt.eos_marker = *s;
  }
  if (prompt != nullptr && prompt->contains("shots")) {
    const json& shots = prompt->at("shots");
    if (!shots.is_object()) {
      r.fail("prompt.shots", "must map task names to shot lists");
    } else {
      for (const auto& [task, list] : shots.items()) {
        const std::string key = "prompt.shots." + task;
        if (!list.is_array()) {
          r.fail(key, "must be an array");
          continue;
        }
        std::vector<Shot> parsed;
        for (const auto& s : list) {
          if (!s.is_object() || !s.contains("query") || !s.contains("passage") || !s["query"].is_string() ||
              !s["passage"].is_string()) {
            r.fail(key, "each shot needs string fields \"query\" and \"passage\"");
            break;
          }
          parsed.push_back({s["query"].get<std::string>(), s["passage"].get<std::string>()});
        }
        c.prompt.shots[task] = std::move(parsed);
      }
    }
  }

  const json* paths = r.section(doc, "paths", "paths",
                                {"corpus", "queries", "qrels", "doc_vectors", "query_vectors", "reranker_scores",
                                 "reranker_endpoint", "instructions", "output_dir"});
  if (paths == nullptr && !doc.contains("paths")) {
    r.fail("paths", "is required");
  }
  const auto req = [&](const char* key, fs::path& out) {
    if (auto p = r.input_file(paths, key, true)) out = *p;
  };
  req("corpus", c.paths.corpus);
  req("queries", c.paths.queries);
  req("qrels", c.paths.qrels);
  req("doc_vectors", c.paths.doc_vectors);
  req("query_vectors", c.paths.query_vectors);
  c.paths.reranker_scores = r.input_file(paths, "reranker_scores", false);
  c.paths.reranker_endpoint = r.string(paths, "reranker_endpoint", "paths.reranker_endpoint");
  c.paths.instructions = r.input_file(paths, "instructions", false);
  const bool has_scores = paths != nullptr && paths->contains("reranker_scores");
  const bool has_endpoint = paths != nullptr && paths->contains("reranker_endpoint");
  if (has_scores == has_endpoint && paths != nullptr) {
    r.fail("paths", "exactly one of reranker_scores and reranker_endpoint must be set");
  }
  if (auto s = r.string(paths, "output_dir", "paths.output_dir")) {
    c.paths.output_dir = r.resolve(*s);
    std::error_code ec;
    if (fs::exists(c.paths.output_dir, ec) && !fs::is_directory(c.paths.output_dir, ec)) {
      r.fail("paths.output_dir", "'" + c.paths.output_dir.string() + "' exists and is not a directory");
    }
  } else if (paths != nullptr && !paths->contains("output_dir")) {
    r.fail("paths.output_dir", "is required");
  }

  r.boolean(&doc, "strict", "strict", c.strict);
  r.count(&doc, "workers", "workers", c.workers);
  if (c.workers == 0 || c.workers > kMaxWorkers) {
    r.fail("workers", "must lie in [1, " + std::to_string(kMaxWorkers) + "]");
  }

  errors = std::move(r.errors);
  return c;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config '" + path.string() + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid config:";
  for (const auto& e : errors) {
    msg += "\n  " + e;
  }
  return msg;
}

struct QueryResult {
  TeacherScoreSet teacher;
  std::vector<MinedNegatives> mined;
  std::vector<TrainingRecord> records;
  std::size_t dropped = 0;
};

struct MineContext {
  const PipelineConfig& config;
  const Corpus& corpus;
  const QuerySet& queries;
  const InvertedIndex& index;
  const VectorStore& doc_vectors;
  const VectorStore& query_vectors;
  const InstructionRegistry& registry;
  const std::map<std::string, std::vector<std::string>>& positives;
  const ScoreSet* scores;
  RerankClient* client;
  EmitOptions emit;
};

template <typename Fn>
auto run_stage(const char* stage, const std::string& query_id, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, query_id, e.what());
  }
}

QueryResult process_query(const MineContext& ctx, const Query& q) {
  static const std::vector<std::string> kNone;
  const auto pit = ctx.positives.find(q.id);
  const std::vector<std::string>& positives = pit == ctx.positives.end() ? kNone : pit->second;
  const PipelineConfig& cfg = ctx.config;

  RankedList lex = run_stage("lexical", q.id,
                             [&] { return search_lexical(ctx.index, cfg.bm25, q, cfg.candidate_pool); });
  RankedList sem = run_stage("semantic", q.id, [&] {
    auto v = ctx.query_vectors.find(q.id);
    if (v.empty()) {
      throw ValidationError("no query vector for '" + q.id + "'");
    }
    return search_semantic(ctx.doc_vectors, v, cfg.candidate_pool);
  });

  QueryResult result;
  RankedList rer = run_stage("rerank", q.id, [&] {
    std::set<std::string> pool(positives.begin(), positives.end());
    for (const auto& e : lex.entries) pool.insert(e.doc_id);
    for (const auto& e : sem.entries) pool.insert(e.doc_id);

    std::vector<RankedEntry> entries;
    std::set<std::string, std::less<>> dropped;
    if (ctx.scores != nullptr) {
      for (const auto& id : pool) {
        if (auto s = ctx.scores->find(q.id, id)) {
          entries.push_back({id, *s});
        } else if (cfg.strict) {
          throw ValidationError("missing reranker score for pair (" + q.id + ", " + id + ")");
        } else if (!std::binary_search(positives.begin(), positives.end(), id)) {
          dropped.insert(id);
        }
      }
    } else {
      std::vector<TextPair> pairs;
      pairs.reserve(pool.size());
      for (const auto& id : pool) {
        pairs.push_back({q.text, ctx.corpus.at(id).text});
      }
      const std::vector<double> s = ctx.client->request_scores(pairs);
      std::size_t i = 0;
      for (const auto& id : pool) {
        entries.push_back({id, s[i++]});
      }
    }
    if (!dropped.empty()) {
      const auto gone = [&](const RankedEntry& e) { return dropped.contains(e.doc_id); };
      std::erase_if(lex.entries, gone);
      std::erase_if(sem.entries, gone);
      result.dropped = dropped.size();
    }
    return make_ranked_list(Channel::kReranker, std::move(entries));
  });

  result.teacher = run_stage("fuse", q.id, [&] { return build_teacher_scores(q, lex, sem, rer, cfg.rrf_k); });

  result.mined = run_stage("mine", q.id, [&] {
    const std::vector<ScoredDoc> signal = teacher_scores(result.teacher, cfg.mining.signal);
    const std::set<std::string, std::less<>> exclude(positives.begin(), positives.end());
    std::vector<MinedNegatives> mined;
    for (const auto& p : positives) {
      auto it = std::find_if(signal.begin(), signal.end(), [&](const ScoredDoc& d) { return d.doc_id == p; });
      if (it == signal.end()) {
        throw ValidationError("positive '" + p + "' has no " + std::string(to_string(cfg.mining.signal)) +
                              " teacher score");
      }
      const auto filtered = filter_candidates(signal, p, it->score, cfg.mining.margin, exclude);
      mined.push_back(sample_negatives(filtered, cfg.mining, q.id, p, it->score));
    }
    return mined;
  });

  result.records = run_stage("emit", q.id, [&] {
    std::vector<LabeledPair> pairs;
    for (const auto& p : positives) {
      pairs.push_back({q.id, p});
    }
    return emit_training_records(pairs, ctx.queries, ctx.corpus, result.mined,
                                 std::span<const TeacherScoreSet>(&result.teacher, 1), ctx.registry, ctx.emit);
  });
  return result;
}

std::vector<QueryResult> process_all(const MineContext& ctx, const std::vector<const Query*>& order,
                                     std::size_t workers) {
  const std::size_t n = order.size();
  std::vector<QueryResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  // Lowest failing index so far; queries after it are skipped, queries
  // before it still run, so the reported error does not depend on timing.
  std::atomic<std::size_t> first_failure{n};

  const auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || i > first_failure.load()) {
        return;
      }
      try {
        results[i] = process_query(ctx, *order[i]);
      } catch (...) {
        errors[i] = std::current_exception();
        std::size_t cur = first_failure.load();
        while (i < cur && !first_failure.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };

  const std::size_t threads = std::min(workers, n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(work);
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return results;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

}  // namespace

std::vector<std::string> validate_config(const json& doc, const fs::path& base_dir) {
  std::vector<std::string> errors;
  parse_config(doc, base_dir, errors);
  return errors;
}

std::vector<std::string> validate_config(const fs::path& path) {
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const ValidationError& e) {
    return {e.what()};
  }
  return validate_config(doc, path.parent_path());
}

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  std::vector<std::string> errors;
  PipelineConfig c = parse_config(doc, base_dir, errors);
  if (!errors.empty()) {
    throw ValidationError(join_errors(errors));
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) { return config_from_json(read_json_file(path), path.parent_path()); }

json config_to_json(const PipelineConfig& c) {
  json shots = json::object();
  for (const auto& [task, list] : c.prompt.shots) {
    json arr = json::array();
    for (const auto& s : list) {
      arr.push_back({{"query", s.query}, {"passage", s.passage}});
    }
    shots[task] = std::move(arr);
  }
  json paths = {{"corpus", c.paths.corpus.generic_string()},
                {"queries", c.paths.queries.generic_string()},
                {"qrels", c.paths.qrels.generic_string()},
                {"doc_vectors", c.paths.doc_vectors.generic_string()},
                {"query_vectors", c.paths.query_vectors.generic_string()}};
  if (c.paths.reranker_scores) paths["reranker_scores"] = c.paths.reranker_scores->generic_string();
  if (c.paths.reranker_endpoint) paths["reranker_endpoint"] = *c.paths.reranker_endpoint;
  if (c.paths.instructions) paths["instructions"] = c.paths.instructions->generic_string();
  return {{"bm25", {{"k1", c.bm25.k1}, {"b", c.bm25.b}}},
          {"rrf_k", c.rrf_k},
          {"candidate_pool", c.candidate_pool},
          {"mining",
           {{"margin", c.mining.margin},
            {"top_k", c.mining.top_k},
            {"num_negatives", c.mining.num_negatives},
            {"seed", c.mining.seed},
            {"signal", to_string(c.mining.signal)}}},
          {"soft_scores", soft_source_name(c.soft_scores)},
          {"loss", {{"tau", c.loss.tau}, {"tau_teacher", c.loss.tau_teacher}, {"lambda", c.loss.lambda}}},
          {"nli", {{"high", c.nli.high}, {"low", c.nli.low}}},
          {"prompt", {{"eos_marker", c.prompt.eos_marker}, {"shots", std::move(shots)}}},
          {"paths", std::move(paths)},
          {"strict", c.strict}};
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(config_to_json(config).dump()); }

MineSummary run_mine(const PipelineConfig& config) {
  config.bm25.validate();
  config.mining.validate();

  json inputs = json::object();
  const auto digest_input = [&](const char* name, const fs::path& p) {
    inputs[name] = {{"path", p.generic_string()}, {"sha256", sha256_file(p)}};
  };
  digest_input("corpus", config.paths.corpus);
  digest_input("queries", config.paths.queries);
  digest_input("qrels", config.paths.qrels);
  digest_input("doc_vectors", config.paths.doc_vectors);
  digest_input("query_vectors", config.paths.query_vectors);
  if (config.paths.reranker_scores) digest_input("reranker_scores", *config.paths.reranker_scores);
  if (config.paths.instructions) digest_input("instructions", *config.paths.instructions);

  const Corpus corpus = load_corpus(config.paths.corpus);
  const QuerySet queries = load_queries(config.paths.queries);
  const std::vector<Qrel> qrels = load_qrels(config.paths.qrels);
  const VectorStore doc_vectors = load_vectors(config.paths.doc_vectors);
  const VectorStore query_vectors = load_vectors(config.paths.query_vectors);
  InstructionRegistry registry = InstructionRegistry::builtin();
  if (config.paths.instructions) {
    registry.merge_overrides(*config.paths.instructions);
  }

  if (doc_vectors.dim() != query_vectors.dim()) {
    throw ValidationError("document vectors have dimension " + std::to_string(doc_vectors.dim()) +
                          " but query vectors have " + std::to_string(query_vectors.dim()));
  }
  for (const auto& id : doc_vectors.ids()) {
    if (corpus.find(id) == nullptr) {
      throw ValidationError("vector for '" + id + "' has no document in the corpus");
    }
  }
  if (doc_vectors.size() != corpus.size()) {
    throw ValidationError("corpus has " + std::to_string(corpus.size()) + " documents but only " +
                          std::to_string(doc_vectors.size()) + " have vectors");
  }
  for (const auto& q : queries.records()) {
    if (!registry.contains(q.task)) {
      throw ValidationError("query '" + q.id + "' names unknown task '" + q.task + "'");
    }
  }
  std::map<std::string, std::vector<std::string>> positives;
  for (const auto& r : qrels) {
    if (queries.find(r.query_id) == nullptr) {
      throw ValidationError("qrel names unknown query '" + r.query_id + "'");
    }
    if (corpus.find(r.doc_id) == nullptr) {
      throw ValidationError("qrel names unknown document '" + r.doc_id + "'");
    }
    positives[r.query_id].push_back(r.doc_id);
  }
  for (auto& [q, docs] : positives) {
    std::sort(docs.begin(), docs.end());
    docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  }

  std::optional<ScoreSet> scores;
  std::unique_ptr<RerankClient> client;
  if (config.paths.reranker_scores) {
    scores = load_scores(*config.paths.reranker_scores);
  } else if (config.paths.reranker_endpoint) {
    client = std::make_unique<RerankClient>(*config.paths.reranker_endpoint);
  } else {
    throw ValidationError("no reranker score file or endpoint configured");
  }

  const InvertedIndex index = build_index(corpus, config.bm25);

  std::vector<const Query*> order;
  for (const auto& q : queries.records()) {
    order.push_back(&q);
  }
  std::sort(order.begin(), order.end(), [](const Query* a, const Query* b) { return a->id < b->id; });

  MineContext ctx{config,   corpus, queries,       index,        doc_vectors, query_vectors,
                  registry, positives, scores ? &*scores : nullptr, client.get(), {}};
  ctx.emit.prompt = config.prompt;
  ctx.emit.soft_scores = config.soft_scores;
  ctx.emit.num_negatives = config.mining.num_negatives;

  std::vector<QueryResult> results = process_all(ctx, order, config.workers);

  MineSummary summary;
  summary.queries = order.size();
  std::vector<TeacherScoreSet> teacher;
  std::vector<MinedNegatives> mined;
  std::vector<TrainingRecord> records;
  for (auto& r : results) {
    teacher.push_back(std::move(r.teacher));
    for (auto& m : r.mined) {
      summary.shortfalls += m.shortfall ? 1 : 0;
      mined.push_back(std::move(m));
    }
    for (auto& rec : r.records) {
      records.push_back(std::move(rec));
    }
    summary.dropped_candidates += r.dropped;
  }
  summary.records = records.size();

  const fs::path& out = config.paths.output_dir;
  const std::vector<fs::path> outputs = {out / kTrainingRecordsFile, out / kMinedFile, out / kTeacherScoresFile,
                                         out / kManifestFile};
  try {
    fs::create_directories(out);
    save_training_records(outputs[0], records);
    save_mined(outputs[1], mined);
    save_teacher_scores(outputs[2], teacher);

    json manifest;
    manifest["config"] = config_to_json(config);
    manifest["config_sha256"] = config_hash(config);
    manifest["inputs"] = std::move(inputs);
    manifest["outputs"] = {{kTrainingRecordsFile, sha256_file(outputs[0])},
                           {kMinedFile, sha256_file(outputs[1])},
                           {kTeacherScoresFile, sha256_file(outputs[2])}};
    manifest["counts"] = {{"queries", summary.queries},
                          {"records", summary.records},
                          {"shortfalls", summary.shortfalls},
                          {"dropped_candidates", summary.dropped_candidates}};
    write_text_atomic(outputs[3], manifest.dump(2) + "\n");
  } catch (...) {
    std::error_code ec;
    for (const auto& p : outputs) {
      fs::remove(p, ec);
      fs::path tmp = p;
      tmp += ".tmp";
      fs::remove(tmp, ec);
    }
    throw;
  }
  summary.manifest = outputs[3];
  return summary;
}

}  // namespace embforge
