// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

// embforge: command-line front end for the embforge toolkit.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime or
// stage failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "embforge/corpus.hpp"
#include "embforge/dense.hpp"
#include "embforge/error.hpp"
#include "embforge/eval.hpp"
#include "embforge/forge.hpp"
#include "embforge/fusion.hpp"
#include "embforge/lexical.hpp"
#include "embforge/loss.hpp"
#include "embforge/mining.hpp"
#include "embforge/pipeline.hpp"
#include "embforge/rerank.hpp"

namespace fs = std::filesystem;
using namespace embforge;

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

// Settings shared by several subcommands: the config file when given,
// library defaults otherwise.
PipelineConfig settings(const Globals& g) {
  PipelineConfig c;
  if (g.config_path) {
    c = load_config(*g.config_path);
  }
  if (g.seed) {
    c.mining.seed = *g.seed;
  }
  if (g.strict) {
    c.strict = true;
  }
  return c;
}

std::map<std::string, RankedList> runs_by_query(const fs::path& path, Channel expected) {
  std::map<std::string, RankedList> out;
  for (auto& run : load_runs(path)) {
    if (run.list.channel != expected) {
      throw ValidationError("'" + path.string() + "': query '" + run.query_id + "' holds a " +
                            std::string(to_string(run.list.channel)) + " list, expected " +
                            std::string(to_string(expected)));
    }
    if (!out.emplace(run.query_id, std::move(run.list)).second) {
      throw ValidationError("'" + path.string() + "': query '" + run.query_id + "' appears twice");
    }
  }
  return out;
}

std::optional<std::map<std::string, double>> load_weights(const std::optional<fs::path>& path) {
  if (!path) {
    return std::nullopt;
  }
  std::ifstream in(*path);
  if (!in) {
    throw ValidationError("cannot open '" + path->string() + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("'" + path->string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) {
    throw ValidationError("'" + path->string() + "' must map category names to weights");
  }
  std::map<std::string, double> w;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_number()) {
      throw ValidationError("weight for '" + k + "' is not a number");
    }
    w[k] = v.get<double>();
  }
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embforge: hybrid retrieval, hard-negative mining and embedding data tooling"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override mining.seed");
  app.add_flag("--strict", g.strict, "Abort on a missing reranker score instead of dropping the candidate");

  // index-lexical
  auto* idx_lex = app.add_subcommand("index-lexical", "Build a BM25 index; optionally write lexical runs");
  fs::path lex_corpus, lex_out;
  std::optional<fs::path> lex_queries, lex_runs;
  std::size_t lex_top = 50;
  idx_lex->add_option("--corpus", lex_corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  idx_lex->add_option("--out", lex_out, "Index output file")->required();
  idx_lex->add_option("--queries", lex_queries, "Queries to search")->check(CLI::ExistingFile);
  idx_lex->add_option("--runs", lex_runs, "Run output (needs --queries)");
  idx_lex->add_option("--top", lex_top, "Results per query")->check(CLI::PositiveNumber);

  // index-dense
  auto* idx_dense = app.add_subcommand("index-dense", "Exact inner-product search; writes semantic runs");
  fs::path dense_docs, dense_queries, dense_runs;
  std::size_t dense_top = 50;
  idx_dense->add_option("--doc-vectors", dense_docs)->required()->check(CLI::ExistingFile);
  idx_dense->add_option("--query-vectors", dense_queries)->required()->check(CLI::ExistingFile);
  idx_dense->add_option("--runs", dense_runs, "Run output")->required();
  idx_dense->add_option("--top", dense_top, "Results per query")->check(CLI::PositiveNumber);

  // rerank
  auto* rerank = app.add_subcommand("rerank", "Score the union of candidate runs with the reranker");
  std::vector<fs::path> rr_inputs;
  std::optional<fs::path> rr_scores, rr_corpus, rr_queries, rr_cache;
  std::optional<std::string> rr_endpoint;
  fs::path rr_out;
  rerank->add_option("--runs", rr_inputs, "Candidate run files")->required()->check(CLI::ExistingFile);
  auto* rr_scores_opt = rerank->add_option("--scores", rr_scores, "Precomputed score file")->check(CLI::ExistingFile);
  auto* rr_endpoint_opt = rerank->add_option("--endpoint", rr_endpoint, "Reranker service URL");
  rr_scores_opt->excludes(rr_endpoint_opt);
  rerank->add_option("--corpus", rr_corpus, "Corpus (needed with --endpoint)")->check(CLI::ExistingFile);
  rerank->add_option("--queries", rr_queries, "Queries (needed with --endpoint)")->check(CLI::ExistingFile);
  rerank->add_option("--cache", rr_cache, "Score cache file, read if present and rewritten");
  rerank->add_option("--out", rr_out, "Reranker run output")->required();

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Reciprocal rank fusion of lexical, semantic and reranker runs");
  fs::path fu_lex, fu_sem, fu_rer, fu_out;
  std::optional<double> fu_k;
  fuse->add_option("--lexical", fu_lex)->required()->check(CLI::ExistingFile);
  fuse->add_option("--semantic", fu_sem)->required()->check(CLI::ExistingFile);
  fuse->add_option("--reranker", fu_rer)->required()->check(CLI::ExistingFile);
  fuse->add_option("--k", fu_k, "RRF constant (default 60 or rrf_k from --config)");
  fuse->add_option("--out", fu_out, "Teacher score output")->required();

  // mine
  auto* mine = app.add_subcommand("mine", "Run the full mining pipeline from --config");
  std::optional<std::size_t> mine_workers;
  std::optional<fs::path> mine_out;
  mine->add_option("--workers", mine_workers, "Worker threads")->check(CLI::Range(1, 256));
  mine->add_option("--out-dir", mine_out, "Override paths.output_dir");

  // convert-nli
  auto* nli = app.add_subcommand("convert-nli", "Turn NLI triples into STS pairs");
  fs::path nli_in, nli_out;
  std::optional<double> nli_high, nli_low;
  std::optional<std::string> nli_endpoint;
  nli->add_option("--in", nli_in)->required()->check(CLI::ExistingFile);
  nli->add_option("--out", nli_out)->required();
  nli->add_option("--high", nli_high, "Similarity for entailment");
  nli->add_option("--low", nli_low, "Similarity for contradiction");
  nli->add_option("--endpoint", nli_endpoint, "Reranker service for soft scores");

  // dedup
  auto* dd = app.add_subcommand("dedup", "Expand grouped pairs and drop duplicate (query, positive) records");
  fs::path dd_in, dd_out;
  dd->add_option("--in", dd_in, "Pairs JSONL {query, positives, task}")->required()->check(CLI::ExistingFile);
  dd->add_option("--out", dd_out)->required();

  // format-prompts
  auto* fp = app.add_subcommand("format-prompts", "Render instruction prompts for query/positive records");
  fs::path fp_in, fp_out;
  std::optional<fs::path> fp_instructions;
  fp->add_option("--in", fp_in, "Query/positive JSONL")->required()->check(CLI::ExistingFile);
  fp->add_option("--out", fp_out)->required();
  fp->add_option("--instructions", fp_instructions, "Instruction overrides JSONL")->check(CLI::ExistingFile);

  // loss
  auto* loss_cmd = app.add_subcommand("loss", "Evaluate InfoNCE, distillation and blended losses on a batch file");
  fs::path loss_batch;
  std::optional<double> loss_tau, loss_tau_t, loss_lambda;
  bool loss_in_batch = false;
  loss_cmd->add_option("--batch", loss_batch)->required()->check(CLI::ExistingFile);
  loss_cmd->add_option("--tau", loss_tau);
  loss_cmd->add_option("--tau-teacher", loss_tau_t);
  loss_cmd->add_option("--lambda", loss_lambda);
  loss_cmd->add_flag("--in-batch", loss_in_batch);

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the loss gradients on a batch file");
  fs::path gc_batch;
  std::optional<double> gc_tau, gc_tau_t, gc_lambda;
  double gc_eps = 1e-3;
  double gc_tol = 1e-4;
  bool gc_in_batch = false;
  gc->add_option("--batch", gc_batch)->required()->check(CLI::ExistingFile);
  gc->add_option("--tau", gc_tau);
  gc->add_option("--tau-teacher", gc_tau_t);
  gc->add_option("--lambda", gc_lambda);
  gc->add_option("--eps", gc_eps, "Central-difference step");
  gc->add_option("--tolerance", gc_tol, "Fail above this relative error");
  gc->add_flag("--in-batch", gc_in_batch);

  // eval
  auto* ev = app.add_subcommand("eval", "Aggregate benchmark scores: means and Borda ranking");
  fs::path ev_scores;
  std::optional<fs::path> ev_weights;
  bool ev_json = false;
  ev->add_option("--scores", ev_scores, "JSONL {model, task, category, score}")->required()->check(CLI::ExistingFile);
  ev->add_option("--weights", ev_weights, "JSON object of category weights")->check(CLI::ExistingFile);
  ev->add_flag("--json", ev_json, "Print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*idx_lex) {
      const PipelineConfig cfg = settings(g);
      const Corpus corpus = load_corpus(lex_corpus);
      const InvertedIndex index = build_index(corpus, cfg.bm25);
      save_index(lex_out, index);
      std::cerr << "indexed " << index.doc_count() << " documents, " << index.vocabulary_size() << " terms\n";
      if (lex_runs) {
        if (!lex_queries) {
          throw ValidationError("--runs needs --queries");
        }
        const QuerySet queries = load_queries(*lex_queries);
        std::vector<QueryRun> runs;
        for (const auto& q : queries.records()) {
          runs.push_back({q.id, search_lexical(index, cfg.bm25, q, lex_top)});
        }
        save_runs(*lex_runs, runs);
      }
    } else if (*idx_dense) {
      const VectorStore docs = load_vectors(dense_docs);
      const VectorStore queries = load_vectors(dense_queries);
      std::vector<QueryRun> runs;
      for (std::size_t i = 0; i < queries.size(); ++i) {
        runs.push_back({queries.ids()[i], search_semantic(docs, queries.vector_at(i), dense_top)});
      }
      save_runs(dense_runs, runs);
      std::cerr << "searched " << queries.size() << " queries over " << docs.size() << " vectors\n";
    } else if (*rerank) {
      const PipelineConfig cfg = settings(g);
      std::map<std::string, std::set<std::string>> pools;
      for (const auto& p : rr_inputs) {
        for (const auto& run : load_runs(p)) {
          for (const auto& e : run.list.entries) {
            pools[run.query_id].insert(e.doc_id);
          }
        }
      }
      std::vector<QueryRun> out;
      std::size_t dropped = 0;
      if (rr_scores) {
        const ScoreSet scores = load_scores(*rr_scores);
        for (const auto& [qid, docs] : pools) {
          std::vector<RankedEntry> entries;
          for (const auto& d : docs) {
            if (auto s = scores.find(qid, d)) {
              entries.push_back({d, *s});
            } else if (cfg.strict) {
              throw StageError("rerank", qid, "missing reranker score for pair (" + qid + ", " + d + ")");
            } else {
              ++dropped;
            }
          }
          out.push_back({qid, make_ranked_list(Channel::kReranker, std::move(entries))});
        }
      } else {
        if (!rr_endpoint || !rr_corpus || !rr_queries) {
          throw ValidationError("rerank needs --scores, or --endpoint with --corpus and --queries");
        }
        const Corpus corpus = load_corpus(*rr_corpus);
        const QuerySet queries = load_queries(*rr_queries);
        RerankClient client(*rr_endpoint);
        if (rr_cache && fs::exists(*rr_cache)) {
          client.load_cache(*rr_cache);
        }
        for (const auto& [qid, docs] : pools) {
          std::vector<TextPair> pairs;
          for (const auto& d : docs) {
            pairs.push_back({queries.at(qid).text, corpus.at(d).text});
          }
          std::vector<double> s;
          try {
            s = client.request_scores(pairs);
          } catch (const Error& e) {
            throw StageError("rerank", qid, e.what());
          }
          std::vector<RankedEntry> entries;
          std::size_t i = 0;
          for (const auto& d : docs) {
            entries.push_back({d, s[i++]});
          }
          out.push_back({qid, make_ranked_list(Channel::kReranker, std::move(entries))});
        }
        if (rr_cache) {
          client.save_cache(*rr_cache);
        }
        std::cerr << client.upstream_calls() << " upstream calls\n";
      }
      save_runs(rr_out, out);
      if (dropped > 0) {
        std::cerr << "dropped " << dropped << " candidates without a score\n";
      }
    } else if (*fuse) {
      const PipelineConfig cfg = settings(g);
      const double k = fu_k.value_or(cfg.rrf_k);
      auto lex = runs_by_query(fu_lex, Channel::kLexical);
      auto sem = runs_by_query(fu_sem, Channel::kSemantic);
      auto rer = runs_by_query(fu_rer, Channel::kReranker);
      std::set<std::string> ids;
      for (const auto* m : {&lex, &sem, &rer}) {
        for (const auto& [id, list] : *m) ids.insert(id);
      }
      const auto get = [](std::map<std::string, RankedList>& m, const std::string& id, Channel c) {
        auto it = m.find(id);
        return it == m.end() ? RankedList{c, {}} : it->second;
      };
      std::vector<TeacherScoreSet> sets;
      for (const auto& id : ids) {
        sets.push_back(build_teacher_scores(Query{id, {}, {}}, get(lex, id, Channel::kLexical),
                                            get(sem, id, Channel::kSemantic), get(rer, id, Channel::kReranker), k));
      }
      save_teacher_scores(fu_out, sets);
    } else if (*mine) {
      if (!g.config_path) {
        throw ValidationError("mine needs --config");
      }
      PipelineConfig cfg = settings(g);
      if (mine_workers) cfg.workers = *mine_workers;
      if (mine_out) cfg.paths.output_dir = *mine_out;
      const MineSummary s = run_mine(cfg);
      std::cout << "queries " << s.queries << ", records " << s.records << ", shortfalls " << s.shortfalls
                << ", dropped candidates " << s.dropped_candidates << "\nmanifest " << s.manifest.string() << '\n';
    } else if (*nli) {
      const PipelineConfig cfg = settings(g);
      const auto records = load_nli(nli_in);
      auto sts = convert_nli(records, nli_high.value_or(cfg.nli.high), nli_low.value_or(cfg.nli.low));
      if (nli_endpoint) {
        RerankClient client(*nli_endpoint);
        attach_soft_scores(sts, client);
      }
      save_sts(nli_out, sts);
      std::cerr << records.size() << " NLI records -> " << sts.size() << " STS pairs\n";
    } else if (*dd) {
      const auto pairs = load_pairs(dd_in);
      const auto expanded = expand_pairs(pairs);
      const auto unique = dedup(expanded);
      save_query_positives(dd_out, unique);
      std::cerr << expanded.size() << " expanded, " << unique.size() << " kept\n";
    } else if (*fp) {
      const PipelineConfig cfg = settings(g);
      InstructionRegistry registry = InstructionRegistry::builtin();
      if (fp_instructions) registry.merge_overrides(*fp_instructions);
      if (cfg.paths.instructions && !fp_instructions) registry.merge_overrides(*cfg.paths.instructions);
      const auto pairs = load_query_positives(fp_in);
      save_training_records(fp_out, records_from_pairs(pairs, registry, cfg.prompt));
    } else if (*loss_cmd) {
      const PipelineConfig cfg = settings(g);
      const double tau = loss_tau.value_or(cfg.loss.tau);
      const double lambda = loss_lambda.value_or(cfg.loss.lambda);
      const auto bf = loss::load_batch(loss_batch, tau, loss_tau_t.value_or(cfg.loss.tau_teacher), loss_in_batch);
      std::printf("infonce      %.12g\n", loss::infonce_loss(bf.batch));
      if (bf.teacher) {
        std::printf("soft_distill %.12g\n", loss::soft_distill_loss(bf.batch, *bf.teacher));
        std::printf("blended      %.12g  (lambda %.3g)\n", loss::blended_loss(bf.batch, *bf.teacher, lambda), lambda);
      }
    } else if (*gc) {
      const PipelineConfig cfg = settings(g);
      const double tau = gc_tau.value_or(cfg.loss.tau);
      const double lambda = gc_lambda.value_or(cfg.loss.lambda);
      const auto bf = loss::load_batch(gc_batch, tau, gc_tau_t.value_or(cfg.loss.tau_teacher), gc_in_batch);
      std::vector<std::pair<std::string, loss::Objective>> objectives{{"infonce", loss::infonce_objective()}};
      if (bf.teacher) {
        objectives.emplace_back("soft_distill", loss::soft_distill_objective(*bf.teacher));
        objectives.emplace_back("blended", loss::blended_objective(*bf.teacher, lambda));
      }
      bool ok = true;
      for (const auto& [name, obj] : objectives) {
        const auto r = loss::grad_check(obj, bf.batch, gc_eps);
        const bool pass = r.max_relative_error < gc_tol;
        ok = ok && pass;
        std::printf("%-12s max_rel_err %.3e at %zu (analytic %.9g, numeric %.9g) %s\n", name.c_str(),
                    r.max_relative_error, r.worst_coordinate, r.analytic, r.numeric, pass ? "ok" : "FAIL");
      }
      return ok ? 0 : kExitRuntime;
    } else if (*ev) {
      const auto matrix = eval::load_eval(ev_scores);
      const auto rows = eval::build_report(matrix, load_weights(ev_weights));
      if (ev_json) {
        std::cout << eval::report_json(matrix, rows).dump(2) << '\n';
      } else {
        std::cout << eval::report_table(matrix, rows);
      }
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
