// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "embforge/corpus.hpp"
#include "embforge/error.hpp"
#include "embforge/eval.hpp"
#include "embforge/forge.hpp"
#include "embforge/fusion.hpp"
#include "embforge/lexical.hpp"
#include "embforge/loss.hpp"
#include "embforge/mining.hpp"
#include "embforge/pipeline.hpp"
#include "embforge/text.hpp"

namespace py = pybind11;
using namespace embforge;

namespace {

using Scored = std::pair<std::string, double>;

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

std::vector<Scored> entries_of(const RankedList& list) {
  std::vector<Scored> out;
  for (const auto& e : list.entries) out.emplace_back(e.doc_id, e.score);
  return out;
}

loss::SimBatch make_batch(std::vector<double> pos, std::vector<std::vector<double>> neg, double tau, bool in_batch,
                          std::optional<std::vector<std::vector<double>>> in_batch_sims) {
  loss::SimBatch b;
  b.pos = std::move(pos);
  b.neg = std::move(neg);
  b.tau = tau;
  b.in_batch = in_batch;
  b.in_batch_sims = std::move(in_batch_sims);
  return b;
}

loss::TeacherDistribution make_teacher(std::vector<std::vector<double>> values, double tau, bool probabilities) {
  return {std::move(values), tau, probabilities};
}

std::vector<eval::EvalCell> cells_of(const std::vector<py::dict>& rows) {
  std::vector<eval::EvalCell> cells;
  for (const auto& r : rows) {
    cells.push_back({r["model"].cast<std::string>(), r["task"].cast<std::string>(), r["category"].cast<std::string>(),
                     r["score"].cast<double>()});
  }
  return cells;
}

// Python-side view of a BM25 index over in-memory documents.
class PyIndex {
 public:
  PyIndex(const std::vector<py::dict>& docs, double k1, double b) : params_{k1, b} {
    std::vector<Document> corpus;
    for (const auto& d : docs) {
      Document doc{d["id"].cast<std::string>(), std::nullopt, d["text"].cast<std::string>()};
      if (d.contains("title") && !d["title"].is_none()) doc.title = d["title"].cast<std::string>();
      corpus.push_back(std::move(doc));
    }
    index_ = build_index(corpus, params_);
  }

  std::vector<Scored> search(const std::string& query, std::size_t n) const {
    return entries_of(search_lexical(index_, params_, query, n));
  }
  double score(const std::string& query, const std::string& doc_id) const {
    return bm25_score(index_, params_, query, doc_id);
  }
  double term_idf(const std::string& term) const { return idf(index_, term); }
  std::size_t size() const { return index_.doc_count(); }

 private:
  Bm25Params params_;
  InvertedIndex index_;
};

}  // namespace

PYBIND11_MODULE(_embforge, m) {
  m.doc() = "Embedding training-data toolkit: retrieval, fusion, mining, losses and evaluation.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<StageError>(m, "StageError", base.ptr());

  // Text
  m.def("nfc", &text::nfc, py::arg("text"));
  m.def("normalize_key", &text::normalize_key, py::arg("text"));
  m.def("tokenize", &text::tokenize, py::arg("text"));

  // Lexical
  py::class_<PyIndex>(m, "Bm25Index")
      .def(py::init<const std::vector<py::dict>&, double, double>(), py::arg("docs"), py::arg("k1") = 1.2,
           py::arg("b") = 0.75, "docs: dicts with 'id', 'text' and optional 'title'.")
      .def("search", &PyIndex::search, py::arg("query"), py::arg("n"))
      .def("score", &PyIndex::score, py::arg("query"), py::arg("doc_id"))
      .def("idf", &PyIndex::term_idf, py::arg("term"))
      .def("__len__", &PyIndex::size);

  // Fusion
  m.def(
      "rrf_fuse",
      [](const std::vector<std::vector<std::string>>& lists, double k) {
        std::vector<RankedList> ranked;
        for (const auto& ids : lists) {
          RankedList l{Channel::kLexical, {}};
          double s = static_cast<double>(ids.size());
          for (const auto& id : ids) l.entries.push_back({id, s--});
          ranked.push_back(std::move(l));
        }
        return entries_of(rrf_fuse(ranked, k));
      },
      py::arg("lists"), py::arg("k") = kDefaultRrfK, "Fuses lists of ids given in rank order.");

  // Mining
  m.def("margin_threshold", &margin_threshold, py::arg("positive_score"), py::arg("margin"));
  m.def("query_seed", &query_seed, py::arg("seed"), py::arg("query_id"));
  m.def(
      "mine_negatives",
      [](const std::vector<Scored>& candidates, const std::string& positive_id, double margin, std::size_t top_k,
         std::size_t num_negatives, std::uint64_t seed, const std::string& query_id) {
        std::vector<ScoredDoc> docs;
        for (const auto& [id, s] : candidates) docs.push_back({id, s});
        std::sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
          return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
        });
        MiningConfig cfg;
        cfg.margin = margin;
        cfg.top_k = top_k;
        cfg.num_negatives = num_negatives;
        cfg.seed = seed;
        cfg.validate();
        const auto filtered = filter_candidates(docs, positive_id, std::nullopt, margin);
        double positive_score = 0.0;
        for (const auto& d : docs) {
          if (d.doc_id == positive_id) positive_score = d.score;
        }
        return to_python(mined_to_json(sample_negatives(filtered, cfg, query_id, positive_id, positive_score)));
      },
      py::arg("candidates"), py::arg("positive_id"), py::arg("margin") = 0.95, py::arg("top_k") = 30,
      py::arg("num_negatives") = 7, py::arg("seed") = 0, py::arg("query_id") = "q",
      "candidates: (doc_id, score) pairs including the positive.");

  // Losses
  m.def("cosine_sim", [](const std::vector<double>& u, const std::vector<double>& v) { return loss::cosine_sim(u, v); },
        py::arg("u"), py::arg("v"));
  m.def(
      "infonce_loss",
      [](std::vector<double> pos, std::vector<std::vector<double>> neg, double tau, bool in_batch,
         std::optional<std::vector<std::vector<double>>> sims) {
        return loss::infonce_loss(make_batch(std::move(pos), std::move(neg), tau, in_batch, std::move(sims)));
      },
      py::arg("pos"), py::arg("neg"), py::arg("tau") = 0.05, py::arg("in_batch") = false,
      py::arg("in_batch_sims") = py::none());
  m.def(
      "infonce_gradient",
      [](std::vector<double> pos, std::vector<std::vector<double>> neg, double tau, bool in_batch,
         std::optional<std::vector<std::vector<double>>> sims) {
        return loss::infonce_gradient(make_batch(std::move(pos), std::move(neg), tau, in_batch, std::move(sims)));
      },
      py::arg("pos"), py::arg("neg"), py::arg("tau") = 0.05, py::arg("in_batch") = false,
      py::arg("in_batch_sims") = py::none());
  m.def(
      "soft_distill_loss",
      [](std::vector<double> pos, std::vector<std::vector<double>> neg, std::vector<std::vector<double>> teacher,
         double tau, double tau_teacher, bool probabilities) {
        return loss::soft_distill_loss(make_batch(std::move(pos), std::move(neg), tau, false, std::nullopt),
                                       make_teacher(std::move(teacher), tau_teacher, probabilities));
      },
      py::arg("pos"), py::arg("neg"), py::arg("teacher"), py::arg("tau") = 0.05, py::arg("tau_teacher") = 0.05,
      py::arg("probabilities") = false);
  m.def(
      "grad_check",
      [](const std::string& objective, std::vector<double> pos, std::vector<std::vector<double>> neg,
         std::optional<std::vector<std::vector<double>>> teacher, double tau, double tau_teacher, double lambda,
         bool in_batch, double eps) {
        const auto batch = make_batch(std::move(pos), std::move(neg), tau, in_batch, std::nullopt);
        const auto t = make_teacher(teacher.value_or(std::vector<std::vector<double>>{}), tau_teacher, false);
        loss::Objective obj;
        if (objective == "infonce") {
          obj = loss::infonce_objective();
        } else if (objective == "distill") {
          obj = loss::soft_distill_objective(t);
        } else if (objective == "blend") {
          obj = loss::blended_objective(t, lambda);
        } else {
          throw std::invalid_argument("objective must be 'infonce', 'distill' or 'blend'");
        }
        return loss::grad_check(obj, batch, eps).max_relative_error;
      },
      py::arg("objective"), py::arg("pos"), py::arg("neg"), py::arg("teacher") = py::none(), py::arg("tau") = 0.05,
      py::arg("tau_teacher") = 0.05, py::arg("lambda_") = 0.5, py::arg("in_batch") = false, py::arg("eps") = 1e-3,
      "Returns the largest relative gradient error.");

  // Evaluation
  m.def(
      "borda_rank",
      [](const std::vector<py::dict>& rows) {
        const auto r = eval::borda_rank(eval::EvalMatrix::from_cells(cells_of(rows)));
        py::list ranking;
        for (const auto& e : r.ranking) {
          py::dict d;
          d["model"] = e.model;
          d["points"] = e.points;
          d["rank"] = e.rank;
          d["tied"] = e.tied;
          ranking.append(d);
        }
        return ranking;
      },
      py::arg("scores"), "scores: dicts with 'model', 'task', 'category' and 'score'.");
  m.def(
      "task_mean",
      [](const std::vector<py::dict>& rows, const std::string& model) {
        return eval::task_mean(eval::EvalMatrix::from_cells(cells_of(rows)), model);
      },
      py::arg("scores"), py::arg("model"));
  m.def(
      "recompose_mean",
      [](const std::vector<std::pair<double, double>>& parts) {
        std::vector<eval::CategoryAverage> cats;
        for (const auto& [mean, weight] : parts) cats.push_back({mean, weight});
        return eval::recompose_mean(cats);
      },
      py::arg("categories"), "categories: (mean, weight) pairs.");
  m.def(
      "eval_report",
      [](const std::vector<py::dict>& rows, std::optional<std::map<std::string, double>> weights) {
        const auto matrix = eval::EvalMatrix::from_cells(cells_of(rows));
        return to_python(eval::report_json(matrix, eval::build_report(matrix, weights)));
      },
      py::arg("scores"), py::arg("weights") = py::none());

  // Data forge
  m.def(
      "convert_nli",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& rows, double high, double low) {
        std::vector<NliRecord> in;
        for (const auto& [p, h, l] : rows) in.push_back({p, h, l});
        std::vector<std::tuple<std::string, std::string, double>> out;
        for (const auto& r : convert_nli(in, high, low)) out.emplace_back(r.sentence_a, r.sentence_b, r.similarity);
        return out;
      },
      py::arg("records"), py::arg("high") = 1.0, py::arg("low") = 0.0,
      "records: (premise, hypothesis, label) tuples.");
  m.def(
      "expand_pairs",
      [](const std::vector<std::tuple<std::string, std::vector<std::string>, std::string>>& rows) {
        std::vector<RawPair> in;
        for (const auto& [q, ps, t] : rows) in.push_back({q, ps, t});
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& r : expand_pairs(in)) out.emplace_back(r.query, r.positive, r.source_task);
        return out;
      },
      py::arg("pairs"));
  m.def(
      "dedup",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& rows) {
        std::vector<QueryPositive> in;
        for (const auto& [q, p, t] : rows) in.push_back({q, p, t});
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& r : dedup(in)) out.emplace_back(r.query, r.positive, r.source_task);
        return out;
      },
      py::arg("records"));
  m.def(
      "instruction_for", [](const std::string& task) { return InstructionRegistry::builtin().instruction_for(task); },
      py::arg("task"));
  m.def("builtin_tasks", []() { return InstructionRegistry::builtin().tasks(); });
  m.def(
      "format_prompt",
      [](const std::string& instruction, const std::string& query,
         const std::vector<std::pair<std::string, std::string>>& shots, const std::string& eos_marker) {
        std::vector<Shot> s;
        for (const auto& [q, p] : shots) s.push_back({q, p});
        return format_prompt(instruction, s, query, eos_marker);
      },
      py::arg("instruction"), py::arg("query"), py::arg("shots") = std::vector<std::pair<std::string, std::string>>{},
      py::arg("eos_marker") = std::string(kDefaultEosMarker));

  // Pipeline
  m.def(
      "validate_config", [](const std::filesystem::path& path) { return validate_config(path); }, py::arg("path"),
      "Every problem found, as 'dotted.key: message' strings.");
  m.def(
      "config_hash", [](const std::filesystem::path& path) { return config_hash(load_config(path)); },
      py::arg("path"));
  m.def(
      "run_mine",
      [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> output_dir,
         std::optional<std::size_t> workers, std::optional<bool> strict) {
        auto cfg = load_config(config_path);
        if (output_dir) cfg.paths.output_dir = *output_dir;
        if (workers) cfg.workers = *workers;
        if (strict) cfg.strict = *strict;
        MineSummary s;
        {
          py::gil_scoped_release release;
          s = run_mine(cfg);
        }
        py::dict d;
        d["queries"] = s.queries;
        d["records"] = s.records;
        d["shortfalls"] = s.shortfalls;
        d["dropped_candidates"] = s.dropped_candidates;
        d["manifest"] = s.manifest.string();
        return d;
      },
      py::arg("config"), py::arg("output_dir") = py::none(), py::arg("workers") = py::none(),
      py::arg("strict") = py::none());
}
