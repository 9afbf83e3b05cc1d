// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"

namespace embforge::eval {

EvalMatrix EvalMatrix::from_cells(std::span<const EvalCell> cells) {
  EvalMatrix m;
  std::map<std::string, std::string> task_category;
  std::set<std::string> models;
  for (const auto& c : cells) {
    if (!std::isfinite(c.score) || c.score < 0.0 || c.score > 100.0) {
      throw ValidationError("score of (" + c.model + ", " + c.task + ") is outside [0, 100]");
    }
    auto [it, inserted] = task_category.emplace(c.task, c.category);
    if (!inserted && it->second != c.category) {
      throw ValidationError("task '" + c.task + "' is listed under categories '" + it->second + "' and '" +
                            c.category + "'");
    }
    models.insert(c.model);
  }
  m.models_.assign(models.begin(), models.end());
  for (const auto& [task, category] : task_category) {
    m.tasks_.push_back(task);
    m.categories_.push_back(category);
    ++m.category_sizes_[category];
  }

  const std::size_t width = m.tasks_.size();
  m.scores_.assign(m.models_.size() * width, 0.0);
  std::vector<char> filled(m.scores_.size(), 0);
  for (const auto& c : cells) {
    const std::size_t mi = m.model_index(c.model);
    const auto ti = static_cast<std::size_t>(std::lower_bound(m.tasks_.begin(), m.tasks_.end(), c.task) -
                                             m.tasks_.begin());
    const std::size_t at = mi * width + ti;
    if (filled[at]) {
      throw ValidationError("duplicate score for (" + c.model + ", " + c.task + ")");
    }
    filled[at] = 1;
    m.scores_[at] = c.score;
  }
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!filled[i]) {
      throw ValidationError("missing score for (" + m.models_[i / width] + ", " + m.tasks_[i % width] + ")");
    }
  }
  return m;
}

std::size_t EvalMatrix::model_index(std::string_view model) const {
  auto it = std::lower_bound(models_.begin(), models_.end(), model);
  if (it == models_.end() || *it != model) {
    throw ValidationError("unknown model '" + std::string(model) + "'");
  }
  return static_cast<std::size_t>(it - models_.begin());
}

EvalMatrix load_eval(const std::filesystem::path& path) {
  std::vector<EvalCell> cells;
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    cells.push_back({jsonl::require_string(rec, "model"), jsonl::require_string(rec, "task"),
                     jsonl::require_string(rec, "category"), jsonl::require_number(rec, "score")});
  });
  if (cells.empty()) {
    throw ValidationError("'" + path.string() + "' holds no scores");
  }
  return EvalMatrix::from_cells(cells);
}

double task_mean(const EvalMatrix& m, std::string_view model) {
  const std::size_t mi = m.model_index(model);
  double sum = 0.0;
  for (std::size_t t = 0; t < m.tasks().size(); ++t) {
    sum += m.score(mi, t);
  }
  return sum / static_cast<double>(m.tasks().size());
}

double category_mean(const EvalMatrix& m, std::string_view model, std::string_view category) {
  const std::size_t mi = m.model_index(model);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < m.tasks().size(); ++t) {
    if (m.category_of(t) == category) {
      sum += m.score(mi, t);
      ++n;
    }
  }
  if (n == 0) {
    throw ValidationError("unknown category '" + std::string(category) + "'");
  }
  return sum / static_cast<double>(n);
}

double category_weighted_mean(const EvalMatrix& m, std::string_view model,
                              const std::optional<std::map<std::string, double>>& weights) {
  std::vector<CategoryAverage> parts;
  for (const auto& [category, size] : m.category_sizes()) {
    double w = static_cast<double>(size);
    if (weights) {
      auto it = weights->find(category);
      if (it == weights->end()) {
        throw ValidationError("no weight given for category '" + category + "'");
      }
      w = it->second;
    }
    parts.push_back({category_mean(m, model, category), w});
  }
  return recompose_mean(parts);
}

double recompose_mean(std::span<const CategoryAverage> categories) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& c : categories) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw std::invalid_argument("category weights must be finite and non-negative");
    }
    num += c.mean * c.weight;
    den += c.weight;
  }
  if (!(den > 0.0)) {
    throw std::invalid_argument("category weights sum to zero");
  }
  return num / den;
}

BordaResult borda_rank(const EvalMatrix& m) {
  const std::size_t models = m.models().size();
  if (models < 2) {
    throw std::invalid_argument("borda_rank needs at least 2 models");
  }
  std::vector<double> points(models, 0.0);
  for (std::size_t t = 0; t < m.tasks().size(); ++t) {
    for (std::size_t a = 0; a < models; ++a) {
      for (std::size_t b = 0; b < models; ++b) {
        if (a == b) {
          continue;
        }
        const double sa = m.score(a, t);
        const double sb = m.score(b, t);
        if (sa > sb) {
          points[a] += 1.0;
        } else if (sa == sb) {
          points[a] += 0.5;
        }
      }
    }
  }
  BordaResult result;
  for (std::size_t i = 0; i < models; ++i) {
    result.points[m.models()[i]] = points[i];
    result.ranking.push_back({m.models()[i], points[i], 0, false});
  }
  std::stable_sort(result.ranking.begin(), result.ranking.end(), [](const BordaEntry& a, const BordaEntry& b) {
    return a.points != b.points ? a.points > b.points : a.model < b.model;
  });
  for (std::size_t i = 0; i < result.ranking.size(); ++i) {
    result.ranking[i].rank = i + 1;
    const bool same_prev = i > 0 && result.ranking[i - 1].points == result.ranking[i].points;
    const bool same_next = i + 1 < result.ranking.size() && result.ranking[i + 1].points == result.ranking[i].points;
    result.ranking[i].tied = same_prev || same_next;
  }
  return result;
}

std::vector<ReportRow> build_report(const EvalMatrix& m, const std::optional<std::map<std::string, double>>& weights) {
  const BordaResult borda = borda_rank(m);
  std::vector<ReportRow> rows;
  for (const auto& e : borda.ranking) {
    ReportRow row;
    row.model = e.model;
    for (const auto& [category, size] : m.category_sizes()) {
      row.category_means[category] = category_mean(m, e.model, category);
    }
    row.task_mean = task_mean(m, e.model);
    row.weighted_mean = category_weighted_mean(m, e.model, weights);
    row.borda_points = e.points;
    row.rank = e.rank;
    row.tied = e.tied;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string report_table(const EvalMatrix& m, std::span<const ReportRow> rows) {
  std::size_t name_width = 5;
  for (const auto& r : rows) {
    name_width = std::max(name_width, r.model.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(6) << "Rank" << std::setw(static_cast<int>(name_width) + 2) << "Model";
  for (const auto& [category, size] : m.category_sizes()) {
    out << std::right << std::setw(static_cast<int>(std::max<std::size_t>(category.size(), 7)) + 2)
        << (category + "(" + std::to_string(size) + ")");
  }
  out << std::setw(12) << "Mean(Task)" << std::setw(12) << "Weighted" << std::setw(10) << "Borda" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(6) << (std::to_string(r.rank) + (r.tied ? "=" : ""))
        << std::setw(static_cast<int>(name_width) + 2) << r.model << std::right;
    for (const auto& [category, size] : m.category_sizes()) {
      const int w = static_cast<int>(std::max<std::size_t>(category.size(), 7)) + 2 +
                    static_cast<int>(std::to_string(size).size()) + 2;
      out << std::setw(w) << r.category_means.at(category);
    }
    out << std::setw(12) << r.task_mean << std::setw(12) << r.weighted_mean << std::setw(10) << std::setprecision(1)
        << r.borda_points << std::setprecision(2) << '\n';
  }
  return out.str();
}

nlohmann::json report_json(const EvalMatrix& m, std::span<const ReportRow> rows) {
  nlohmann::json out;
  nlohmann::json categories = nlohmann::json::object();
  for (const auto& [category, size] : m.category_sizes()) {
    categories[category] = size;
  }
  out["categories"] = std::move(categories);
  out["tasks"] = m.tasks().size();
  nlohmann::json models = nlohmann::json::array();
  for (const auto& r : rows) {
    models.push_back({{"model", r.model},
                      {"rank", r.rank},
                      {"tied", r.tied},
                      {"borda_points", r.borda_points},
                      {"task_mean", r.task_mean},
                      {"weighted_mean", r.weighted_mean},
                      {"category_means", r.category_means}});
  }
  out["models"] = std::move(models);
  return out;
}

}  // namespace embforge::eval
