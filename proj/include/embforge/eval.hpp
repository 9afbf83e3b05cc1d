// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace embforge::eval {

/// One (model, task) score, with the task's category.
struct EvalCell {
  std::string model;
  std::string task;
  std::string category;
  double score = 0.0;
};

/// Complete model x task score table. Models and tasks are kept in
/// ascending name order.
class EvalMatrix {
 public:
  /// Throws ValidationError on a missing or repeated cell, a task listed
  /// under two categories, or a score outside [0, 100].
  static EvalMatrix from_cells(std::span<const EvalCell> cells);

  const std::vector<std::string>& models() const noexcept { return models_; }
  const std::vector<std::string>& tasks() const noexcept { return tasks_; }
  const std::string& category_of(std::size_t task) const { return categories_[task]; }
  /// Category name -> number of tasks, ascending by name.
  const std::map<std::string, std::size_t>& category_sizes() const noexcept { return category_sizes_; }

  std::size_t model_index(std::string_view model) const;
  double score(std::size_t model, std::size_t task) const { return scores_[model * tasks_.size() + task]; }

 private:
  std::vector<std::string> models_;
  std::vector<std::string> tasks_;
  std::vector<std::string> categories_;
  std::map<std::string, std::size_t> category_sizes_;
  std::vector<double> scores_;
};

/// Input file: {"model", "task", "category", "score"} per line.
EvalMatrix load_eval(const std::filesystem::path& path);

/// Unweighted mean over every task.
double task_mean(const EvalMatrix& m, std::string_view model);

/// Mean over the tasks of one category. Throws ValidationError for an
/// unknown category.
double category_mean(const EvalMatrix& m, std::string_view model, std::string_view category);

/// Category means combined with per-category weights. Without explicit
/// weights each category weighs its task count, which equals task_mean.
double category_weighted_mean(const EvalMatrix& m, std::string_view model,
                              const std::optional<std::map<std::string, double>>& weights = std::nullopt);

struct CategoryAverage {
  double mean = 0.0;
  double weight = 0.0;
};

/// sum(mean * weight) / sum(weight). Rebuilds an overall task mean from
/// published category means and task counts.
double recompose_mean(std::span<const CategoryAverage> categories);

struct BordaEntry {
  std::string model;
  double points = 0.0;
  std::size_t rank = 0;
  /// Points equal to another model's; the order between them is by name.
  bool tied = false;
};

struct BordaResult {
  std::map<std::string, double> points;
  std::vector<BordaEntry> ranking;
};

/// Tournament Borda count: on each task every model earns one point per
/// model scoring strictly lower and half a point per other model scoring
/// exactly the same. Totals over tasks; ranking by points descending, then
/// model name. Throws std::invalid_argument with fewer than 2 models.
BordaResult borda_rank(const EvalMatrix& m);

struct ReportRow {
  std::string model;
  std::map<std::string, double> category_means;
  double task_mean = 0.0;
  double weighted_mean = 0.0;
  double borda_points = 0.0;
  std::size_t rank = 0;
  bool tied = false;
};

/// Rows in Borda order.
std::vector<ReportRow> build_report(const EvalMatrix& m,
                                    const std::optional<std::map<std::string, double>>& weights = std::nullopt);
std::string report_table(const EvalMatrix& m, std::span<const ReportRow> rows);
nlohmann::json report_json(const EvalMatrix& m, std::span<const ReportRow> rows);

}  // namespace embforge::eval
