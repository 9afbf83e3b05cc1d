// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "embforge/error.hpp"
#include "embforge/eval.hpp"
#include "helpers.hpp"
#include "leaderboard.hpp"

using namespace embforge;
using namespace embforge::eval;

namespace {

std::vector<EvalCell> random_cells(std::mt19937_64& rng, std::size_t models, std::size_t tasks,
                                   bool coarse) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::uniform_int_distribution<int> grid(0, 4);
  std::vector<EvalCell> cells;
  for (std::size_t m = 0; m < models; ++m) {
    for (std::size_t t = 0; t < tasks; ++t) {
      // A coarse grid forces ties.
      const double s = coarse ? 20.0 * grid(rng) : u(rng);
      cells.push_back({"m" + std::to_string(m), "t" + std::to_string(t), "c" + std::to_string(t % 3), s});
    }
  }
  return cells;
}

}  // namespace

TEST_CASE("leaderboard task means recompose from category means") {
  const auto lb = testing::read_leaderboard(testing::fixtures() / "leaderboard.tsv");
  REQUIRE(lb.rows.size() == 11);
  REQUIRE(lb.total_tasks == 41);
  for (const auto& row : lb.rows) {
    std::vector<CategoryAverage> parts;
    for (std::size_t c = 0; c < lb.categories.size(); ++c) {
      parts.push_back({row.category_means[c], static_cast<double>(lb.task_counts[c])});
    }
    const double mean = recompose_mean(parts);
    INFO(row.model);
    CHECK(std::abs(mean - row.printed_mean) <= 0.005);
  }
}

TEST_CASE("leaderboard rows through a synthetic score matrix") {
  // Every task of a category carries the category mean, so the matrix
  // path must agree with the category path.
  const auto lb = testing::read_leaderboard(testing::fixtures() / "leaderboard.tsv");
  std::vector<EvalCell> cells;
  for (const auto& row : lb.rows) {
    for (std::size_t c = 0; c < lb.categories.size(); ++c) {
      for (int t = 0; t < lb.task_counts[c]; ++t) {
        cells.push_back({row.model, lb.categories[c] + "-" + std::to_string(t), lb.categories[c],
                         row.category_means[c]});
      }
    }
  }
  const auto m = EvalMatrix::from_cells(cells);
  CHECK(m.tasks().size() == 41);
  for (const auto& row : lb.rows) {
    INFO(row.model);
    CHECK(std::abs(task_mean(m, row.model) - row.printed_mean) <= 0.005);
    CHECK(category_weighted_mean(m, row.model) == doctest::Approx(task_mean(m, row.model)).epsilon(1e-12));
  }
  CHECK(task_mean(m, "LGAI-Embedding-Preview") == doctest::Approx(74.12).epsilon(0.005 / 74.12));
  CHECK(task_mean(m, "Seed1.5-Embedding") == doctest::Approx(74.76).epsilon(0.005 / 74.76));
  CHECK(category_mean(m, "LGAI-Embedding-Preview", "Summarization") == 38.93);
}

TEST_CASE("category means weighted by counts equal the task mean") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = EvalMatrix::from_cells(random_cells(rng, 3, 7, false));
    for (const auto& model : m.models()) {
      CHECK(std::abs(category_weighted_mean(m, model) - task_mean(m, model)) < 1e-9);
    }
  }
}

TEST_CASE("custom category weights") {
  const std::vector<EvalCell> cells{{"a", "t1", "x", 10}, {"a", "t2", "x", 20}, {"a", "t3", "y", 90}};
  const auto m = EvalMatrix::from_cells(cells);
  CHECK(category_weighted_mean(m, "a") == doctest::Approx(40.0));
  CHECK(category_weighted_mean(m, "a", std::map<std::string, double>{{"x", 1}, {"y", 1}}) == doctest::Approx(52.5));
  CHECK_THROWS_AS(category_weighted_mean(m, "a", std::map<std::string, double>{{"x", 1}}), ValidationError);
  CHECK_THROWS_AS(category_mean(m, "a", "z"), ValidationError);
}

TEST_CASE("borda points are conserved") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> md(2, 6), td(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t models = md(rng), tasks = td(rng);
    const auto m = EvalMatrix::from_cells(random_cells(rng, models, tasks, trial % 2 == 0));
    const auto r = borda_rank(m);
    double total = 0;
    for (const auto& [name, p] : r.points) total += p;
    CHECK(total == doctest::Approx(static_cast<double>(tasks * models * (models - 1)) / 2.0));
  }
}

TEST_CASE("borda depends only on per-task order") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> a(0.1, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto cells = random_cells(rng, 4, 5, trial % 2 == 0);
    const auto before = borda_rank(EvalMatrix::from_cells(cells));
    // A different strictly increasing map per task, kept inside [0, 100].
    std::map<std::string, double> power;
    for (const auto& c : cells) power.try_emplace(c.task, a(rng));
    for (auto& c : cells) c.score = 100.0 * std::pow(c.score / 100.0, power[c.task]);
    const auto after = borda_rank(EvalMatrix::from_cells(cells));
    CHECK(before.points == after.points);
  }
}

TEST_CASE("borda winner can have the lower mean") {
  const std::vector<EvalCell> cells{{"A", "t1", "c", 61},  {"A", "t2", "c", 61}, {"A", "t3", "c", 58},
                                    {"B", "t1", "c", 100}, {"B", "t2", "c", 40}, {"B", "t3", "c", 41}};
  const auto m = EvalMatrix::from_cells(cells);
  const auto r = borda_rank(m);
  CHECK(r.points.at("A") == 2.0);
  CHECK(r.points.at("B") == 1.0);
  CHECK(r.ranking[0].model == "A");
  CHECK(task_mean(m, "B") > task_mean(m, "A"));
  CHECK(task_mean(m, "A") == doctest::Approx(60.0));
  CHECK(task_mean(m, "B") == doctest::Approx(60.333333333));
}

TEST_CASE("borda ties get half points and are flagged") {
  const std::vector<EvalCell> cells{{"b", "t", "c", 50}, {"a", "t", "c", 50}, {"z", "t", "c", 10}};
  const auto r = borda_rank(EvalMatrix::from_cells(cells));
  CHECK(r.points.at("a") == 1.5);
  CHECK(r.points.at("b") == 1.5);
  CHECK(r.ranking[0].model == "a");
  CHECK(r.ranking[0].tied);
  CHECK(r.ranking[1].tied);
  CHECK_FALSE(r.ranking[2].tied);
  CHECK(r.ranking[2].rank == 3);

  const std::vector<EvalCell> one{{"a", "t", "c", 50}};
  CHECK_THROWS_AS(borda_rank(EvalMatrix::from_cells(one)), std::invalid_argument);
}

TEST_CASE("matrix validation") {
  CHECK_THROWS_AS(EvalMatrix::from_cells(std::vector<EvalCell>{{"a", "t1", "c", 10}, {"b", "t2", "c", 10}}),
                  ValidationError);
  CHECK_THROWS_AS(EvalMatrix::from_cells(std::vector<EvalCell>{{"a", "t", "c", 10}, {"a", "t", "c", 11}}),
                  ValidationError);
  CHECK_THROWS_AS(EvalMatrix::from_cells(std::vector<EvalCell>{{"a", "t", "c", 101}}), ValidationError);
  CHECK_THROWS_AS(EvalMatrix::from_cells(std::vector<EvalCell>{{"a", "t", "c", -1}}), ValidationError);
  CHECK_THROWS_AS(EvalMatrix::from_cells(std::vector<EvalCell>{{"a", "t", "c", 1}, {"b", "t", "d", 1}}),
                  ValidationError);
}

TEST_CASE("load_eval and report") {
  testing::TempDir dir;
  testing::write_file(dir / "s.jsonl",
                      "{\"model\":\"A\",\"task\":\"t1\",\"category\":\"c\",\"score\":61}\n"
                      "{\"model\":\"A\",\"task\":\"t2\",\"category\":\"c\",\"score\":61}\n"
                      "{\"model\":\"A\",\"task\":\"t3\",\"category\":\"d\",\"score\":58}\n"
                      "{\"model\":\"B\",\"task\":\"t1\",\"category\":\"c\",\"score\":100}\n"
                      "{\"model\":\"B\",\"task\":\"t2\",\"category\":\"c\",\"score\":40}\n"
                      "{\"model\":\"B\",\"task\":\"t3\",\"category\":\"d\",\"score\":41}\n");
  const auto m = load_eval(dir / "s.jsonl");
  const auto rows = build_report(m);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model == "A");
  CHECK(rows[0].category_means.at("c") == doctest::Approx(61.0));
  const auto j = report_json(m, rows);
  CHECK(j["tasks"] == 3);
  CHECK(j["models"][1]["model"] == "B");
  CHECK(j["models"][1]["borda_points"] == 1.0);
  const auto table = report_table(m, rows);
  CHECK(table.find("Borda") != std::string::npos);
  CHECK(table.find("60.33") != std::string::npos);

  testing::write_file(dir / "bad.jsonl", "{\"model\":\"A\",\"task\":\"t1\",\"score\":61}\n");
  CHECK_THROWS_AS(load_eval(dir / "bad.jsonl"), ParseError);
}
