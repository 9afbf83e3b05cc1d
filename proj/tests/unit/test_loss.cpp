// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "embforge/loss.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace embforge;
using namespace embforge::loss;

namespace {

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = g(rng);
  return v;
}

// Similarities come from cosines of random vectors, as they would in training.
struct RandomInstance {
  SimBatch batch;
  TeacherDistribution teacher;
};

RandomInstance random_instance(std::mt19937_64& rng, double tau, bool with_matrix) {
  std::uniform_int_distribution<std::size_t> dim_d(2, 16);
  std::uniform_int_distribution<std::size_t> n_d(1, 4);
  std::uniform_int_distribution<std::size_t> cand_d(2, 10);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t dim = dim_d(rng);
  const std::size_t n = n_d(rng);
  const std::size_t cands = cand_d(rng);

  std::vector<std::vector<double>> q, p;
  RandomInstance r;
  r.batch.tau = tau;
  r.teacher.tau = tau;
  for (std::size_t i = 0; i < n; ++i) {
    q.push_back(random_unit(rng, dim));
    p.push_back(random_unit(rng, dim));
  }
  for (std::size_t i = 0; i < n; ++i) {
    r.batch.pos.push_back(cosine_sim(q[i], p[i]));
    std::vector<double> neg;
    std::vector<double> t{g(rng)};
    for (std::size_t j = 1; j < cands; ++j) {
      neg.push_back(cosine_sim(q[i], random_unit(rng, dim)));
      t.push_back(g(rng));
    }
    r.batch.neg.push_back(std::move(neg));
    r.teacher.values.push_back(std::move(t));
  }
  if (with_matrix) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m[i][j] = cosine_sim(q[i], p[j]);
    r.batch.in_batch_sims = m;
    r.batch.in_batch = true;
  }
  return r;
}

SimBatch single(double pos, std::vector<double> neg, double tau) {
  SimBatch b;
  b.pos = {pos};
  b.neg = {std::move(neg)};
  b.tau = tau;
  return b;
}

}  // namespace

TEST_CASE("cosine similarity") {
  const std::vector<double> a{1, 0}, b{0, 1}, c{1, 1};
  CHECK(cosine_sim(a, a) == doctest::Approx(1.0));
  CHECK(cosine_sim(a, b) == doctest::Approx(0.0));
  CHECK(cosine_sim(a, c) == doctest::Approx(1.0 / std::sqrt(2.0)));
  const std::vector<double> zero{0, 0};
  CHECK_THROWS_AS(cosine_sim(a, zero), std::invalid_argument);
  const std::vector<double> three{1, 2, 3};
  CHECK_THROWS_AS(cosine_sim(a, three), std::invalid_argument);
}

TEST_CASE("infonce hand values") {
  CHECK(infonce_loss(single(0, {0}, 1.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(infonce_loss(single(1, {0}, 1.0)) == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-12));
  CHECK(infonce_loss(single(1, {0}, 1.0)) == doctest::Approx(0.31326).epsilon(1e-5));

  // Two queries sum rather than average.
  SimBatch two;
  two.pos = {0, 0};
  two.neg = {{0}, {0}};
  two.tau = 1.0;
  CHECK(infonce_loss(two) == doctest::Approx(2 * std::log(2.0)));
}

TEST_CASE("infonce gradient at the symmetric point") {
  SimBatch b;
  b.pos = {0, 0, 0};
  b.neg = {{0}, {0}, {0}};
  b.tau = 1.0;
  const auto g = infonce_gradient(b);
  REQUIRE(g.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(-0.5));
  for (std::size_t i = 3; i < 6; ++i) CHECK(g[i] == doctest::Approx(0.5));
}

TEST_CASE("infonce is monotone in the positive and the negatives") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = random_instance(rng, 0.1, false);
    const double base = infonce_loss(r.batch);
    const double delta = 0.01;
    SimBatch up = r.batch;
    up.pos[0] += delta;
    CHECK(infonce_loss(up) < base);
    SimBatch worse = r.batch;
    worse.neg[0][0] += delta;
    CHECK(infonce_loss(worse) > base);
  }
}

TEST_CASE("infonce survives large logits") {
  const double l = infonce_loss(single(1000, {999, 998}, 1.0));
  CHECK(std::isfinite(l));
  CHECK(l == doctest::Approx(std::log(1 + std::exp(-1.0) + std::exp(-2.0))));
  // Shifting every similarity by a constant leaves the loss unchanged.
  CHECK(infonce_loss(single(0.3, {0.1, -0.2}, 0.05)) ==
        doctest::Approx(infonce_loss(single(50.3, {50.1, 49.8}, 0.05))).epsilon(1e-9));
}

TEST_CASE("in-batch negatives") {
  SimBatch b;
  b.pos = {1.0, 0.5};
  b.neg = {{0.2}, {0.1}};
  b.tau = 1.0;
  b.in_batch = true;

  // Fallback: other queries' positive similarities.
  const double fallback = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(0.2) + std::exp(0.5))) -
                          std::log(std::exp(0.5) / (std::exp(0.5) + std::exp(0.1) + std::exp(1.0)));
  CHECK(infonce_loss(b) == doctest::Approx(fallback));

  b.in_batch_sims = std::vector<std::vector<double>>{{1.0, 0.3}, {0.4, 0.5}};
  const double matrix = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(0.2) + std::exp(0.3))) -
                        std::log(std::exp(0.5) / (std::exp(0.5) + std::exp(0.1) + std::exp(0.4)));
  CHECK(infonce_loss(b) == doctest::Approx(matrix));

  // Gradient layout covers the matrix; diagonal entries are not used.
  const auto g = infonce_gradient(b);
  REQUIRE(g.size() == 2 + 2 + 4);
  CHECK(g[4] == doctest::Approx(0.0));
  CHECK(g[7] == doctest::Approx(0.0));
  CHECK(g[5] > 0.0);
}

TEST_CASE("soft distillation hand values") {
  TeacherDistribution t;
  t.values = {{1.0, 0.0}};
  t.are_probabilities = true;
  CHECK(soft_distill_loss(single(0, {0}, 1.0), t) == doctest::Approx(std::log(2.0)));

  TeacherDistribution raw;
  raw.values = {{0.7, 0.1, -0.4}};
  raw.tau = 0.5;
  CHECK(soft_distill_loss(single(0.7, {0.1, -0.4}, 0.5), raw) == doctest::Approx(0.0).epsilon(1e-12));

  // Mean over queries.
  SimBatch two;
  two.pos = {0, 0};
  two.neg = {{0}, {0}};
  two.tau = 1.0;
  TeacherDistribution t2;
  t2.values = {{1.0, 0.0}, {0.5, 0.5}};
  t2.are_probabilities = true;
  CHECK(soft_distill_loss(two, t2) == doctest::Approx(std::log(2.0) / 2));
}

TEST_CASE("soft distillation is non-negative") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    auto r = random_instance(rng, 0.05, false);
    CHECK(soft_distill_loss(r.batch, r.teacher) >= 0.0);
  }
}

TEST_CASE("blend interpolates") {
  std::mt19937_64 rng(3);
  auto r = random_instance(rng, 0.05, false);
  const double a = infonce_loss(r.batch);
  const double b = soft_distill_loss(r.batch, r.teacher);
  CHECK(blended_loss(r.batch, r.teacher, 1.0) == doctest::Approx(a));
  CHECK(blended_loss(r.batch, r.teacher, 0.0) == doctest::Approx(b));
  CHECK(blended_loss(r.batch, r.teacher, 0.25) == doctest::Approx(0.25 * a + 0.75 * b));
  CHECK_THROWS_AS(blended_loss(r.batch, r.teacher, 1.5), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const bool matrix = trial % 2 == 1;
    auto r = random_instance(rng, 0.05, matrix);
    for (const auto& obj : {infonce_objective(), soft_distill_objective(r.teacher),
                            blended_objective(r.teacher, 0.5)}) {
      const auto res = grad_check(obj, r.batch, 1e-3);
      worst = std::max(worst, res.max_relative_error);
      CHECK_MESSAGE(res.max_relative_error < 1e-4, "analytic " << res.analytic << " numeric " << res.numeric);
    }
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("library gradient agrees with an independent difference quotient") {
  std::mt19937_64 rng(99);
  auto r = random_instance(rng, 0.2, true);
  const SimBatch shape = r.batch;
  const auto f = [&](const std::vector<double>& x) { return infonce_loss(unflatten(shape, x)); };
  const auto x = flatten(shape);
  const auto g = infonce_gradient(shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(g[i] == doctest::Approx(oracle::central_difference(f, x, i, 1e-6)).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("grad_check step bounds") {
  const auto b = single(0.2, {0.1}, 0.5);
  CHECK_THROWS_AS(grad_check(infonce_objective(), b, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(grad_check(infonce_objective(), b, 1e-2), std::invalid_argument);
  CHECK_NOTHROW(grad_check(infonce_objective(), b, 1e-7));
  CHECK_NOTHROW(grad_check(infonce_objective(), b, 1e-3));
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(infonce_loss(single(0, {0}, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(infonce_loss(single(NAN, {0}, 1.0)), std::invalid_argument);
  SimBatch ragged;
  ragged.pos = {0, 0};
  ragged.neg = {{0}};
  CHECK_THROWS_AS(infonce_loss(ragged), std::invalid_argument);

  TeacherDistribution t;
  t.values = {{0.5, 0.5, 0.0}};
  t.are_probabilities = true;
  CHECK_THROWS_AS(soft_distill_loss(single(0, {0}, 1.0), t), std::invalid_argument);
  t.values = {{0.9, 0.3}};
  CHECK_THROWS_AS(soft_distill_loss(single(0, {0}, 1.0), t), std::invalid_argument);
}

TEST_CASE("flatten round trip") {
  std::mt19937_64 rng(5);
  auto r = random_instance(rng, 0.05, true);
  const auto x = flatten(r.batch);
  const auto back = unflatten(r.batch, x);
  CHECK(back.pos == r.batch.pos);
  CHECK(back.neg == r.batch.neg);
  CHECK(*back.in_batch_sims == *r.batch.in_batch_sims);
}

TEST_CASE("load_batch") {
  testing::TempDir dir;
  testing::write_file(dir / "b.jsonl",
                      "{\"s_pos\": 1, \"s_neg\": [0], \"teacher\": [2, 0]}\n"
                      "{\"s_pos\": 0, \"s_neg\": [0], \"teacher\": [0, 0]}\n");
  auto bf = load_batch(dir / "b.jsonl", 1.0, std::nullopt, false);
  CHECK(bf.batch.pos == std::vector<double>{1, 0});
  REQUIRE(bf.teacher.has_value());
  CHECK(bf.teacher->values.size() == 2);
  CHECK(infonce_loss(bf.batch) == doctest::Approx(std::log1p(std::exp(-1.0)) + std::log(2.0)));

  testing::write_file(dir / "bad.jsonl", "{\"s_pos\": 1, \"s_neg\": 0}\n");
  CHECK_THROWS(load_batch(dir / "bad.jsonl", 1.0, std::nullopt, false));
}
