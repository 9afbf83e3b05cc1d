// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "embforge/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "embforge/error.hpp"
#include "embforge/jsonl.hpp"

namespace embforge::loss {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + " holds a non-finite value");
    }
  }
}

// One logit of a query's softmax and the flat coordinate it came from.
struct Term {
  double sim;
  std::size_t coord;
};

std::size_t neg_count(const SimBatch& b) {
  std::size_t n = 0;
  for (const auto& row : b.neg) {
    n += row.size();
  }
  return n;
}

std::size_t flat_size(const SimBatch& b) {
  const std::size_t n = b.queries();
  return n + neg_count(b) + (b.in_batch_sims ? n * n : 0);
}

// [positive, hard negatives..., in-batch negatives...] for query i.
std::vector<Term> contrastive_terms(const SimBatch& b, std::size_t i, std::size_t neg_offset, bool with_in_batch) {
  const std::size_t n = b.queries();
  std::vector<Term> terms;
  terms.reserve(1 + b.neg[i].size() + (with_in_batch ? n - 1 : 0));
  terms.push_back({b.pos[i], i});
  for (std::size_t j = 0; j < b.neg[i].size(); ++j) {
    terms.push_back({b.neg[i][j], n + neg_offset + j});
  }
  if (with_in_batch) {
    const std::size_t cross_base = n + neg_count(b);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        continue;
      }
      if (b.in_batch_sims) {
        terms.push_back({(*b.in_batch_sims)[i][j], cross_base + i * n + j});
      } else {
        terms.push_back({b.pos[j], j});
      }
    }
  }
  return terms;
}

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) {
    sum += std::exp(v - m);
  }
  return m + std::log(sum);
}

std::vector<double> scaled(std::span<const Term> terms, double tau) {
  std::vector<double> z;
  z.reserve(terms.size());
  for (const auto& t : terms) {
    z.push_back(t.sim / tau);
  }
  return z;
}

// Teacher log-probabilities for one query.
std::vector<double> teacher_log_probs(const TeacherDistribution& t, std::size_t i) {
  const auto& row = t.values[i];
  std::vector<double> out(row.size());
  if (t.are_probabilities) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out[k] = row[k] > 0.0 ? std::log(row[k]) : -std::numeric_limits<double>::infinity();
    }
    return out;
  }
  std::vector<double> z(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) {
    z[k] = row[k] / t.tau;
  }
  const double lse = log_sum_exp(z);
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = z[k] - lse;
  }
  return out;
}

void check_alignment(const SimBatch& b, const TeacherDistribution& t) {
  b.validate();
  t.validate();
  if (t.values.size() != b.queries()) {
    throw std::invalid_argument("teacher covers " + std::to_string(t.values.size()) + " queries, batch has " +
                                std::to_string(b.queries()));
  }
  for (std::size_t i = 0; i < b.queries(); ++i) {
    if (t.values[i].size() != 1 + b.neg[i].size()) {
      throw std::invalid_argument("query " + std::to_string(i) + ": teacher has " +
                                  std::to_string(t.values[i].size()) + " candidates, batch has " +
                                  std::to_string(1 + b.neg[i].size()));
    }
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
}

}  // namespace

void SimBatch::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("tau must be a positive finite number");
  }
  if (pos.empty()) {
    throw std::invalid_argument("batch has no queries");
  }
  if (neg.size() != pos.size()) {
    throw std::invalid_argument("batch has " + std::to_string(pos.size()) + " positives but " +
                                std::to_string(neg.size()) + " negative lists");
  }
  require_finite(pos, "pos");
  for (const auto& row : neg) {
    require_finite(row, "neg");
  }
  if (in_batch_sims) {
    if (in_batch_sims->size() != pos.size()) {
      throw std::invalid_argument("in_batch_sims must be N x N");
    }
    for (const auto& row : *in_batch_sims) {
      if (row.size() != pos.size()) {
        throw std::invalid_argument("in_batch_sims must be N x N");
      }
      require_finite(row, "in_batch_sims");
    }
  }
}

void TeacherDistribution::validate() const {
  if (!are_probabilities && (!(tau > 0.0) || !std::isfinite(tau))) {
    throw std::invalid_argument("teacher tau must be a positive finite number");
  }
  for (const auto& row : values) {
    if (row.size() < 2) {
      throw std::invalid_argument("teacher needs at least 2 candidates per query");
    }
    require_finite(row, "teacher");
    if (are_probabilities) {
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) {
          throw std::invalid_argument("teacher probabilities must be non-negative");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("teacher probabilities must sum to 1");
      }
    }
  }
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine_sim: length mismatch");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    throw std::invalid_argument("cosine_sim: zero vector");
  }
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double infonce_loss(const SimBatch& batch) {
  batch.validate();
  double total = 0.0;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < batch.queries(); ++i) {
    const auto terms = contrastive_terms(batch, i, offset, batch.in_batch);
    const auto z = scaled(terms, batch.tau);
    total += log_sum_exp(z) - z[0];
    offset += batch.neg[i].size();
  }
  return total;
}

std::vector<double> infonce_gradient(const SimBatch& batch) {
  batch.validate();
  std::vector<double> grad(flat_size(batch), 0.0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < batch.queries(); ++i) {
    const auto terms = contrastive_terms(batch, i, offset, batch.in_batch);
    const auto z = scaled(terms, batch.tau);
    const double lse = log_sum_exp(z);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double p = std::exp(z[k] - lse);
      grad[terms[k].coord] += (p - (k == 0 ? 1.0 : 0.0)) / batch.tau;
    }
    offset += batch.neg[i].size();
  }
  return grad;
}

double soft_distill_loss(const SimBatch& batch, const TeacherDistribution& teacher) {
  check_alignment(batch, teacher);
  double total = 0.0;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < batch.queries(); ++i) {
    const auto terms = contrastive_terms(batch, i, offset, false);
    const auto z = scaled(terms, batch.tau);
    const double lse = log_sum_exp(z);
    const auto log_t = teacher_log_probs(teacher, i);
    double kl = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const double pt = std::exp(log_t[k]);
      if (pt > 0.0) {
        kl += pt * (log_t[k] - (z[k] - lse));
      }
    }
    total += kl;
    offset += batch.neg[i].size();
  }
  // KL is non-negative; rounding can leave a tiny negative residue.
  return std::max(0.0, total / static_cast<double>(batch.queries()));
}

std::vector<double> soft_distill_gradient(const SimBatch& batch, const TeacherDistribution& teacher) {
  check_alignment(batch, teacher);
  std::vector<double> grad(flat_size(batch), 0.0);
  const double scale = 1.0 / (batch.tau * static_cast<double>(batch.queries()));
  std::size_t offset = 0;
  for (std::size_t i = 0; i < batch.queries(); ++i) {
    const auto terms = contrastive_terms(batch, i, offset, false);
    const auto z = scaled(terms, batch.tau);
    const double lse = log_sum_exp(z);
    const auto log_t = teacher_log_probs(teacher, i);
    for (std::size_t k = 0; k < terms.size(); ++k) {
      grad[terms[k].coord] += (std::exp(z[k] - lse) - std::exp(log_t[k])) * scale;
    }
    offset += batch.neg[i].size();
  }
  return grad;
}

double blended_loss(const SimBatch& batch, const TeacherDistribution& teacher, double lambda) {
  check_lambda(lambda);
  return lambda * infonce_loss(batch) + (1.0 - lambda) * soft_distill_loss(batch, teacher);
}

std::vector<double> blended_gradient(const SimBatch& batch, const TeacherDistribution& teacher, double lambda) {
  check_lambda(lambda);
  auto g = infonce_gradient(batch);
  const auto d = soft_distill_gradient(batch, teacher);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = lambda * g[i] + (1.0 - lambda) * d[i];
  }
  return g;
}

std::vector<double> flatten(const SimBatch& batch) {
  std::vector<double> out(batch.pos);
  for (const auto& row : batch.neg) {
    out.insert(out.end(), row.begin(), row.end());
  }
  if (batch.in_batch_sims) {
    for (const auto& row : *batch.in_batch_sims) {
      out.insert(out.end(), row.begin(), row.end());
    }
  }
  return out;
}

SimBatch unflatten(const SimBatch& shape, std::span<const double> values) {
  if (values.size() != flat_size(shape)) {
    throw std::invalid_argument("unflatten: size does not match the batch shape");
  }
  SimBatch out = shape;
  std::size_t at = 0;
  for (auto& p : out.pos) {
    p = values[at++];
  }
  for (auto& row : out.neg) {
    for (auto& x : row) {
      x = values[at++];
    }
  }
  if (out.in_batch_sims) {
    for (auto& row : *out.in_batch_sims) {
      for (auto& x : row) {
        x = values[at++];
      }
    }
  }
  return out;
}

Objective infonce_objective() {
  return {[](const SimBatch& b) { return infonce_loss(b); }, [](const SimBatch& b) { return infonce_gradient(b); }};
}

Objective soft_distill_objective(TeacherDistribution teacher) {
  return {[teacher](const SimBatch& b) { return soft_distill_loss(b, teacher); },
          [teacher](const SimBatch& b) { return soft_distill_gradient(b, teacher); }};
}

Objective blended_objective(TeacherDistribution teacher, double lambda) {
  check_lambda(lambda);
  return {[teacher, lambda](const SimBatch& b) { return blended_loss(b, teacher, lambda); },
          [teacher, lambda](const SimBatch& b) { return blended_gradient(b, teacher, lambda); }};
}

GradCheckResult grad_check(const Objective& objective, const SimBatch& point, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  }
  const auto analytic = objective.gradient(point);
  auto x = flatten(point);
  if (analytic.size() != x.size()) {
    throw std::invalid_argument("grad_check: gradient size does not match the batch");
  }
  GradCheckResult result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    const auto at = [&](double offset) {
      x[i] = saved + offset;
      return objective.value(unflatten(point, x));
    };
    // Fourth-order central stencil.
    const double numeric = (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
    x[i] = saved;
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradCheckFloor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > result.max_relative_error || i == 0) {
      result = {err, i, analytic[i], numeric};
    }
  }
  return result;
}

BatchFile load_batch(const std::filesystem::path& path, double tau, std::optional<double> tau_teacher,
                     bool in_batch) {
  BatchFile out;
  out.batch.tau = tau;
  out.batch.in_batch = in_batch;
  std::vector<std::vector<double>> teacher_rows;
  std::vector<std::vector<double>> cross_rows;
  std::size_t with_teacher = 0;
  std::size_t with_cross = 0;
  const auto numbers = [](const jsonl::Json& rec, const char* key) {
    std::vector<double> xs;
    const auto& arr = rec.at(key);
    if (!arr.is_array()) {
      throw std::invalid_argument(std::string("field '") + key + "' must be an array");
    }
    for (const auto& v : arr) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        throw std::invalid_argument(std::string("field '") + key + "' must hold finite numbers");
      }
      xs.push_back(v.get<double>());
    }
    return xs;
  };
  jsonl::for_each_record(path, [&](const jsonl::Json& rec, std::size_t) {
    out.batch.pos.push_back(jsonl::require_number(rec, "s_pos"));
    out.batch.neg.push_back(rec.contains("s_neg") ? numbers(rec, "s_neg") : std::vector<double>{});
    if (rec.contains("teacher")) {
      ++with_teacher;
      teacher_rows.push_back(numbers(rec, "teacher"));
    }
    if (rec.contains("in_batch_sims")) {
      ++with_cross;
      cross_rows.push_back(numbers(rec, "in_batch_sims"));
    }
  });
  const std::size_t n = out.batch.pos.size();
  if (with_teacher != 0 && with_teacher != n) {
    throw ValidationError("'teacher' must be present on every line or on none");
  }
  if (with_cross != 0 && with_cross != n) {
    throw ValidationError("'in_batch_sims' must be present on every line or on none");
  }
  if (with_cross == n && n > 0) {
    out.batch.in_batch_sims = std::move(cross_rows);
  }
  if (with_teacher == n && n > 0) {
    out.teacher = TeacherDistribution{std::move(teacher_rows), tau_teacher.value_or(tau), false};
  }
  out.batch.validate();
  return out;
}

}  // namespace embforge::loss
