// Copyright 2026 The embforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace embforge::loss {

/// Similarity values for a batch of N queries.
///
/// `in_batch_sims`, when present, is N x N with entry [i][j] = sim(q_i, p_j);
/// with `in_batch` set, query i additionally sees every p_j (j != i) as a
/// negative. Without the matrix, in-batch negatives fall back to the other
/// queries' positive similarities `pos[j]`.
struct SimBatch {
  std::vector<double> pos;
  std::vector<std::vector<double>> neg;
  std::optional<std::vector<std::vector<double>>> in_batch_sims;
  double tau = 0.05;
  bool in_batch = false;

  std::size_t queries() const noexcept { return pos.size(); }
  /// Throws std::invalid_argument on tau <= 0, mismatched shapes or
  /// non-finite values.
  void validate() const;
};

/// Teacher view of each query's candidates, ordered [positive, negatives...]
/// to match SimBatch. Either raw scores (softmax at `tau`) or explicit
/// probabilities.
struct TeacherDistribution {
  std::vector<std::vector<double>> values;
  double tau = 0.05;
  bool are_probabilities = false;

  void validate() const;
};

/// dot(u, v) / (|u| |v|). Throws std::invalid_argument on a zero vector or a
/// length mismatch.
double cosine_sim(std::span<const double> u, std::span<const double> v);

/// -sum_i log( exp(pos_i / tau) / (exp(pos_i / tau) + sum_j exp(neg_ij / tau)) )
/// with in-batch negatives appended when enabled. Each term is evaluated
/// with max subtraction; queries are summed in order.
double infonce_loss(const SimBatch& batch);

/// Mean over queries of KL(teacher || student), where the student
/// distribution is softmax([pos_i, neg_i...] / tau). In-batch negatives are
/// not part of this objective. Throws std::invalid_argument when the teacher
/// does not align with the batch.
double soft_distill_loss(const SimBatch& batch, const TeacherDistribution& teacher);

/// lambda * infonce + (1 - lambda) * soft_distill, lambda in [0, 1].
double blended_loss(const SimBatch& batch, const TeacherDistribution& teacher, double lambda);

/// Gradients are laid out as: pos (N), then neg row by row, then
/// in_batch_sims row by row when present. `flatten` and `unflatten` use the
/// same layout.
std::vector<double> flatten(const SimBatch& batch);
SimBatch unflatten(const SimBatch& shape, std::span<const double> values);

std::vector<double> infonce_gradient(const SimBatch& batch);
std::vector<double> soft_distill_gradient(const SimBatch& batch, const TeacherDistribution& teacher);
std::vector<double> blended_gradient(const SimBatch& batch, const TeacherDistribution& teacher, double lambda);

struct Objective {
  std::function<double(const SimBatch&)> value;
  std::function<std::vector<double>(const SimBatch&)> gradient;
};

Objective infonce_objective();
Objective soft_distill_objective(TeacherDistribution teacher);
Objective blended_objective(TeacherDistribution teacher, double lambda);

/// Relative errors use max(|analytic|, |numeric|, kGradCheckFloor) as the
/// denominator, so coordinates whose gradient is numerically zero are
/// compared in absolute terms.
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the analytic gradient with fourth-order central differences of
/// step `eps` in every coordinate. Throws std::invalid_argument unless
/// 1e-7 <= eps <= 1e-3.
GradCheckResult grad_check(const Objective& objective, const SimBatch& point, double eps = 1e-3);

/// Batch file: one query per line, {"s_pos": number, "s_neg": [number...],
/// "teacher": [number...]?, "in_batch_sims": [number...]?}. The teacher
/// vector, when present on every line, covers [positive, negatives...].
struct BatchFile {
  SimBatch batch;
  std::optional<TeacherDistribution> teacher;
};
BatchFile load_batch(const std::filesystem::path& path, double tau, std::optional<double> tau_teacher,
                     bool in_batch);

}  // namespace embforge::loss
