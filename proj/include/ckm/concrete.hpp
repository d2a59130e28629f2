#pragma once

// Concrete (Gumbel-Softmax) cluster assignment.
//
// Assignment probabilities are normalised RBFs of the squared distance to
// each centroid. Training draws a relaxed one-hot sample h per row from the
// Gumbel-Softmax distribution at temperature tau, rounds it to a hard one-hot
// row for the forward pass and differentiates through h on the way back
// (straight-through estimator). At evaluation time the argmax of the
// probabilities is used instead of a sample.

#include <cstddef>

#include "ckm/autodiff.hpp"
#include "ckm/tensor.hpp"

namespace ckm {

struct RbfConfig {
  double sigma = 1.0;
};

/// Relaxed sample h (rows sum to one) and its one-hot rounding.
struct AssignmentMatrix {
  Tensor relaxed;
  Tensor discrete;
};

enum class AnnealUnit { epoch, step };

/// tau(t) = max(tau_min, tau0 * exp(-decay_rate * t)).
struct TemperatureSchedule {
  double tau0 = 1.0;
  double tau_min = 0.1;
  double decay_rate = 0.0;

  /// Schedule that reaches `tau_min` after `steps_to_floor` steps.
  static TemperatureSchedule reaching_floor_at(double tau0, double tau_min,
                                               std::size_t steps_to_floor);
  void validate() const;
};

double tau_at(const TemperatureSchedule& schedule, std::size_t step);

inline constexpr double kGumbelEps = 1e-12;

/// log p(C_ij | x_i) = log_softmax_j(-||z_i - m_j||^2 / sigma^2), on the tape.
ad::Var rbf_log_probs(ad::Var z, ad::Var centroids, double sigma);
Tensor rbf_log_probs(const Tensor& z, const Tensor& centroids, double sigma);

/// Standard Gumbel noise -log(-log(U)), U clamped to (eps, 1 - eps).
Tensor gumbel_sample(std::size_t n, std::size_t k, Rng& rng);

/// Relaxed sample softmax((log_probs + G) / tau), differentiable in log_probs.
ad::Var concrete_sample(ad::Var log_probs, const Tensor& gumbel, double tau);

/// One-hot row at the argmax of each row; ties go to the lowest index.
Tensor discretize(const Tensor& relaxed);

/// Forward value discretize(relaxed), identity adjoint to `relaxed`.
ad::Var straight_through(ad::Var relaxed);

/// Draws a full assignment (relaxed and discrete) outside any tape.
AssignmentMatrix sample_assignment(const Tensor& log_probs, const Tensor& gumbel, double tau);

/// Test-time labels: argmax_j p(C_ij | x_i). The RBF probabilities are
/// monotone in -distance, so this is the nearest centroid whatever sigma is;
/// sigma is only validated.
Labels hard_assign(const Tensor& z, const Tensor& centroids, double sigma);

}  // namespace ckm
