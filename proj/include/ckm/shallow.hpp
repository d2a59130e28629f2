#pragma once

// Shallow concrete k-means: the k-means objective solved by stochastic
// gradient descent on the centroids alone, with the encoder fixed to the
// identity. Gradients reach M both directly through h~ M and through the
// relaxed assignment via the straight-through estimator.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ckm/concrete.hpp"
#include "ckm/kmeans.hpp"
#include "ckm/optim.hpp"

namespace ckm {

struct ShallowConfig {
  std::size_t k = 2;
  double sigma = 1.0;
  double tau0 = 1.0;
  double tau_min = 0.1;
  /// Fraction of the annealing clock after which tau sits at tau_min.
  double anneal_fraction = 0.5;
  /// Overrides the decay derived from tau0/tau_min/anneal_fraction when set.
  std::optional<double> decay_rate;
  AnnealUnit anneal_unit = AnnealUnit::epoch;
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 1e-2;
  /// Clamped to N.
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  /// Independent fits from different k-means++ seeds; the lowest final
  /// objective wins.
  std::size_t restarts = 1;

  void validate() const;
  /// Schedule implied by the fields above for a run of `steps_per_epoch`.
  TemperatureSchedule schedule(std::size_t steps_per_epoch) const;
};

struct ShallowResult : LloydResult {
  /// Sum over minibatches of the straight-through loss, per epoch, for the
  /// winning restart.
  std::vector<double> loss_history;
  std::size_t restart = 0;
};

/// Stream for the k-means++ seeding of restart `r`. Shared with
/// lloyd_best_of so both solvers start from identical centroids.
std::uint64_t kmeanspp_seed(std::uint64_t seed, std::size_t restart);

/// Fits starting from the given centroids (single restart, no seeding).
ShallowResult shallow_ckm_fit_from(const Tensor& X, const CentroidSet& init,
                                   const ShallowConfig& cfg, std::uint64_t stream_seed);

ShallowResult shallow_ckm_fit(const Tensor& X, const ShallowConfig& cfg);

}  // namespace ckm
