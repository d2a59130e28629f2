#pragma once

// Classic k-means: Lloyd's alternating minimisation, k-means++ seeding and
// the exact objective ||X - HM||_F^2.

#include <cstddef>
#include <optional>

#include "ckm/tensor.hpp"

namespace ckm {

/// k x d matrix of cluster centres, one per row.
struct CentroidSet {
  Tensor M;

  std::size_t k() const { return static_cast<std::size_t>(M.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(M.cols()); }
};

struct LloydResult {
  CentroidSet centroids;
  Labels labels;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct LloydConfig {
  std::size_t max_iter = 300;
  std::size_t restarts = 10;
};

/// Nearest centroid per row; ties go to the lowest index.
Labels assign_step(const Tensor& X, const CentroidSet& centroids);

/// Cluster means for fixed labels. A cluster with no members is reseeded to
/// the row farthest from its own centroid, measured against `current` when
/// given and against the fresh means otherwise. Rows used for reseeding are
/// not reused.
CentroidSet update_step(const Tensor& X, const Labels& labels, std::size_t k,
                        const CentroidSet* current = nullptr);

/// Alternates assign/update until the labels stop changing or max_iter
/// updates have run. Throws std::logic_error if the objective ever increases.
LloydResult lloyd(const Tensor& X, const CentroidSet& init, std::size_t max_iter = 300,
                  double tol = 0.0);

/// D^2 seeding. The first centre is a uniform row; each next one is drawn
/// with probability proportional to the squared distance to the nearest
/// centre chosen so far.
CentroidSet kmeanspp_init(const Tensor& X, std::size_t k, Rng& rng);

/// ||X - HM||_F^2 for a one-hot H. Throws ContractError otherwise.
double kmeans_objective(const Tensor& X, const Tensor& H, const CentroidSet& centroids);
/// Same objective for integer labels.
double kmeans_objective(const Tensor& X, const Labels& labels, const CentroidSet& centroids);

/// Labels -> one-hot N x k matrix.
Tensor one_hot(const Labels& labels, std::size_t k);

/// Runs `cfg.restarts` k-means++-seeded Lloyd fits on streams derived from
/// `seed` and keeps the lowest objective (first one on ties).
LloydResult lloyd_best_of(const Tensor& X, std::size_t k, const LloydConfig& cfg,
                          std::uint64_t seed);

}  // namespace ckm
