#include "ckm/kmeans.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ckm/error.hpp"

namespace ckm {

namespace {

void require_dims(const Tensor& X, const CentroidSet& c, const char* what) {
  if (c.k() == 0) throw InputError(std::string(what) + ": empty centroid set");
  if (X.cols() != c.M.cols()) {
    throw DimensionError(std::string(what) + ": data " + shape_string(X) + " vs centroids " +
                         shape_string(c.M));
  }
}

void require_labels(const Labels& labels, std::size_t n, std::size_t k, const char* what) {
  if (labels.size() != n) {
    throw InputError(std::string(what) + ": expected " + std::to_string(n) + " labels, got " +
                     std::to_string(labels.size()));
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) {
      throw InputError(std::string(what) + ": label " + std::to_string(l) + " outside [0, " +
                       std::to_string(k) + ")");
    }
  }
}

}  // namespace

Labels assign_step(const Tensor& X, const CentroidSet& centroids) {
  require_dims(X, centroids, "assign_step");
  Labels labels(static_cast<std::size_t>(X.rows()), 0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.M.rows(); ++j) {
      const double d = row_sq_distance(X, i, centroids.M, j);
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
    }
  }
  return labels;
}

CentroidSet update_step(const Tensor& X, const Labels& labels, std::size_t k,
                        const CentroidSet* current) {
  if (k == 0) throw InputError("update_step: k must be positive");
  require_labels(labels, static_cast<std::size_t>(X.rows()), k, "update_step");
  if (current != nullptr) require_dims(X, *current, "update_step");

  CentroidSet out{Tensor::Zero(static_cast<Eigen::Index>(k), X.cols())};
  std::vector<std::size_t> counts(k, 0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto j = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    out.M.row(static_cast<Eigen::Index>(j)) += X.row(i);
    ++counts[j];
  }
  bool any_empty = false;
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) {
      out.M.row(static_cast<Eigen::Index>(j)) /= static_cast<double>(counts[j]);
    } else {
      any_empty = true;
    }
  }
  if (!any_empty) return out;

  const Tensor& reference = current != nullptr ? current->M : out.M;
  std::vector<double> dist(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    dist[static_cast<std::size_t>(i)] =
        row_sq_distance(X, i, reference, labels[static_cast<std::size_t>(i)]);
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) continue;
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (dist[i] > best) {
        best = dist[i];
        far = i;
      }
    }
    out.M.row(static_cast<Eigen::Index>(j)) = X.row(static_cast<Eigen::Index>(far));
    dist[far] = -std::numeric_limits<double>::infinity();
  }
  return out;
}

LloydResult lloyd(const Tensor& X, const CentroidSet& init, std::size_t max_iter, double /*tol*/) {
  require_dims(X, init, "lloyd");
  if (max_iter == 0) throw InputError("lloyd: max_iter must be >= 1");
  const std::size_t k = init.k();

  LloydResult r;
  r.centroids = init;
  r.labels = assign_step(X, r.centroids);
  r.objective = kmeans_objective(X, r.labels, r.centroids);
  while (r.iterations < max_iter) {
    CentroidSet next = update_step(X, r.labels, k, &r.centroids);
    Labels next_labels = assign_step(X, next);
    const double obj = kmeans_objective(X, next_labels, next);
    ++r.iterations;
    if (obj > r.objective * (1.0 + 1e-12) + 1e-12) {
      throw std::logic_error("lloyd: objective increased from " + std::to_string(r.objective) +
                             " to " + std::to_string(obj));
    }
    const bool stable = next_labels == r.labels;
    r.centroids = std::move(next);
    r.labels = std::move(next_labels);
    r.objective = obj;
    if (stable) {
      r.converged = true;
      break;
    }
  }
  return r;
}

CentroidSet kmeanspp_init(const Tensor& X, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (k == 0) throw InputError("kmeanspp_init: k must be positive");
  if (n < k) {
    throw InputError("kmeanspp_init: need N >= k, got N=" + std::to_string(n) +
                     " k=" + std::to_string(k));
  }
  CentroidSet c{Tensor(static_cast<Eigen::Index>(k), X.cols())};
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  c.M.row(0) = X.row(static_cast<Eigen::Index>(first));
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = row_sq_distance(X, static_cast<Eigen::Index>(i), c.M, 0);

  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Fewer than k distinct rows: fall back to a uniform unchosen row.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) rest.push_back(i);
      }
      pick = rest[rng.index(rest.size())];
    }
    chosen[pick] = true;
    c.M.row(static_cast<Eigen::Index>(j)) = X.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], row_sq_distance(X, static_cast<Eigen::Index>(i), c.M,
                                              static_cast<Eigen::Index>(j)));
    }
  }
  return c;
}

Tensor one_hot(const Labels& labels, std::size_t k) {
  Tensor H = Tensor::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError("one_hot: label " + std::to_string(labels[i]) + " out of range");
    }
    H(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return H;
}

double kmeans_objective(const Tensor& X, const Tensor& H, const CentroidSet& centroids) {
  require_dims(X, centroids, "kmeans_objective");
  if (H.rows() != X.rows() || H.cols() != centroids.M.rows()) {
    throw DimensionError("kmeans_objective: H " + shape_string(H) + " incompatible with X " +
                         shape_string(X) + " and M " + shape_string(centroids.M));
  }
  Labels labels(static_cast<std::size_t>(H.rows()), 0);
  for (Eigen::Index i = 0; i < H.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
      const double h = H(i, j);
      if (h == 1.0) {
        ++ones;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
      } else if (h != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw ContractError("kmeans_objective: row " + std::to_string(i) + " of H is not one-hot");
    }
  }
  // Row-wise ||x_i - h_i M||^2 with h_i one-hot is ||x_i - mu_label||^2.
  return kmeans_objective(X, labels, centroids);
}

double kmeans_objective(const Tensor& X, const Labels& labels, const CentroidSet& centroids) {
  require_dims(X, centroids, "kmeans_objective");
  require_labels(labels, static_cast<std::size_t>(X.rows()), centroids.k(), "kmeans_objective");
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    total += row_sq_distance(X, i, centroids.M, labels[static_cast<std::size_t>(i)]);
  }
  return total;
}

LloydResult lloyd_best_of(const Tensor& X, std::size_t k, const LloydConfig& cfg,
                          std::uint64_t seed) {
  if (cfg.restarts == 0) throw ConfigError("lloyd_best_of: restarts must be >= 1");
  LloydResult best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(seed, r));
    LloydResult fit = lloyd(X, kmeanspp_init(X, k, rng), cfg.max_iter);
    if (r == 0 || fit.objective < best.objective) best = std::move(fit);
  }
  return best;
}

}  // namespace ckm
