#include "ckm/concrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ckm/error.hpp"

namespace ckm {

namespace {

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be finite and positive, got " + std::to_string(sigma));
  }
}

void require_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("tau must be finite and positive, got " + std::to_string(tau));
  }
}

}  // namespace

TemperatureSchedule TemperatureSchedule::reaching_floor_at(double tau0, double tau_min,
                                                           std::size_t steps_to_floor) {
  TemperatureSchedule s;
  s.tau0 = tau0;
  s.tau_min = tau_min;
  s.decay_rate = (steps_to_floor == 0 || tau0 <= tau_min)
                     ? 0.0
                     : std::log(tau0 / tau_min) / static_cast<double>(steps_to_floor);
  s.validate();
  return s;
}

void TemperatureSchedule::validate() const {
  if (!(tau0 > 0.0) || !(tau_min > 0.0) || !(decay_rate >= 0.0)) {
    throw ConfigError("temperature schedule needs tau0 > 0, tau_min > 0, decay_rate >= 0");
  }
}

double tau_at(const TemperatureSchedule& schedule, std::size_t step) {
  return std::max(schedule.tau_min,
                  schedule.tau0 * std::exp(-schedule.decay_rate * static_cast<double>(step)));
}

ad::Var rbf_log_probs(ad::Var z, ad::Var centroids, double sigma) {
  require_sigma(sigma);
  const ad::Var dist = ad::pairwise_sq_dist(z, centroids);
  return ad::log_softmax_rows(ad::scale(dist, -1.0 / (sigma * sigma)));
}

Tensor rbf_log_probs(const Tensor& z, const Tensor& centroids, double sigma) {
  ad::Tape tape;
  return rbf_log_probs(tape.constant(z), tape.constant(centroids), sigma).value();
}

Tensor gumbel_sample(std::size_t n, std::size_t k, Rng& rng) {
  Tensor g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double u = std::clamp(rng.uniform(), kGumbelEps, 1.0 - kGumbelEps);
    g.data()[i] = -std::log(-std::log(u));
  }
  return g;
}

ad::Var concrete_sample(ad::Var log_probs, const Tensor& gumbel, double tau) {
  require_tau(tau);
  ad::Var noise = log_probs.tape().constant(gumbel);
  ad::Var logits = ad::scale(ad::add(log_probs, noise), 1.0 / tau);
  return ad::exp(ad::log_softmax_rows(logits));
}

Tensor discretize(const Tensor& relaxed) {
  Tensor out = Tensor::Zero(relaxed.rows(), relaxed.cols());
  for (Eigen::Index r = 0; r < relaxed.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < relaxed.cols(); ++c) {
      if (relaxed(r, c) > relaxed(r, best)) best = c;
    }
    if (relaxed.cols() > 0) out(r, best) = 1.0;
  }
  return out;
}

ad::Var straight_through(ad::Var relaxed) {
  return ad::straight_through(relaxed, discretize(relaxed.value()));
}

AssignmentMatrix sample_assignment(const Tensor& log_probs, const Tensor& gumbel, double tau) {
  ad::Tape tape;
  AssignmentMatrix a;
  a.relaxed = concrete_sample(tape.constant(log_probs), gumbel, tau).value();
  a.discrete = discretize(a.relaxed);
  return a;
}

Labels hard_assign(const Tensor& z, const Tensor& centroids, double sigma) {
  require_sigma(sigma);
  if (z.cols() != centroids.cols()) {
    throw DimensionError("hard_assign: " + shape_string(z) + " vs centroids " +
                         shape_string(centroids));
  }
  Labels labels(static_cast<std::size_t>(z.rows()), 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
      const double d = row_sq_distance(z, i, centroids, j);
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
    }
  }
  return labels;
}

}  // namespace ckm
