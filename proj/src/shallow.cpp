#include "ckm/shallow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ckm/autodiff.hpp"
#include "ckm/error.hpp"

namespace ckm {

namespace {

constexpr std::uint64_t kTrainingStream = 0x7261696e696e67ULL;

Tensor gather_rows(const Tensor& X, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
  Tensor out(static_cast<Eigen::Index>(end - begin), X.cols());
  for (std::size_t r = begin; r < end; ++r) {
    out.row(static_cast<Eigen::Index>(r - begin)) = X.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

}  // namespace

void ShallowConfig::validate() const {
  if (k == 0) throw ConfigError("shallow: k must be positive");
  if (!(sigma > 0.0)) throw ConfigError("shallow: sigma must be positive");
  if (!(lr > 0.0)) throw ConfigError("shallow: lr must be positive");
  if (batch_size == 0) throw ConfigError("shallow: batch_size must be positive");
  if (epochs == 0) throw ConfigError("shallow: epochs must be positive");
  if (restarts == 0) throw ConfigError("shallow: restarts must be positive");
  if (!(anneal_fraction > 0.0)) throw ConfigError("shallow: anneal_fraction must be positive");
  TemperatureSchedule{tau0, tau_min, decay_rate.value_or(0.0)}.validate();
}

TemperatureSchedule ShallowConfig::schedule(std::size_t steps_per_epoch) const {
  if (decay_rate) return TemperatureSchedule{tau0, tau_min, *decay_rate};
  const double clock = anneal_unit == AnnealUnit::epoch
                           ? static_cast<double>(epochs)
                           : static_cast<double>(epochs * steps_per_epoch);
  const auto floor_at = static_cast<std::size_t>(std::max(1.0, std::round(anneal_fraction * clock)));
  return TemperatureSchedule::reaching_floor_at(tau0, tau_min, floor_at);
}

std::uint64_t kmeanspp_seed(std::uint64_t seed, std::size_t restart) {
  return derive_seed(seed, restart);
}

ShallowResult shallow_ckm_fit_from(const Tensor& X, const CentroidSet& init,
                                   const ShallowConfig& cfg, std::uint64_t stream_seed) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  if (init.dim() != static_cast<std::size_t>(X.cols())) {
    throw DimensionError("shallow_ckm_fit: centroid dim " + std::to_string(init.dim()) +
                         " vs data dim " + std::to_string(X.cols()));
  }
  const std::size_t batch = std::min(cfg.batch_size, n);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const TemperatureSchedule schedule = cfg.schedule(steps_per_epoch);

  Rng rng(stream_seed);
  Tensor M = init.M;
  AdamState state;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  ShallowResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t end = std::min(n, begin + batch);
      const double tau = tau_at(schedule, cfg.anneal_unit == AnnealUnit::epoch ? epoch : step);

      ad::Tape tape;
      ad::Var xb = tape.constant(gather_rows(X, order, begin, end));
      ad::Var mu = tape.parameter(M);
      ad::Var log_p = rbf_log_probs(xb, mu, cfg.sigma);
      const Tensor g = gumbel_sample(end - begin, cfg.k, rng);
      ad::Var h = straight_through(concrete_sample(log_p, g, tau));
      ad::Var loss = ad::sq_frobenius(ad::sub(xb, ad::matmul(h, mu)));
      tape.backward(loss);

      epoch_loss += loss.value()(0, 0);
      optimizer_step(cfg.optimizer, M, mu.grad(), state, cfg.lr);
      ++step;
    }
    result.loss_history.push_back(epoch_loss);
  }

  result.centroids.M = std::move(M);
  result.labels = hard_assign(X, result.centroids.M, cfg.sigma);
  result.objective = kmeans_objective(X, result.labels, result.centroids);
  result.iterations = step;
  result.converged = true;
  return result;
}

ShallowResult shallow_ckm_fit(const Tensor& X, const ShallowConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < cfg.k) {
    throw InputError("shallow_ckm_fit: need N >= k, got N=" + std::to_string(n) +
                     " k=" + std::to_string(cfg.k));
  }
  ShallowResult best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng seeding(kmeanspp_seed(cfg.seed, r));
    const CentroidSet init = kmeanspp_init(X, cfg.k, seeding);
    ShallowResult fit =
        shallow_ckm_fit_from(X, init, cfg, derive_seed(cfg.seed ^ kTrainingStream, r));
    fit.restart = r;
    if (r == 0 || fit.objective < best.objective) best = std::move(fit);
  }
  return best;
}

}  // namespace ckm
