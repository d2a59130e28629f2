#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "ckm/concrete.hpp"
#include "ckm/error.hpp"
#include "ckm/kmeans.hpp"
#include "grad_cases.hpp"

using namespace ckm;
using ckm::testing::random_normal;

namespace {

Tensor row(std::initializer_list<double> v) {
  Tensor t(1, static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (double x : v) t(0, j++) = x;
  return t;
}

Labels nearest_by_loop(const Tensor& Z, const Tensor& M) {
  Labels out;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    int best = 0;
    double bd = (Z.row(i) - M.row(0)).squaredNorm();
    for (Eigen::Index j = 1; j < M.rows(); ++j) {
      const double d = (Z.row(i) - M.row(j)).squaredNorm();
      if (d < bd) {
        bd = d;
        best = static_cast<int>(j);
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("rbf_log_probs") {
  SUBCASE("equidistant point gets ln(1/k) everywhere") {
    Tensor M(4, 2);
    M << 1, 0, -1, 0, 0, 1, 0, -1;
    const Tensor lp = rbf_log_probs(Tensor::Zero(1, 2), M, 0.7);
    for (int j = 0; j < 4; ++j) CHECK(lp(0, j) == doctest::Approx(std::log(0.25)));
  }
  SUBCASE("hand-evaluated two-centroid case gives (0.75, 0.25)") {
    const double sigma = 1.7;
    Tensor M(2, 1);
    M << 0.0, std::sqrt(sigma * sigma * std::log(3.0));
    const Tensor lp = rbf_log_probs(Tensor::Zero(1, 1), M, sigma);
    CHECK(std::exp(lp(0, 0)) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(std::exp(lp(0, 1)) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("huge sigma is uniform") {
    Rng rng(1);
    const Tensor lp = rbf_log_probs(random_normal(5, 3, rng), random_normal(4, 3, rng), 1e8);
    CHECK((lp.array().exp() - 0.25).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("rows are normalised") {
    Rng rng(2);
    const Tensor lp = rbf_log_probs(random_normal(20, 3, rng, 5), random_normal(6, 3, rng), 0.3);
    for (Eigen::Index i = 0; i < lp.rows(); ++i) {
      CHECK(std::abs(lp.row(i).array().exp().sum() - 1.0) < 1e-9);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(rbf_log_probs(Tensor::Zero(1, 2), Tensor::Zero(2, 2), 0.0), ConfigError);
    CHECK_THROWS_AS(rbf_log_probs(Tensor::Zero(1, 2), Tensor::Zero(2, 2), -1.0), ConfigError);
    CHECK_THROWS_AS(rbf_log_probs(Tensor::Zero(1, 2), Tensor::Zero(2, 3), 1.0), DimensionError);
  }
}

TEST_CASE("gumbel_sample") {
  Rng a(42), b(42);
  CHECK(gumbel_sample(7, 3, a) == gumbel_sample(7, 3, b));

  Rng rng(123);
  const Tensor G = gumbel_sample(1000, 1000, rng);
  CHECK(G.allFinite());
  CHECK(std::abs(G.mean() - 0.5772156649) < 0.01);
}

TEST_CASE("concrete_sample") {
  Rng rng(8);
  const Tensor lp = log_softmax_rows(random_normal(6, 5, rng, 2.0));

  SUBCASE("no noise at unit temperature returns the probabilities") {
    const AssignmentMatrix a = sample_assignment(lp, Tensor::Zero(6, 5), 1.0);
    CHECK((a.relaxed - Tensor(lp.array().exp())).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("very high temperature is uniform") {
    const Tensor G = gumbel_sample(6, 5, rng);
    const AssignmentMatrix a = sample_assignment(lp, G, 1e6);
    CHECK((a.relaxed.array() - 0.2).abs().maxCoeff() < 1e-3);
  }
  SUBCASE("very low temperature is the one-hot at argmax(log p + G)") {
    const Tensor G = gumbel_sample(6, 5, rng);
    const AssignmentMatrix a = sample_assignment(lp, G, 1e-4);
    const Tensor perturbed = lp + G;
    for (Eigen::Index i = 0; i < 6; ++i) {
      Eigen::Index arg;
      perturbed.row(i).maxCoeff(&arg);
      for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(std::abs(a.relaxed(i, j) - (j == arg ? 1.0 : 0.0)) < 1e-3);
      }
    }
  }
  SUBCASE("invariants of the assignment matrix") {
    for (double tau : {1e-3, 0.1, 1.0, 10.0}) {
      const AssignmentMatrix a = sample_assignment(lp, gumbel_sample(6, 5, rng), tau);
      for (Eigen::Index i = 0; i < 6; ++i) {
        CHECK(std::abs(a.relaxed.row(i).sum() - 1.0) < 1e-9);
        CHECK(a.relaxed.row(i).minCoeff() >= 0.0);
        CHECK(a.discrete.row(i).sum() == 1.0);
        Eigen::Index ra, da;
        a.relaxed.row(i).maxCoeff(&ra);
        a.discrete.row(i).maxCoeff(&da);
        CHECK(ra == da);
      }
    }
  }
  SUBCASE("non-positive temperature") {
    ad::Tape tape;
    CHECK_THROWS_AS(concrete_sample(tape.constant(lp), Tensor::Zero(6, 5), 0.0), ConfigError);
  }
}

TEST_CASE("discretized low-temperature samples follow the categorical distribution") {
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.15, 0.25};
  const Eigen::Index n = 100000, k = 5;
  Tensor lp(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) lp(i, j) = std::log(p[static_cast<std::size_t>(j)]);
  }
  Rng rng(2024);
  const AssignmentMatrix a = sample_assignment(lp, gumbel_sample(n, k, rng), 1e-3);
  const Eigen::RowVectorXd counts = a.discrete.colwise().sum();
  double chi2 = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double expected = static_cast<double>(n) * p[static_cast<std::size_t>(j)];
    chi2 += (counts(j) - expected) * (counts(j) - expected) / expected;
  }
  const double pvalue =
      boost::math::cdf(boost::math::complement(boost::math::chi_squared(k - 1), chi2));
  CHECK(pvalue > 0.01);
}

TEST_CASE("discretize") {
  CHECK(discretize(row({0.2, 0.5, 0.3})) == row({0, 1, 0}));
  CHECK(discretize(row({0, 0, 1})) == row({0, 0, 1}));
  CHECK(discretize(row({0.5, 0.5})) == row({1, 0}));
}

TEST_CASE("straight_through") {
  Rng rng(4);
  ad::Tape tape;
  auto relaxed = concrete_sample(tape.parameter(log_softmax_rows(random_normal(5, 3, rng))),
                                 gumbel_sample(5, 3, rng), 0.5);
  auto st = straight_through(relaxed);
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK((st.value().row(i).array() != 0.0).count() == 1);
  }
  tape.backward(ad::sum(st));
  CHECK(relaxed.grad() == Tensor::Ones(5, 3));
}

TEST_CASE("concrete k-means loss gradients with the sample frozen") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    const auto e = ckm::testing::ckm_loss_grad_errors(s);
    CHECK(e.centroids_direct < 1e-4);
    CHECK(e.estimator_m < 1e-4);
    CHECK(e.estimator_z < 1e-4);
  }
}

TEST_CASE("hard_assign") {
  Tensor M(3, 2);
  M << 0, 0, 5, 5, -3, 2;
  CHECK(hard_assign(M, M, 1.0) == Labels{0, 1, 2});

  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    const Tensor Z = random_normal(30, 3, rng, 3.0);
    const Tensor C = random_normal(1 + static_cast<Eigen::Index>(rng.index(6)), 3, rng, 3.0);
    const Labels a = hard_assign(Z, C, 0.1);
    CHECK(a == hard_assign(Z, C, 10.0));
    CHECK(a == assign_step(Z, CentroidSet{C}));
    CHECK(a == nearest_by_loop(Z, C));
  }
  CHECK_THROWS_AS(hard_assign(M, M, 0.0), ConfigError);
}

TEST_CASE("temperature schedule") {
  TemperatureSchedule s{2.0, 0.1, 0.3};
  CHECK(tau_at(s, 0) == 2.0);
  CHECK(tau_at(s, 1000000) == 0.1);
  double prev = tau_at(s, 0);
  for (std::size_t t = 1; t < 50; ++t) {
    CHECK(tau_at(s, t) <= prev);
    CHECK(tau_at(s, t) >= 0.1);
    prev = tau_at(s, t);
  }

  TemperatureSchedule half{1.0, 0.01, std::log(2.0)};
  CHECK(tau_at(half, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const auto f = TemperatureSchedule::reaching_floor_at(1.0, 0.1, 50);
  CHECK(tau_at(f, 49) > 0.1);
  CHECK(tau_at(f, 50) == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS((TemperatureSchedule{0.0, 0.1, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((TemperatureSchedule{1.0, 0.0, 1.0}.validate()), ConfigError);
}
