#include <doctest.h>

#include <algorithm>
#include <set>

#include "ckm/error.hpp"
#include "ckm/kmeans.hpp"
#include "grad_cases.hpp"
#include "oracles.hpp"

using namespace ckm;
using ckm::testing::random_normal;

namespace {

Tensor pts(std::initializer_list<std::pair<double, double>> p) {
  Tensor t(static_cast<Eigen::Index>(p.size()), 2);
  Eigen::Index i = 0;
  for (auto [x, y] : p) {
    t(i, 0) = x;
    t(i, 1) = y;
    ++i;
  }
  return t;
}

bool is_row_of(const Tensor& X, const Tensor& M, Eigen::Index j) {
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (X.row(i) == M.row(j)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("assign_step") {
  const Tensor M = pts({{0, 0}, {4, 1}, {-2, 7}});
  CHECK(assign_step(M, CentroidSet{M}) == Labels{0, 1, 2});

  CHECK(assign_step(pts({{0, 0}, {1, 0}, {9, 0}, {10, 0}}), CentroidSet{pts({{0.5, 0}, {9.5, 0}})}) ==
        Labels{0, 0, 1, 1});

  CHECK(assign_step(pts({{0, 0}}), CentroidSet{pts({{1, 0}, {-1, 0}})}) == Labels{0});
  CHECK_THROWS_AS(assign_step(pts({{0, 0}}), CentroidSet{Tensor::Zero(2, 3)}), DimensionError);
}

TEST_CASE("update_step") {
  const Tensor X = pts({{1, 2}, {3, -1}});
  CHECK(update_step(X, {0, 1}, 2).M == X);

  CHECK(update_step(pts({{0, 0}, {2, 0}}), {0, 0}, 1).M == pts({{1, 0}}));

  const Tensor Y = pts({{0, 0}, {10, 10}});
  const CentroidSet current{pts({{0, 0}, {50, 50}})};
  const CentroidSet next = update_step(Y, {0, 0}, 2, &current);
  CHECK(next.M.row(0) == pts({{5, 5}}).row(0));
  CHECK(next.M.row(1) == pts({{10, 10}}).row(0));

  CHECK_THROWS_AS(update_step(Y, {0, 2}, 2), InputError);
}

TEST_CASE("update_step means minimise the objective for fixed labels") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    const Tensor X = random_normal(25, 3, rng);
    Labels labels(25);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
    const CentroidSet best = update_step(X, labels, 3);
    const double f = kmeans_objective(X, labels, best);
    for (int t = 0; t < 10; ++t) {
      CentroidSet moved = best;
      moved.M += random_normal(3, 3, rng, 0.01);
      CHECK(kmeans_objective(X, labels, moved) >= f);
    }
  }
}

TEST_CASE("lloyd") {
  SUBCASE("optimal init converges in one iteration") {
    const Tensor X = pts({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
    const LloydResult r = lloyd(X, CentroidSet{pts({{0, 0.5}, {10, 0.5}})});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.labels == Labels{0, 0, 1, 1});
    CHECK(r.objective == 1.0);
  }
  SUBCASE("result objective equals a fresh evaluation") {
    Rng rng(3);
    const Tensor X = random_normal(60, 4, rng);
    const LloydResult r = lloyd_best_of(X, 4, LloydConfig{}, 7);
    CHECK(r.objective == kmeans_objective(X, r.labels, r.centroids));
    CHECK(r.objective == doctest::Approx(oracle::labelling_cost(X, r.labels, 4)).epsilon(1e-12));
    for (int l : r.labels) CHECK((l >= 0 && l < 4));
  }
  SUBCASE("max_iter must be positive") {
    CHECK_THROWS_AS(lloyd(pts({{0, 0}}), CentroidSet{pts({{0, 0}})}, 0), InputError);
  }
}

TEST_CASE("lloyd on tiny instances is locally and usually globally optimal") {
  int hits = 0;
  const int instances = 60;
  for (int s = 0; s < instances; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    const auto n = static_cast<Eigen::Index>(3 + rng.index(6));
    const Tensor X = random_normal(n, 1 + static_cast<Eigen::Index>(rng.index(3)), rng);
    const LloydResult r = lloyd_best_of(X, 2, LloydConfig{}, static_cast<std::uint64_t>(s));

    for (Eigen::Index i = 0; i < n; ++i) {
      Labels flipped = r.labels;
      flipped[static_cast<std::size_t>(i)] = 1 - flipped[static_cast<std::size_t>(i)];
      CHECK(r.objective <= oracle::labelling_cost(X, flipped, 2) + 1e-12);
    }
    const double global = oracle::exhaustive_two_means(X);
    CHECK(r.objective >= global - 1e-12);
    if (r.objective <= global + 1e-9 * std::max(1.0, global)) ++hits;
  }
  CHECK(hits >= instances * 95 / 100);
}

TEST_CASE("kmeanspp_init") {
  SUBCASE("N == k returns the points themselves") {
    const Tensor X = pts({{1, 1}, {2, 5}, {-3, 0}});
    Rng rng(1);
    const CentroidSet c = kmeanspp_init(X, 3, rng);
    std::set<std::pair<double, double>> a, b;
    for (Eigen::Index i = 0; i < 3; ++i) {
      a.insert({X(i, 0), X(i, 1)});
      b.insert({c.M(i, 0), c.M(i, 1)});
    }
    CHECK(a == b);
  }
  SUBCASE("D^2 weighting picks the only point with nonzero distance") {
    Tensor X = Tensor::Zero(10, 2);
    X(9, 0) = 100.0;
    for (std::uint64_t s = 0; s < 30; ++s) {
      Rng rng(s);
      const CentroidSet c = kmeanspp_init(X, 2, rng);
      std::set<double> xs{c.M(0, 0), c.M(1, 0)};
      CHECK(xs == std::set<double>{0.0, 100.0});
    }
  }
  SUBCASE("deterministic and distinct rows") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng data(s);
      const Tensor X = random_normal(40, 3, data);
      Rng a(s), b(s);
      const CentroidSet c1 = kmeanspp_init(X, 5, a);
      CHECK(c1.M == kmeanspp_init(X, 5, b).M);
      for (Eigen::Index j = 0; j < 5; ++j) {
        CHECK(is_row_of(X, c1.M, j));
        for (Eigen::Index l = 0; l < j; ++l) CHECK(c1.M.row(j) != c1.M.row(l));
      }
    }
  }
  SUBCASE("N < k") {
    Rng rng(0);
    CHECK_THROWS_AS(kmeanspp_init(Tensor::Zero(2, 2), 3, rng), InputError);
  }
}

TEST_CASE("kmeans_objective") {
  const Tensor M = pts({{1, 2}, {-1, 0}});
  const Labels labels{0, 1, 1, 0};
  const Tensor H = one_hot(labels, 2);
  CHECK(kmeans_objective(H * M, H, CentroidSet{M}) == 0.0);
  CHECK(kmeans_objective(pts({{3, 4}}), one_hot({0}, 1), CentroidSet{pts({{0, 0}})}) == 25.0);

  Rng rng(5);
  const Tensor X = random_normal(4, 2, rng);
  double loop = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double d = X(i, j) - M(labels[static_cast<std::size_t>(i)], j);
      loop += d * d;
    }
  }
  CHECK(kmeans_objective(X, H, CentroidSet{M}) == doctest::Approx(loop).epsilon(1e-14));
  CHECK(kmeans_objective(X, H, CentroidSet{M}) == kmeans_objective(X, labels, CentroidSet{M}));

  Tensor bad = H;
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(kmeans_objective(X, bad, CentroidSet{M}), ContractError);
}

TEST_CASE("lloyd best-of recovers well separated blobs") {
  Rng rng(10);
  Tensor X(300, 2);
  Labels truth(300);
  for (Eigen::Index i = 0; i < 300; ++i) {
    const int c = static_cast<int>(i / 100);
    truth[static_cast<std::size_t>(i)] = c;
    X(i, 0) = 20.0 * c + rng.normal();
    X(i, 1) = (c == 1 ? 20.0 : 0.0) + rng.normal();
  }
  const LloydResult r = lloyd_best_of(X, 3, LloydConfig{}, 0);
  CHECK(oracle::entropy_nmi(truth, r.labels) > 0.99);
}
