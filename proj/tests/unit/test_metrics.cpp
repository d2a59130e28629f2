#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ckm/error.hpp"
#include "ckm/metrics.hpp"
#include "ckm/tensor.hpp"
#include "oracles.hpp"

using namespace ckm;

namespace {

Labels random_labels(std::size_t n, int k, Rng& rng) {
  Labels out(n);
  for (auto& l : out) l = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
  return out;
}

}  // namespace

TEST_CASE("contingency") {
  const Labels a{0, 1, 2, 1};
  const ContingencyTable same = contingency(a, a);
  CHECK(same.counts == std::vector<std::vector<std::size_t>>{{1, 0, 0}, {0, 2, 0}, {0, 0, 1}});

  const ContingencyTable t = contingency({0, 0, 1, 1}, {0, 0, 0, 1});
  CHECK(t.counts == std::vector<std::vector<std::size_t>>{{2, 0}, {1, 1}});
  CHECK(t.n == 4);

  CHECK(contingency({5}, {9}).counts == std::vector<std::vector<std::size_t>>{{1}});
  CHECK_THROWS_AS(contingency({0, 1}, {0}), InputError);
  CHECK_THROWS_AS(contingency({}, {}), InputError);
}

TEST_CASE("nmi") {
  CHECK(nmi(contingency({0, 0, 1, 1, 2}, {3, 3, 1, 1, 0})) == doctest::Approx(1.0));
  CHECK(nmi(contingency({0, 0, 1, 1}, {0, 0, 0, 0})) == 0.0);
  CHECK(nmi(contingency({0, 0}, {1, 1})) == 1.0);

  // Plug-in entropies for the table [[2,0],[1,1]].
  const double ht = std::log(2.0);
  const double hp = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  const double hj = -(0.5 * std::log(0.5) + 2 * 0.25 * std::log(0.25));
  const double expected = (ht + hp - hj) / std::sqrt(ht * hp);
  CHECK(nmi(contingency({0, 0, 1, 1}, {0, 0, 0, 1})) == doctest::Approx(expected).epsilon(1e-14));

  const auto t = contingency({0, 0, 1, 1}, {0, 0, 0, 1});
  const double mi = ht + hp - hj;
  CHECK(nmi(t, NmiNormalization::arithmetic) == doctest::Approx(2 * mi / (ht + hp)));
  CHECK(nmi(t, NmiNormalization::max) == doctest::Approx(mi / std::max(ht, hp)));
  CHECK(nmi_normalization_from_string("max") == NmiNormalization::max);
  CHECK_THROWS_AS(nmi_normalization_from_string("min"), ConfigError);
}

TEST_CASE("ari") {
  CHECK(ari(contingency({0, 0, 1, 1, 2}, {1, 1, 0, 0, 2})) == doctest::Approx(1.0));
  CHECK(ari(contingency({0, 0, 1, 1}, {0, 1, 0, 1})) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(ari(contingency({0, 0, 0}, {1, 1, 1})) == 1.0);
  CHECK_THROWS_AS(ari(contingency({0}, {0})), InputError);
}

TEST_CASE("purity") {
  CHECK(purity(contingency({0, 1, 1}, {2, 0, 0})) == 1.0);
  CHECK(purity(contingency({0, 0, 1, 1}, {0, 0, 0, 1})) == 0.75);
  CHECK(purity(contingency({0, 0, 1, 1}, {0, 0, 0, 0})) == 0.5);
}

TEST_CASE("metrics agree with independent oracles and ignore cluster ids") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    const std::size_t n = 2 + rng.index(29);
    const Labels t = random_labels(n, 1 + static_cast<int>(rng.index(5)), rng);
    const Labels p = random_labels(n, 1 + static_cast<int>(rng.index(5)), rng);
    const Scores sc = evaluate(t, p);
    CHECK(std::abs(sc.nmi - oracle::entropy_nmi(t, p)) < 1e-12);
    CHECK(std::abs(sc.ari - oracle::pair_counting_ari(t, p)) < 1e-12);
    CHECK(std::abs(sc.acc - oracle::counting_purity(t, p)) < 1e-12);
    CHECK((sc.nmi >= 0.0 && sc.nmi <= 1.0));
    CHECK((sc.acc > 0.0 && sc.acc <= 1.0));
    CHECK((sc.ari >= -1.0 && sc.ari <= 1.0));

    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 10);
    rng.shuffle(perm);
    Labels relabelled = p;
    for (auto& l : relabelled) l = perm[static_cast<std::size_t>(l)];
    const Scores sp = evaluate(t, relabelled);
    CHECK(sp.nmi == doctest::Approx(sc.nmi).epsilon(1e-12));
    CHECK(sp.ari == doctest::Approx(sc.ari).epsilon(1e-12));
    CHECK(sp.acc == sc.acc);
  }
}

TEST_CASE("unrelated labelings score near zero") {
  double ari_sum = 0.0, nmi_sum = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    const Scores sc = evaluate(random_labels(1000, 10, rng), random_labels(1000, 10, rng));
    ari_sum += sc.ari;
    nmi_sum += sc.nmi;
  }
  CHECK(std::abs(ari_sum / 100) < 0.05);
  CHECK(nmi_sum / 100 < 0.1);
}
