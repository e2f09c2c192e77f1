#include "doctest.h"

#include <cmath>
#include <limits>

#include "infodyn/cmeasure.hpp"
#include "infodyn/divergence.hpp"
#include "testutil.hpp"

using namespace infodyn;
using cmeasure::Vec;
using cmeasure::Weights;
using divergence::d_gamma;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec make(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

const std::vector<double> kGammaGrid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

}  // namespace

TEST_CASE("d_gamma: pinned values and extended-real boundaries") {
  Weights two_one(make({2, 1})), ones(make({1, 1}));
  CHECK(d_gamma(two_one, ones, 1.0) ==
        doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-12));
  CHECK(d_gamma(ones, two_one, 0.0) ==
        doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-12));

  for (double g : kGammaGrid) CHECK(d_gamma(two_one, two_one, g) == doctest::Approx(0.0));

  // charging a point the other argument does not
  CHECK(d_gamma(Weights(make({1, 1})), Weights(make({1, 0})), 1.0) == kInf);
  CHECK(d_gamma(Weights(make({1, 0})), Weights(make({1, 1})), 0.0) == kInf);
  // interior gamma stays finite on the same pair
  CHECK(std::isfinite(d_gamma(Weights(make({1, 1})), Weights(make({1, 0})), 0.5)));

  CHECK_THROWS_AS(d_gamma(two_one, Weights(make({1, 1, 1})), 0.5), std::invalid_argument);
  CHECK_THROWS_AS(d_gamma(two_one, ones, 1.5), std::invalid_argument);
}

TEST_CASE("d_gamma: nonnegativity, indiscernibles, duality") {
  testutil::Rng rng(101);
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::Index n = rng.integer(1, 8);
    Weights mu(rng.positive(n)), nu(rng.positive(n));
    bool distinct = (mu.values() - nu.values()).cwiseAbs().maxCoeff() > 1e-6;
    for (double g : kGammaGrid) {
      double d = d_gamma(mu, nu, g);
      CHECK(d >= 0.0);
      if (distinct) CHECK(d >= 1e-12);
      // swap symmetry, same expression term by term
      CHECK(std::abs(d - d_gamma(nu, mu, 1.0 - g)) <= 1e-12 * std::max(1.0, std::abs(d)));
    }
    // near-coincident arguments fall below the zero threshold
    Vec eps = 1e-10 * rng.positive(n, -1.0, 1.0);
    Weights close((mu.values() + eps).cwiseMax(1e-12));
    for (double g : kGammaGrid) CHECK(d_gamma(mu, close, g) < 1e-12);
  }
}

TEST_CASE("kl: pinned values and normalization guard") {
  Weights u(make({0.5, 0.5}));
  CHECK(divergence::kl(u, u) == 0.0);
  CHECK(divergence::kl(u, Weights(make({0.25, 0.75}))) ==
        doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-12));
  CHECK(divergence::kl(Weights(make({1, 0})), u) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(divergence::kl(Weights(make({2, 1})), u), std::invalid_argument);
}

TEST_CASE("csiszar: gamma generators reproduce d_gamma") {
  testutil::Rng rng(211);
  for (double g : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto gen = divergence::gamma_csiszar_generator(g);
    gen.check();
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::Index n = rng.integer(1, 8);
      Weights mu(rng.positive(n)), nu(rng.positive(n));
      double direct = d_gamma(mu, nu, g);
      CHECK(std::abs(divergence::csiszar(mu, nu, gen) - direct) <=
            1e-12 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("csiszar: boundary conventions") {
  auto f1 = divergence::gamma_csiszar_generator(1.0);
  // both zero -> skipped; nu zero -> mu * lim_{t->0} f = inf for the log generator
  CHECK(divergence::csiszar(Weights(make({0, 1})), Weights(make({0, 1})), f1) == 0.0);
  CHECK(divergence::csiszar(Weights(make({1, 1})), Weights(make({0, 1})), f1) == kInf);
  // mu zero -> nu * lim f(t)/t = nu for the log generator
  CHECK(divergence::csiszar(Weights(make({0, 1})), Weights(make({2, 1})), f1) ==
        doctest::Approx(2.0));

  auto f0 = divergence::gamma_csiszar_generator(0.0);
  CHECK(divergence::csiszar(Weights(make({1, 1})), Weights(make({0, 1})), f0) ==
        doctest::Approx(1.0));
  CHECK(divergence::csiszar(Weights(make({0, 1})), Weights(make({2, 1})), f0) == kInf);
}

TEST_CASE("csiszar: generator validation") {
  CHECK_NOTHROW(divergence::xlogx_generator().check());
  CHECK_NOTHROW(divergence::smoothed_tv_generator(0.1).check());

  divergence::CsiszarGenerator concave{[](double t) { return -(t - 1) * (t - 1); }, -1.0, -kInf};
  CHECK_THROWS_AS(concave.check(), std::invalid_argument);
  divergence::CsiszarGenerator shifted{[](double t) { return t; }, 0.0, 1.0};
  CHECK_THROWS_AS(shifted.check(), std::invalid_argument);
}

TEST_CASE("markov monotonicity for csiszar deviations") {
  testutil::Rng rng(307);
  std::vector<divergence::CsiszarGenerator> gens;
  for (double g : {0.0, 0.3, 0.5, 0.7, 1.0}) gens.push_back(divergence::gamma_csiszar_generator(g));
  gens.push_back(divergence::xlogx_generator());
  gens.push_back(divergence::smoothed_tv_generator(0.1));

  for (int rep = 0; rep < 500; ++rep) {
    Eigen::Index n = rng.integer(2, 6), k = rng.integer(1, 6);
    cmeasure::MarkovMap t(rng.stochastic(n, k));
    Weights mu(rng.positive(n)), nu(rng.positive(n));
    Weights mu_t = cmeasure::apply_markov(mu, t), nu_t = cmeasure::apply_markov(nu, t);
    const auto& gen = gens[rep % gens.size()];
    CHECK(divergence::csiszar(mu_t, nu_t, gen) <= divergence::csiszar(mu, nu, gen) + 1e-10);
  }
}

TEST_CASE("quadratic bregman violates markov monotonicity") {
  auto quad = divergence::quadratic_bregman_generator();

  // hand counterexample: collapsing map inflates the squared distance
  cmeasure::Mat col(2, 2);
  col << 1, 0, 1, 0;
  cmeasure::MarkovMap t(col);
  Weights mu(make({2, 1})), nu(make({1, 0}));
  double before = divergence::bregman(mu, nu, quad);
  double after =
      divergence::bregman(cmeasure::apply_markov(mu, t), cmeasure::apply_markov(nu, t), quad);
  CHECK(after > before + 0.5);

  // a random search also finds violations
  testutil::Rng rng(431);
  bool found = false;
  for (int rep = 0; rep < 5000 && !found; ++rep) {
    Eigen::Index n = rng.integer(2, 5), k = rng.integer(1, 4);
    cmeasure::MarkovMap tr(rng.stochastic(n, k));
    Weights a(rng.positive(n)), b(rng.positive(n));
    double d0 = divergence::bregman(a, b, quad);
    double d1 = divergence::bregman(cmeasure::apply_markov(a, tr),
                                    cmeasure::apply_markov(b, tr), quad);
    found = d1 > d0 + 1e-6;
  }
  CHECK(found);
}

TEST_CASE("bregman: pinned generators") {
  testutil::Rng rng(401);
  auto quad = divergence::quadratic_bregman_generator();
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Index n = rng.integer(1, 6);
    Weights p(rng.positive(n)), q(rng.positive(n));
    CHECK(divergence::bregman(p, q, quad) ==
          doctest::Approx(0.5 * (p.values() - q.values()).squaredNorm()).epsilon(1e-12));
    CHECK(divergence::bregman(p, p, quad) == doctest::Approx(0.0));
  }

  for (double g : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto gen = divergence::gamma_bregman_generator(g);
    std::vector<Weights> samples;
    for (int i = 0; i < 6; ++i) samples.emplace_back(rng.positive(3));
    gen.check(samples);
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::Index n = rng.integer(1, 6);
      Weights p(rng.positive(n)), q(rng.positive(n));
      double direct = d_gamma(p, q, g);
      CHECK(std::abs(divergence::bregman(p, q, gen) - direct) <=
            1e-12 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("cosine defect vanishes for bregman structures") {
  testutil::Rng rng(419);
  auto quad = divergence::quadratic_bregman_generator();
  Weights p(make({1, 2}));
  CHECK(divergence::cosine_defect(p, p, p, quad) == doctest::Approx(0.0));

  for (int rep = 0; rep < 200; ++rep) {
    Eigen::Index n = rng.integer(1, 6);
    Weights p1(rng.positive(n)), p2(rng.positive(n)), p3(rng.positive(n));
    CHECK(std::abs(divergence::cosine_defect(p1, p2, p3, quad)) < 1e-12);
    for (double g : {0.0, 0.3, 0.5, 0.8, 1.0}) {
      auto gen = divergence::gamma_bregman_generator(g);
      CHECK(std::abs(divergence::cosine_defect(p1, p2, p3, gen)) < 1e-10);
    }
  }
}

TEST_CASE("legendre dual: analytic values, touch case, unbounded detection") {
  auto half_norm = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  Vec y = make({1, -2});
  auto r = divergence::legendre_dual(half_norm, y, make({-10, -10}), make({10, 10}));
  CHECK(r.bounded);
  CHECK(r.value == doctest::Approx(0.5 * y.squaredNorm()).epsilon(1e-8));
  CHECK((r.argmax - y).cwiseAbs().maxCoeff() < 1e-6);

  auto sum_exp = [](const Vec& x) { return x.array().exp().sum(); };
  Vec yp = make({0.5, 2.0});
  auto r2 = divergence::legendre_dual(sum_exp, yp, make({-10, -10}), make({5, 5}));
  double analytic = 0.5 * std::log(0.5) - 0.5 + 2.0 * std::log(2.0) - 2.0;
  CHECK(r2.bounded);
  CHECK(r2.value == doctest::Approx(analytic).epsilon(1e-8));

  // Fenchel equality: y = grad Psi(x0) makes the dual touch <x0,y> - Psi(x0)
  Vec x0 = make({0.3, -1.1});
  Vec grad = x0.array().exp().matrix();
  auto r3 = divergence::legendre_dual(sum_exp, grad, make({-10, -10}), make({5, 5}));
  CHECK(r3.value == doctest::Approx(x0.dot(grad) - sum_exp(x0)).epsilon(1e-8));

  auto linear = [](const Vec& x) { return x.sum(); };
  auto r4 = divergence::legendre_dual(linear, make({2.0}), make({-5.0}), make({5.0}));
  CHECK_FALSE(r4.bounded);
}
