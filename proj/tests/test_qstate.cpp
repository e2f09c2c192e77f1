#include "infodyn/qstate.hpp"

#include <cmath>
#include <complex>

#include "doctest.h"
#include "infodyn/cmeasure.hpp"
#include "infodyn/divergence.hpp"
#include "testutil.hpp"

using namespace infodyn;
using qstate::CMat;
using qstate::Complex;
using qstate::DensityOperator;
using Vec = Eigen::VectorXd;

namespace {

CMat cdiag(std::initializer_list<double> d) {
  Eigen::VectorXd v(Eigen::Index(d.size()));
  Eigen::Index k = 0;
  for (double x : d) v[k++] = x;
  return v.cast<Complex>().asDiagonal();
}

DensityOperator conjugated(const CMat& u, const Vec& spectrum) {
  return DensityOperator(u * spectrum.cast<Complex>().asDiagonal() * u.adjoint());
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

const double kGammaGrid[] = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};

}  // namespace

TEST_CASE("density operator validation") {
  CHECK_THROWS_AS(DensityOperator(CMat::Zero(2, 3)), std::invalid_argument);

  CMat skew(2, 2);
  skew << 1.0, Complex(0.0, 0.5), Complex(0.0, 0.5), 1.0;
  CHECK_THROWS_AS(DensityOperator{skew}, std::invalid_argument);

  CHECK_THROWS_AS(DensityOperator(cdiag({1.0, -0.5})), std::invalid_argument);
  CHECK_THROWS_AS(DensityOperator(CMat::Zero(2, 2)), std::invalid_argument);

  // eigenvalues in [-1e-12, 0] are clipped to zero
  DensityOperator clipped(cdiag({1.0, -5e-13}));
  CHECK(clipped.eigenvalues().minCoeff() == 0.0);
  CHECK(clipped.trace() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!clipped.faithful());

  DensityOperator mixed(cdiag({0.5, 0.5}));
  CHECK(mixed.normalized());
  CHECK(mixed.faithful());
  DensityOperator unnorm(cdiag({2.0, 1.0}));
  CHECK(!unnorm.normalized());
  CHECK(unnorm.trace() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("matrix power: spectral calculus") {
  testutil::Rng rng(101);
  DensityOperator rho(rng.density(3));

  CHECK((qstate::matrix_power(rho, 1.0) - rho.matrix()).cwiseAbs().maxCoeff() < 1e-13);

  DensityOperator d41(cdiag({4.0, 1.0}));
  CHECK((qstate::matrix_power(d41, 0.5) - cdiag({2.0, 1.0})).cwiseAbs().maxCoeff() < 1e-12);

  // imaginary powers of a faithful state are unitary
  CMat u = qstate::matrix_power(rho, Complex(0.0, 0.7));
  CHECK((u * u.adjoint() - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  // exponent additivity
  CMat lhs = qstate::matrix_power(rho, 0.3) * qstate::matrix_power(rho, 0.45);
  CHECK((lhs - qstate::matrix_power(rho, 0.75)).cwiseAbs().maxCoeff() < 1e-12);

  // zero eigenvalues map to zero for positive real part
  DensityOperator pure(cdiag({1.0, 0.0}));
  CHECK((qstate::matrix_power(pure, 2.0) - pure.matrix()).cwiseAbs().maxCoeff() < 1e-13);

  // alpha = 0 on a faithful state gives the identity
  CHECK((qstate::matrix_power(rho, 0.0) - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(qstate::matrix_power(rho, Complex(-0.2, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(qstate::matrix_power(pure, Complex(0.0, 1.0)), std::domain_error);
}

TEST_CASE("schatten norms") {
  CHECK(qstate::schatten_norm(CMat::Zero(3, 3), 2.0) == 0.0);
  CHECK(qstate::schatten_norm(cdiag({3.0, 4.0}), 2.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(qstate::schatten_norm(cdiag({3.0, 4.0}),
                              std::numeric_limits<double>::infinity()) ==
        doctest::Approx(4.0).epsilon(1e-12));

  testutil::Rng rng(103);
  DensityOperator rho(rng.density(4));
  CHECK(qstate::schatten_norm(rho.matrix(), 1.0) ==
        doctest::Approx(rho.trace()).epsilon(1e-12));

  CHECK_THROWS_AS(qstate::schatten_norm(cdiag({1.0}), 0.5), std::invalid_argument);
}

TEST_CASE("gamma embedding and restore") {
  testutil::Rng rng(107);
  DensityOperator rho(rng.density(3));

  auto e1 = qstate::q_gamma_embed(rho, 1.0);
  CHECK((e1.matrix - rho.matrix()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(e1.exponent == doctest::Approx(1.0));

  DensityOperator d41(cdiag({4.0, 1.0}));
  auto eh = qstate::q_gamma_embed(d41, 0.5);
  CHECK((eh.matrix - cdiag({4.0, 2.0})).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(eh.exponent == doctest::Approx(2.0));

  for (double g : {0.2, 0.5, 0.8, 1.0}) {
    DensityOperator back = qstate::q_gamma_restore(qstate::q_gamma_embed(rho, g));
    CHECK((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }

  CHECK_THROWS_AS(qstate::q_gamma_embed(rho, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(qstate::q_gamma_embed(rho, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(qstate::q_gamma_embed(rho, -0.3), std::invalid_argument);
}

TEST_CASE("gamma deviation: pinned values") {
  DensityOperator omega(cdiag({0.75, 0.25}));
  DensityOperator phi(cdiag({0.5, 0.5}));
  double expected = std::log(2.0) + 0.75 * std::log(0.75) + 0.25 * std::log(0.25);
  CHECK(qstate::q_d_gamma(omega, phi, 1.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.130812).epsilon(1e-5));

  testutil::Rng rng(109);
  DensityOperator rho(rng.density(3));
  for (double g : kGammaGrid) CHECK(qstate::q_d_gamma(rho, rho, g) < 1e-12);

  // disjoint supports: infinite at the endpoints, finite inside
  DensityOperator e0(cdiag({1.0, 0.0}));
  DensityOperator e1(cdiag({0.0, 1.0}));
  CHECK(qstate::q_d_gamma(e0, e1, 1.0) == std::numeric_limits<double>::infinity());
  CHECK(qstate::q_d_gamma(e0, e1, 0.0) == std::numeric_limits<double>::infinity());
  CHECK(qstate::q_d_gamma(e0, e1, 0.5) == doctest::Approx(4.0).epsilon(1e-12));

  CHECK_THROWS_AS(qstate::q_d_gamma(omega, DensityOperator(cdiag({1.0, 1.0, 1.0})), 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(qstate::q_d_gamma(omega, phi, 1.5), std::invalid_argument);
}

TEST_CASE("gamma deviation: commuting pairs reduce to the classical family") {
  testutil::Rng rng(113);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Index n = rng.integer(2, 4);
    Vec a = rng.positive(n, 0.1, 1.0), b = rng.positive(n, 0.1, 1.0);
    CMat u = rng.unitary(n);
    DensityOperator qa = conjugated(u, a), qb = conjugated(u, b);
    for (double g : kGammaGrid) {
      double quantum = qstate::q_d_gamma(qa, qb, g);
      double classical =
          divergence::d_gamma(cmeasure::Weights(a), cmeasure::Weights(b), g);
      CHECK(std::abs(quantum - classical) < 1e-12 * std::max(1.0, classical));
    }
  }
}

TEST_CASE("gamma deviation: duality and positivity") {
  testutil::Rng rng(127);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::Index n = rng.integer(2, 4);
    DensityOperator omega(rng.density(n));
    DensityOperator phi(rng.density(n));
    for (double g : kGammaGrid) {
      double d = qstate::q_d_gamma(omega, phi, g);
      double dual = qstate::q_d_gamma(phi, omega, 1.0 - g);
      CHECK(d >= 0.0);
      CHECK(std::abs(d - dual) < 1e-12 * std::max(1.0, d));
    }
    CHECK(qstate::q_d_gamma(omega, phi, 0.5) > 1e-12);
  }
}

TEST_CASE("hilbert identity at gamma one half") {
  testutil::Rng rng(131);
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::Index n = rng.integer(2, 4);
    DensityOperator omega(rng.density(n, 0.01));
    DensityOperator phi(rng.density(n, 0.01));
    double lhs = qstate::q_d_gamma(omega, phi, 0.5);
    double diff = qstate::schatten_norm(qstate::l2_embed(omega) - qstate::l2_embed(phi), 2.0);
    CHECK(std::abs(lhs - 0.5 * diff * diff) < 1e-10);
  }
}

TEST_CASE("normalized-state form of the interior deviation") {
  testutil::Rng rng(137);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Index n = rng.integer(2, 4);
    DensityOperator omega(rng.density(n));
    DensityOperator phi(rng.density(n));
    for (double g : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      double direct = qstate::q_d_gamma(omega, phi, g);
      Complex cross =
          (qstate::matrix_power(omega, g) * qstate::matrix_power(phi, 1.0 - g)).trace();
      double hasegawa = (phi.trace() - cross.real()) / (g - g * g);
      CHECK(std::abs(direct - hasegawa) < 1e-10);
    }
  }
}

TEST_CASE("gamma deviation does not increase under partial trace") {
  testutil::Rng rng(139);
  for (int rep = 0; rep < 50; ++rep) {
    DensityOperator omega(rng.density(2));
    DensityOperator phi(rng.density(2));
    DensityOperator tau(rng.density(2));
    DensityOperator ext_omega(kron(omega.matrix(), tau.matrix()));
    DensityOperator ext_phi(kron(phi.matrix(), tau.matrix()));
    for (double g : kGammaGrid)
      CHECK(qstate::q_d_gamma(omega, phi, g) <=
            qstate::q_d_gamma(ext_omega, ext_phi, g) + 1e-10);
  }
}

TEST_CASE("wyd metric") {
  DensityOperator half(cdiag({0.5, 0.5}));
  CHECK(qstate::wyd_metric(half, CMat::Zero(2, 2), qstate::pauli_x(), 0.5) == 0.0);
  CHECK(qstate::wyd_metric(half, qstate::pauli_x(), qstate::pauli_x(), 0.5) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // commuting diagonal case is gamma-independent
  testutil::Rng rng(149);
  for (int rep = 0; rep < 20; ++rep) {
    Vec w = rng.positive(3, 0.1, 1.0);
    Vec x(3), y(3);
    for (int i = 0; i < 3; ++i) {
      x[i] = rng.uniform(-1.0, 1.0);
      y[i] = rng.uniform(-1.0, 1.0);
    }
    DensityOperator rho(w.cast<Complex>().asDiagonal().toDenseMatrix());
    double expected = (w.array() * x.array() * y.array()).sum();
    for (double g : {0.2, 0.5, 0.8}) {
      double got = qstate::wyd_metric(rho, x.cast<Complex>().asDiagonal(),
                                      y.cast<Complex>().asDiagonal(), g);
      CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  // symmetric and positive definite on the full observable space
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Index n = rng.integer(2, 3);
    DensityOperator rho(rng.density(n));
    std::vector<CMat> basis;
    for (Eigen::Index i = 0; i < n; ++i) {
      CMat e = CMat::Zero(n, n);
      e(i, i) = 1.0;
      basis.push_back(e);
    }
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        CMat re = CMat::Zero(n, n), im = CMat::Zero(n, n);
        re(i, j) = re(j, i) = 1.0;
        im(i, j) = Complex(0.0, -1.0);
        im(j, i) = Complex(0.0, 1.0);
        basis.push_back(re);
        basis.push_back(im);
      }
    for (double g : {0.3, 0.5, 0.7}) {
      Eigen::MatrixXd gram(basis.size(), basis.size());
      for (size_t a = 0; a < basis.size(); ++a)
        for (size_t b = 0; b < basis.size(); ++b)
          gram(a, b) = qstate::wyd_metric(rho, basis[a], basis[b], g);
      CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }

  DensityOperator pure(cdiag({1.0, 0.0}));
  CHECK_THROWS_AS(qstate::wyd_metric(pure, qstate::pauli_x(), qstate::pauli_x(), 0.5),
                  std::domain_error);
  CHECK_THROWS_AS(qstate::wyd_metric(half, qstate::pauli_x(), qstate::pauli_x(), 1.0),
                  std::invalid_argument);
}

TEST_CASE("modular flow") {
  testutil::Rng rng(151);
  DensityOperator rho(rng.density(3));
  CMat x = rng.hermitian(3);

  CHECK((qstate::modular_flow(rho, x, 0.0) - x).cwiseAbs().maxCoeff() < 1e-13);

  DensityOperator tracial(cdiag({0.5, 0.5}));
  CMat x2 = rng.hermitian(2);
  CHECK((qstate::modular_flow(tracial, x2, 1.7) - x2).cwiseAbs().maxCoeff() < 1e-12);

  // flow preserves the spectrum of the observable
  CMat moved = qstate::modular_flow(rho, x, 0.9);
  Eigen::SelfAdjointEigenSolver<CMat> ex(x), em(moved);
  CHECK((ex.eigenvalues() - em.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((moved - moved.adjoint()).cwiseAbs().maxCoeff() < 1e-14);

  // group law and state invariance
  for (int rep = 0; rep < 20; ++rep) {
    DensityOperator r(rng.density(2));
    CMat h = rng.hermitian(2);
    double t = rng.uniform(-2.0, 2.0), s = rng.uniform(-2.0, 2.0);
    CMat comp = qstate::modular_flow(r, qstate::modular_flow(r, h, s), t);
    CMat once = qstate::modular_flow(r, h, t + s);
    CHECK((comp - once).cwiseAbs().maxCoeff() < 1e-10);
    Complex before = (r.matrix() * h).trace();
    Complex after = (r.matrix() * qstate::modular_flow(r, h, t)).trace();
    CHECK(std::abs(before - after) < 1e-12);
  }

  DensityOperator pure(cdiag({1.0, 0.0}));
  CHECK_THROWS_AS(qstate::modular_flow(pure, x2, 1.0), std::domain_error);
}

TEST_CASE("connes cocycle") {
  testutil::Rng rng(157);
  DensityOperator omega(rng.density(3));
  DensityOperator phi(rng.density(3));

  CHECK((qstate::connes_cocycle(omega, phi, 0.0) - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-13);
  CHECK((qstate::connes_cocycle(omega, omega, 1.3) - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() <
        1e-12);

  // commuting case: diagonal phases (omega_i / phi_i)^(it)
  Vec a = rng.positive(3, 0.2, 1.0), b = rng.positive(3, 0.2, 1.0);
  CMat u = rng.unitary(3);
  double t = 0.8;
  CMat got = qstate::connes_cocycle(conjugated(u, a), conjugated(u, b), t);
  Eigen::VectorXcd phases(3);
  for (int i = 0; i < 3; ++i)
    phases[i] = std::exp(Complex(0.0, t * std::log(a[i] / b[i])));
  CMat expected = u * phases.asDiagonal() * u.adjoint();
  CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);

  // unitarity and the chain rule
  for (int rep = 0; rep < 20; ++rep) {
    DensityOperator w(rng.density(2)), f(rng.density(2)), p(rng.density(2));
    double tt = rng.uniform(-1.5, 1.5);
    CMat c1 = qstate::connes_cocycle(w, f, tt);
    CHECK((c1 * c1.adjoint() - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CMat chain = c1 * qstate::connes_cocycle(f, p, tt);
    CHECK((chain - qstate::connes_cocycle(w, p, tt)).cwiseAbs().maxCoeff() < 1e-10);
  }

  DensityOperator pure(cdiag({1.0, 0.0}));
  DensityOperator half(cdiag({0.5, 0.5}));
  CHECK_THROWS_AS(qstate::connes_cocycle(pure, half, 0.5), std::domain_error);
}

TEST_CASE("petz limit recovers relative entropy") {
  std::vector<double> steps = {0.2, 0.1, 0.05, 0.025, 0.0125};
  testutil::Rng rng(163);

  DensityOperator omega(rng.density(2));
  CHECK(std::abs(qstate::petz_limit_entropy(omega, omega, steps)) < 1e-10);

  // commuting qubit pair: classical relative entropy of the spectra
  Vec a(2), b(2);
  a << 0.7, 0.3;
  b << 0.4, 0.6;
  CMat u = rng.unitary(2);
  DensityOperator qa = conjugated(u, a), qb = conjugated(u, b);
  double kl = divergence::d_gamma(cmeasure::Weights(b), cmeasure::Weights(a), 1.0);
  CHECK(std::abs(qstate::petz_limit_entropy(qa, qb, steps) - kl) < 1e-6);

  // general faithful pairs: matches the spectral closed form
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Index n = rng.integer(2, 3);
    DensityOperator w(rng.density(n, 0.1)), f(rng.density(n, 0.1));
    double closed = qstate::q_d_gamma(f, w, 1.0);
    CHECK(std::abs(qstate::petz_limit_entropy(w, f, steps) - closed) < 1e-6);
  }

  DensityOperator unnorm(cdiag({2.0, 1.0}));
  CHECK_THROWS_AS(qstate::petz_limit_entropy(unnorm, omega, steps), std::invalid_argument);
  DensityOperator pure(cdiag({1.0, 0.0}));
  CHECK_THROWS_AS(qstate::petz_limit_entropy(pure, omega, steps), std::domain_error);
  CHECK_THROWS_AS(qstate::petz_limit_entropy(omega, omega, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(qstate::petz_limit_entropy(omega, omega, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("hilbert-schmidt embedding") {
  DensityOperator quarter(0.25 * CMat::Identity(2, 2));
  CHECK((qstate::l2_embed(quarter) - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);

  // pure projector embeds to twice itself; the square root amplifies
  // eigenvalue dust near zero to its square root, hence the loose bound
  testutil::Rng rng(167);
  CMat u = rng.unitary(2);
  CMat p = u.col(0) * u.col(0).adjoint();
  DensityOperator pure(p);
  CHECK((qstate::l2_embed(pure) - 2.0 * p).cwiseAbs().maxCoeff() < 1e-7);

  CMat s = rng.complex_gaussian(3), t = rng.complex_gaussian(3);
  double n2 = qstate::schatten_norm(s, 2.0);
  CHECK(std::abs(qstate::hs_inner(s, s).real() - n2 * n2) < 1e-10);
  CHECK(std::abs(qstate::hs_inner(s, s).imag()) < 1e-12);

  // conjugate-linear in the second slot
  Complex z(0.3, -1.1);
  CHECK(std::abs(qstate::hs_inner(z * s, t) - z * qstate::hs_inner(s, t)) < 1e-12);
  CHECK(std::abs(qstate::hs_inner(s, z * t) - std::conj(z) * qstate::hs_inner(s, t)) < 1e-12);

  CHECK_THROWS_AS(qstate::hs_inner(s, CMat::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("trace distance") {
  DensityOperator e0(cdiag({1.0, 0.0}));
  DensityOperator e1(cdiag({0.0, 1.0}));
  CHECK(qstate::trace_distance(e0, e1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(qstate::trace_distance(e0, e0) < 1e-14);

  testutil::Rng rng(173);
  for (int rep = 0; rep < 20; ++rep) {
    DensityOperator a(rng.density(3)), b(rng.density(3)), c(rng.density(3));
    double ab = qstate::trace_distance(a, b);
    CHECK(ab == doctest::Approx(qstate::trace_distance(b, a)).epsilon(1e-12));
    CHECK(ab <= qstate::trace_distance(a, c) + qstate::trace_distance(c, b) + 1e-12);
  }
}

TEST_CASE("bloch helper") {
  DensityOperator z(qstate::bloch_state(0.0, 0.0, 0.5).matrix());
  CHECK((z.matrix() - cdiag({0.75, 0.25})).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(qstate::bloch_state(1.0, 1.0, 0.0), std::invalid_argument);

  // pauli matrices square to the identity
  CHECK((qstate::pauli_x() * qstate::pauli_x() - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((qstate::pauli_y() * qstate::pauli_y() - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((qstate::pauli_z() * qstate::pauli_z() - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() ==
        0.0);
}
