#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "infodyn/errors.hpp"

namespace infodyn::qstate {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Positive functional on the n x n matrix algebra. Hermitian within 1e-12,
// eigenvalues in [-1e-12, 0] are clipped to zero, anything more negative is
// rejected. The validated spectral decomposition is cached for reuse by the
// functional calculus.
class DensityOperator {
 public:
  explicit DensityOperator(CMat m);

  const CMat& matrix() const { return m_; }
  Eigen::Index dimension() const { return m_.rows(); }
  double trace() const { return evals_.sum(); }
  bool normalized(double tol = 1e-12) const { return std::abs(trace() - 1.0) < tol; }
  bool faithful() const { return evals_.minCoeff() > 1e-10; }

  // ascending eigenvalues (clipped) and the matching orthonormal eigenvectors
  const Eigen::VectorXd& eigenvalues() const { return evals_; }
  const CMat& eigenvectors() const { return evecs_; }

 private:
  CMat m_;
  Eigen::VectorXd evals_;
  CMat evecs_;
};

// Validates Hermiticity within 1e-12 and returns the symmetrized matrix.
CMat observable(const CMat& x);

// Element of the Schatten p-class, tagged with its exponent.
struct AlgebraElementLp {
  CMat matrix;
  double exponent = 1.0;
};

// Spectral calculus rho^alpha for re(alpha) >= 0, with 0^alpha = 0 when
// re(alpha) > 0; purely imaginary exponents require a faithful state.
CMat matrix_power(const DensityOperator& rho, Complex alpha);

// (sum sigma_i^p)^(1/p) over singular values; p = inf gives the largest one.
double schatten_norm(const CMat& t, double p);

// rho^gamma / gamma for gamma in (0, 1], tagged with exponent 1/gamma.
AlgebraElementLp q_gamma_embed(const DensityOperator& rho, double gamma);

// Inverse of q_gamma_embed.
DensityOperator q_gamma_restore(const AlgebraElementLp& e);

// The gamma-deviation family on positive functionals:
//   gamma in (0,1): tr omega/(1-gamma) + tr phi/gamma
//                   - re tr(omega^gamma phi^(1-gamma)) / (gamma (1-gamma))
//   gamma = 1:      tr phi - tr omega + tr omega (log omega - log phi),
//                   +inf unless support(omega) <= support(phi)
//   gamma = 0:      the gamma = 1 form with the arguments swapped
// Satisfies q_d_gamma(omega, phi, gamma) = q_d_gamma(phi, omega, 1 - gamma).
double q_d_gamma(const DensityOperator& omega, const DensityOperator& phi, double gamma);

// re tr(omega^(1-gamma) x omega^gamma y) for faithful omega, gamma in (0,1):
// the Wigner-Yanase-Dyson family of monotone metrics.
double wyd_metric(const DensityOperator& omega, const CMat& x, const CMat& y, double gamma);

// Modular automorphism rho^(it) x rho^(-it) of a faithful state.
CMat modular_flow(const DensityOperator& rho, const CMat& x, double t);

// Connes cocycle [D omega : D phi]_t = rho_omega^(it) rho_phi^(-it),
// both states faithful.
CMat connes_cocycle(const DensityOperator& omega, const DensityOperator& phi, double t);

// Numerical limit of -im tr(rho_phi [D omega : D phi]_t) / t as t -> +0 by
// polynomial extrapolation in t^2 over the supplied decreasing steps; equals
// q_d_gamma(phi, omega, 1) on normalized faithful pairs.
double petz_limit_entropy(const DensityOperator& omega, const DensityOperator& phi,
                          const std::vector<double>& t_steps);

// 2 rho^(1/2), the embedding into the Hilbert-Schmidt space.
CMat l2_embed(const DensityOperator& rho);

// tr(T^dagger S), the Hilbert-Schmidt inner product, conjugate-linear in T.
Complex hs_inner(const CMat& s, const CMat& t);

// (1/2) || a - b ||_1.
double trace_distance(const DensityOperator& a, const DensityOperator& b);

// Qubit helpers.
CMat pauli_x();
CMat pauli_y();
CMat pauli_z();

// (I + bx sigma_x + by sigma_y + bz sigma_z) / 2 for |b| <= 1.
DensityOperator bloch_state(double bx, double by, double bz);

}  // namespace infodyn::qstate
