#include "infodyn/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace infodyn::qstate {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportEps = 1e-10;  // spectral support threshold

// f(rho) = U f(Lambda) U^dagger over the cached decomposition
template <typename F>
CMat spectral(const DensityOperator& rho, F f) {
  const Eigen::VectorXd& ev = rho.eigenvalues();
  const CMat& u = rho.eigenvectors();
  CVec fv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) fv[i] = f(ev[i]);
  return u * fv.asDiagonal() * u.adjoint();
}

double umegaki(const DensityOperator& omega, const DensityOperator& phi) {
  const Eigen::VectorXd& lo = omega.eigenvalues();
  const Eigen::VectorXd& lp = phi.eigenvalues();
  const CMat overlap = omega.eigenvectors().adjoint() * phi.eigenvectors();
  double d = phi.trace() - omega.trace();
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (lo[i] <= kSupportEps) continue;
    d += lo[i] * std::log(lo[i]);
    for (Eigen::Index j = 0; j < lp.size(); ++j) {
      double w = std::norm(overlap(i, j));
      if (w * lo[i] <= 0.0) continue;
      if (lp[j] <= kSupportEps) {
        if (w * lo[i] > kSupportEps) return kInf;  // omega charges ker(phi)
        continue;
      }
      d -= lo[i] * w * std::log(lp[j]);
    }
  }
  return std::max(d, 0.0);
}

}  // namespace

DensityOperator::DensityOperator(CMat m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1)
    throw std::invalid_argument("DensityOperator: matrix must be square and non-empty");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("DensityOperator: matrix is not Hermitian");
  m_ = 0.5 * (m_ + m_.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<CMat> es(m_);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
  for (Eigen::Index i = 0; i < evals_.size(); ++i) {
    if (evals_[i] < -1e-12)
      throw std::invalid_argument("DensityOperator: matrix is not positive semi-definite");
    if (evals_[i] < 0.0) evals_[i] = 0.0;
  }
  if (evals_.sum() <= 0.0) throw std::invalid_argument("DensityOperator: trace must be positive");
  m_ = evecs_ * evals_.cast<Complex>().asDiagonal() * evecs_.adjoint();
}

CMat observable(const CMat& x) {
  if (x.rows() != x.cols()) throw std::invalid_argument("observable: matrix must be square");
  if ((x - x.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("observable: matrix is not Hermitian");
  return 0.5 * (x + x.adjoint().eval());
}

CMat matrix_power(const DensityOperator& rho, Complex alpha) {
  if (alpha.real() < 0.0) throw std::invalid_argument("matrix_power: re(alpha) must be >= 0");
  if (alpha.real() == 0.0 && !rho.faithful())
    throw std::domain_error("matrix_power: imaginary power of a non-faithful state");
  return spectral(rho, [alpha](double lam) -> Complex {
    if (lam <= 0.0) return alpha.real() > 0.0 ? Complex(0.0) : Complex(1.0);
    return std::exp(alpha * std::log(lam));
  });
}

double schatten_norm(const CMat& t, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("schatten_norm: p must be >= 1");
  Eigen::JacobiSVD<CMat> svd(t);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  if (std::isinf(p)) return s.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(s[i], p);
  return std::pow(acc, 1.0 / p);
}

AlgebraElementLp q_gamma_embed(const DensityOperator& rho, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("q_gamma_embed: gamma outside (0, 1]");
  return {matrix_power(rho, gamma) / gamma, 1.0 / gamma};
}

DensityOperator q_gamma_restore(const AlgebraElementLp& e) {
  double gamma = 1.0 / e.exponent;
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("q_gamma_restore: exponent outside [1, inf)");
  DensityOperator scaled(gamma * e.matrix);
  return DensityOperator(matrix_power(scaled, 1.0 / gamma));
}

double q_d_gamma(const DensityOperator& omega, const DensityOperator& phi, double gamma) {
  if (omega.dimension() != phi.dimension())
    throw std::invalid_argument("q_d_gamma: dimension mismatch");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("q_d_gamma: gamma outside [0, 1]");
  if (gamma == 1.0) return umegaki(omega, phi);
  if (gamma == 0.0) return umegaki(phi, omega);
  const Eigen::VectorXd& lo = omega.eigenvalues();
  const Eigen::VectorXd& lp = phi.eigenvalues();
  const CMat overlap = omega.eigenvectors().adjoint() * phi.eigenvectors();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (lo[i] <= 0.0) continue;
    for (Eigen::Index j = 0; j < lp.size(); ++j) {
      if (lp[j] <= 0.0) continue;
      cross += std::pow(lo[i], gamma) * std::pow(lp[j], 1.0 - gamma) * std::norm(overlap(i, j));
    }
  }
  double d = omega.trace() / (1.0 - gamma) + phi.trace() / gamma - cross / (gamma * (1.0 - gamma));
  return std::max(d, 0.0);
}

double wyd_metric(const DensityOperator& omega, const CMat& x, const CMat& y, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("wyd_metric: gamma outside (0, 1)");
  if (!omega.faithful()) throw std::domain_error("wyd_metric: state must be faithful");
  CMat xh = observable(x), yh = observable(y);
  if (xh.rows() != omega.dimension() || yh.rows() != omega.dimension())
    throw std::invalid_argument("wyd_metric: dimension mismatch");
  CMat a = matrix_power(omega, 1.0 - gamma);
  CMat b = matrix_power(omega, gamma);
  return (a * xh * b * yh).trace().real();
}

CMat modular_flow(const DensityOperator& rho, const CMat& x, double t) {
  if (!rho.faithful()) throw std::domain_error("modular_flow: state must be faithful");
  CMat xh = observable(x);
  if (xh.rows() != rho.dimension()) throw std::invalid_argument("modular_flow: dimension mismatch");
  CMat u = matrix_power(rho, Complex(0.0, t));
  CMat out = u * xh * u.adjoint();
  return 0.5 * (out + out.adjoint().eval());
}

CMat connes_cocycle(const DensityOperator& omega, const DensityOperator& phi, double t) {
  if (omega.dimension() != phi.dimension())
    throw std::invalid_argument("connes_cocycle: dimension mismatch");
  if (!omega.faithful() || !phi.faithful())
    throw std::domain_error("connes_cocycle: both states must be faithful");
  return matrix_power(omega, Complex(0.0, t)) * matrix_power(phi, Complex(0.0, -t));
}

double petz_limit_entropy(const DensityOperator& omega, const DensityOperator& phi,
                          const std::vector<double>& t_steps) {
  if (!omega.normalized() || !phi.normalized())
    throw std::invalid_argument("petz_limit_entropy: states must be normalized");
  if (!omega.faithful() || !phi.faithful())
    throw std::domain_error("petz_limit_entropy: states must be faithful");
  if (t_steps.size() < 2)
    throw std::invalid_argument("petz_limit_entropy: need at least two step sizes");
  for (size_t k = 0; k < t_steps.size(); ++k)
    if (t_steps[k] <= 0.0 || (k > 0 && t_steps[k] >= t_steps[k - 1]))
      throw std::invalid_argument("petz_limit_entropy: steps must be positive and decreasing");

  // the estimator is even in t, so extrapolate in t^2 to zero (Neville)
  const size_t m = t_steps.size();
  std::vector<double> x(m), r(m);
  for (size_t k = 0; k < m; ++k) {
    double t = t_steps[k];
    Complex f = (phi.matrix() * connes_cocycle(omega, phi, t)).trace();
    x[k] = t * t;
    r[k] = -f.imag() / t;
  }
  for (size_t level = 1; level < m; ++level)
    for (size_t k = 0; k + level < m; ++k)
      r[k] = r[k + 1] + (r[k + 1] - r[k]) * x[k + level] / (x[k] - x[k + level]);
  return r[0];
}

CMat l2_embed(const DensityOperator& rho) { return 2.0 * matrix_power(rho, 0.5); }

Complex hs_inner(const CMat& s, const CMat& t) {
  if (s.rows() != t.rows() || s.cols() != t.cols())
    throw std::invalid_argument("hs_inner: shape mismatch");
  return (t.adjoint() * s).trace();
}

double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  return 0.5 * schatten_norm(a.matrix() - b.matrix(), 1.0);
}

CMat pauli_x() {
  CMat s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

CMat pauli_y() {
  CMat s(2, 2);
  s << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return s;
}

CMat pauli_z() {
  CMat s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

DensityOperator bloch_state(double bx, double by, double bz) {
  if (bx * bx + by * by + bz * bz > 1.0 + 1e-12)
    throw std::invalid_argument("bloch_state: vector outside the unit ball");
  CMat m = 0.5 * (CMat::Identity(2, 2) + bx * pauli_x() + by * pauli_y() + bz * pauli_z());
  return DensityOperator(m);
}

}  // namespace infodyn::qstate
