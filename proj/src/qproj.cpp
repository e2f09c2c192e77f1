#include "infodyn/qproj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "infodyn/errors.hpp"

namespace infodyn::qproj {

namespace {

using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportEps = 1e-10;
constexpr int kMaxIterations = 200;

CMat hermitize(const CMat& m) { return 0.5 * (m + m.adjoint().eval()); }

// ---- Hermitian matrices as real vectors (Hilbert-Schmidt isometry) ----

Vec vec_h(const CMat& h) {
  const Eigen::Index d = h.rows();
  Vec v(d * d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) v[k++] = h(i, i).real();
  const double r2 = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      v[k++] = r2 * h(i, j).real();
      v[k++] = r2 * h(i, j).imag();
    }
  return v;
}

CMat mat_h(const Vec& v, Eigen::Index d) {
  CMat h = CMat::Zero(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) h(i, i) = v[k++];
  const double r2 = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      h(i, j) = r2 * Complex(v[k], v[k + 1]);
      h(j, i) = std::conj(h(i, j));
      k += 2;
    }
  return h;
}

// ---- spectral calculus ----

struct Eig {
  Vec s;
  CMat u;
};

Eig eig_of(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  return {es.eigenvalues(), es.eigenvectors()};
}

CMat assemble(const Eig& e, const Vec& f) {
  return e.u * f.cast<Complex>().asDiagonal() * e.u.adjoint();
}

// Divided-difference tables f[s_i, s_j]; applying them entrywise in the
// eigenbasis gives the derivative of the matrix function spectrally.
Mat dd_exp(const Vec& s) {
  const Eigen::Index d = s.size();
  Mat t(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double delta = s[i] - s[j];
      t(i, j) = t(j, i) =
          delta == 0.0 ? std::exp(s[j]) : std::exp(s[j]) * std::expm1(delta) / delta;
    }
  return t;
}

Mat dd_pow(const Vec& s, double g) {
  const Eigen::Index d = s.size();
  Mat t(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double a = s[i], b = s[j];
      double r = (a - b) / b;
      t(i, j) = t(j, i) = r == 0.0 ? g * std::pow(b, g - 1.0)
                                   : std::pow(b, g - 1.0) * std::expm1(g * std::log1p(r)) / r;
    }
  return t;
}

Mat dd_log(const Vec& s) {
  const Eigen::Index d = s.size();
  Mat t(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double r = (s[i] - s[j]) / s[j];
      t(i, j) = t(j, i) = r == 0.0 ? 1.0 / s[j] : std::log1p(r) / (s[j] * r);
    }
  return t;
}

// Derivative of x -> tr(f(x) w) at the eigendecomposition e, as a Hermitian
// gradient matrix; the same contraction applies a matrix-function derivative
// to a direction.
CMat frechet(const Eig& e, const Mat& table, const CMat& w) {
  CMat wh = e.u.adjoint() * w * e.u;
  CMat g = e.u * table.cast<Complex>().cwiseProduct(wh) * e.u.adjoint();
  return hermitize(g);
}

// log on the support, zero on the kernel; callers confine the variable to
// the support first, so the kernel values never couple in
CMat spectral_log(const DensityOperator& rho) {
  Vec s = rho.eigenvalues();
  Vec f(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) f[i] = s[i] > kSupportEps ? std::log(s[i]) : 0.0;
  return rho.eigenvectors() * f.cast<Complex>().asDiagonal() * rho.eigenvectors().adjoint();
}

// Orthonormal basis of the eigenvalue > 1/2 eigenspace of a projector.
CMat projector_range(const CMat& p) {
  Eig e = eig_of(p);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < e.s.size(); ++i)
    if (e.s[i] > 0.5) ++r;
  CMat v(p.rows(), r);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < e.s.size(); ++i)
    if (e.s[i] > 0.5) v.col(k++) = e.u.col(i);
  return v;
}

// Shrink the isometry v to (range v) intersect (range pi), re-orthonormalized
// inside range pi.
CMat refine_isometry(const CMat& v, const CMat& pi) {
  CMat m = hermitize(v.adjoint() * pi * v);
  Eig e = eig_of(m);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < e.s.size(); ++i)
    if (e.s[i] > 1.0 - 1e-9) ++r;
  if (r == 0) return CMat(v.rows(), 0);
  CMat w(v.rows(), r);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < e.s.size(); ++i)
    if (e.s[i] > 1.0 - 1e-9) w.col(k++) = v * e.u.col(i);
  Eigen::HouseholderQR<CMat> qr(pi * w);
  CMat q = qr.householderQ();
  return q.leftCols(r);
}

CMat support_projector(const DensityOperator& rho) {
  Vec s = rho.eigenvalues();
  Vec f(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) f[i] = s[i] > kSupportEps ? 1.0 : 0.0;
  return rho.eigenvectors() * f.cast<Complex>().asDiagonal() * rho.eigenvectors().adjoint();
}

// ---- prepared problem over the compressed subspace ----

struct Prepared {
  double gamma = 1.0;
  double wsum = 0.0;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  CMat v;                      // n x d isometry onto the working subspace
  std::vector<CMat> a_sel;     // independent compressed constraint observables
  Vec c_sel;
  Mat r_all;                   // every constraint row in vec_h coordinates
  Vec c_all;
  Mat r_sel;
  CMat l0;                     // gamma = 1: sum_j w_j log rho_j, compressed
  CMat bcross;                 // gamma in (0,1): sum_j w_j rho_j^(1-gamma), compressed
  CMat omtil;                  // gamma = 0: sum_j w_j rho_j, compressed
  double cconst = 0.0;         // objective terms independent of the variable
  const QuantumPenalty* pen = nullptr;
  bool compressed = false;
  bool faced = false;
};

double row_scale(const Vec& c) { return std::max(1.0, c.size() ? c.cwiseAbs().maxCoeff() : 1.0); }

// Branch value of the compressed objective; +inf outside the cone.
double branch_value(const Prepared& pr, const CMat& sigma, const Eig& e) {
  if (e.s.minCoeff() <= 0.0) return kInf;
  double tr = e.s.sum();
  if (pr.gamma == 1.0) {
    double ent = 0.0;
    for (Eigen::Index i = 0; i < e.s.size(); ++i) ent += e.s[i] * std::log(e.s[i]);
    return pr.cconst - pr.wsum * tr + pr.wsum * ent - (sigma * pr.l0).trace().real();
  }
  if (pr.gamma == 0.0) {
    CMat logs = assemble(e, e.s.array().log().matrix());
    return pr.cconst + pr.wsum * tr - (pr.omtil * logs).trace().real();
  }
  double g = pr.gamma;
  Vec powed = e.s.array().pow(g).matrix();
  double cross = (assemble(e, powed) * pr.bcross).trace().real();
  return pr.cconst + pr.wsum * tr / (1.0 - g) - cross / (g * (1.0 - g));
}

// Hermitian gradient of the compressed objective at a cone-interior point.
CMat branch_gradient(const Prepared& pr, const Eig& e) {
  const Eigen::Index d = e.s.size();
  if (pr.gamma == 1.0) {
    CMat logs = assemble(e, e.s.array().log().matrix());
    return pr.wsum * logs - pr.l0;
  }
  if (pr.gamma == 0.0)
    return pr.wsum * CMat::Identity(d, d) - frechet(e, dd_log(e.s), pr.omtil);
  double g = pr.gamma;
  return (pr.wsum / (1.0 - g)) * CMat::Identity(d, d) -
         frechet(e, dd_pow(e.s, g), pr.bcross) / (g * (1.0 - g));
}

double objective_value(const Prepared& pr, const CMat& sigma) {
  Eig e = eig_of(sigma);
  double val = branch_value(pr, sigma, e);
  if (std::isfinite(val) && !pr.pen->is_none()) val += pr.pen->value(pr.v * sigma * pr.v.adjoint());
  return val;
}

CMat objective_gradient(const Prepared& pr, const CMat& sigma) {
  Eig e = eig_of(sigma);
  CMat g = branch_gradient(pr, e);
  if (!pr.pen->is_none())
    g += hermitize(pr.v.adjoint() * pr.pen->gradient(pr.v * sigma * pr.v.adjoint()) * pr.v);
  return g;
}

// ---- phase 1: strictly positive feasible point by maximum entropy ----

CMat phase1_interior(const std::vector<CMat>& a, const Vec& c, Eigen::Index d) {
  const Eigen::Index m = Eigen::Index(a.size());
  if (m == 0) return CMat::Identity(d, d);
  const double scale = row_scale(c);
  Vec lam = Vec::Zero(m);
  auto hamil = [&](const Vec& l) {
    CMat h = CMat::Zero(d, d);
    for (Eigen::Index k = 0; k < m; ++k) h += l[k] * a[k];
    return hermitize(h);
  };
  auto value = [&](const Vec& l) {
    Eig e = eig_of(hamil(l));
    if (e.s.maxCoeff() > 500.0) return kInf;
    return e.s.array().exp().sum() - l.dot(c);
  };
  int polish = 0;
  for (int it = 1; it <= kMaxIterations; ++it) {
    Eig e = eig_of(hamil(lam));
    if (e.s.maxCoeff() > 500.0 || lam.cwiseAbs().maxCoeff() > 1e4)
      throw InfeasibleError("q_project: no faithful state on the support satisfies the constraints");
    CMat sigma = assemble(e, e.s.array().exp().matrix());
    Vec grad(m);
    for (Eigen::Index k = 0; k < m; ++k) grad[k] = (sigma * a[k]).trace().real() - c[k];
    if (grad.cwiseAbs().maxCoeff() <= 1e-12 * scale) return sigma;
    Mat hess(m, m);
    Mat table = dd_exp(e.s);
    for (Eigen::Index l = 0; l < m; ++l) {
      CMat dl = frechet(e, table, a[l]);
      for (Eigen::Index k = 0; k <= l; ++k)
        hess(k, l) = hess(l, k) = (dl * a[k]).trace().real();
    }
    Vec dir = (hess + 1e-14 * std::max(1.0, hess.trace() / double(m)) * Mat::Identity(m, m))
                  .ldlt()
                  .solve(grad);
    double g0 = value(lam), slope = grad.dot(dir);
    // below the roundoff floor of the value a line search is blind; finish
    // with gradient-driven full steps
    if (slope <= 1e-13 * (1.0 + std::abs(g0))) {
      if (!std::isfinite(value(lam - dir))) break;
      lam -= dir;
      if (++polish >= 8) break;
      continue;
    }
    double alpha = 1.0;
    int bt = 0;
    while (bt < 60 && value(lam - alpha * dir) > g0 - 1e-4 * alpha * slope) {
      alpha *= 0.5;
      ++bt;
    }
    if (bt >= 60) break;
    lam -= alpha * dir;
  }
  Eig e = eig_of(hamil(lam));
  CMat sigma = assemble(e, e.s.array().exp().matrix());
  Vec grad(m);
  for (Eigen::Index k = 0; k < m; ++k) grad[k] = (sigma * a[k]).trace().real() - c[k];
  if (grad.cwiseAbs().maxCoeff() <= 1e-9 * scale) return sigma;
  throw InfeasibleError("q_project: no faithful state on the support satisfies the constraints");
}

// Least-squares pull of a Hermitian point onto the affine constraint set.
CMat affine_project(const Mat& r_sel, const Vec& c_sel, const CMat& sigma, Eigen::Index d) {
  if (r_sel.rows() == 0) return sigma;
  Vec x = vec_h(sigma);
  Vec resid = c_sel - r_sel * x;
  Mat gram = r_sel * r_sel.transpose();
  x += r_sel.transpose() * gram.ldlt().solve(resid);
  return mat_h(x, d);
}

// ---- gamma = 1 dual Newton on the matrix exponential family ----

struct DualOut {
  CMat sigma;
  Vec lam;
  int iterations = 0;
};

DualOut dual_newton(const Prepared& pr) {
  const Eigen::Index m = Eigen::Index(pr.a_sel.size());
  const double w = pr.wsum;
  const double scale = row_scale(pr.c_sel);
  Vec lam = Vec::Zero(m);
  auto hamil = [&](const Vec& l) {
    CMat h = pr.l0;
    for (Eigen::Index k = 0; k < m; ++k) h += l[k] * pr.a_sel[k];
    return hermitize(h / w);
  };
  auto value = [&](const Vec& l) {
    Eig e = eig_of(hamil(l));
    if (e.s.maxCoeff() > 500.0) return kInf;
    return w * e.s.array().exp().sum() - l.dot(pr.c_sel);
  };
  Eig e = eig_of(hamil(lam));
  CMat sigma = assemble(e, e.s.array().exp().matrix());
  int iterations = 0;
  int polish = 0;
  for (int it = 1; it <= kMaxIterations; ++it, iterations = it) {
    Vec grad(m);
    for (Eigen::Index k = 0; k < m; ++k)
      grad[k] = (sigma * pr.a_sel[k]).trace().real() - pr.c_sel[k];
    if (m == 0 || grad.cwiseAbs().maxCoeff() <= 1e-13 * scale) return {sigma, lam, iterations};
    Mat hess(m, m);
    Mat table = dd_exp(e.s);
    for (Eigen::Index l = 0; l < m; ++l) {
      CMat dl = frechet(e, table, pr.a_sel[l]);
      for (Eigen::Index k = 0; k <= l; ++k)
        hess(k, l) = hess(l, k) = (dl * pr.a_sel[k]).trace().real() / w;
    }
    Vec dir = (hess + 1e-14 * std::max(1.0, hess.trace() / double(m)) * Mat::Identity(m, m))
                  .ldlt()
                  .solve(grad);
    double g0 = value(lam), slope = grad.dot(dir);
    // predicted descent below the roundoff floor of the dual value: take
    // gradient-driven full steps instead of backtracking
    if (slope <= 1e-13 * (1.0 + std::abs(g0))) {
      if (!std::isfinite(value(lam - dir))) break;
      lam -= dir;
      e = eig_of(hamil(lam));
      sigma = assemble(e, e.s.array().exp().matrix());
      if (++polish >= 8) break;
      continue;
    }
    double alpha = 1.0;
    int bt = 0;
    while (bt < 60 && value(lam - alpha * dir) > g0 - 1e-4 * alpha * slope) {
      alpha *= 0.5;
      ++bt;
    }
    if (bt >= 60) break;
    lam -= alpha * dir;
    e = eig_of(hamil(lam));
    sigma = assemble(e, e.s.array().exp().matrix());
  }
  Vec grad(m);
  for (Eigen::Index k = 0; k < m; ++k)
    grad[k] = (sigma * pr.a_sel[k]).trace().real() - pr.c_sel[k];
  if (grad.cwiseAbs().maxCoeff() <= 1e-11 * scale) return {sigma, lam, iterations};
  throw ConvergenceError("q_project: dual Newton did not converge");
}

// ---- general-case primal Newton over a chart of the feasible affine set ----

struct PrimalOut {
  CMat sigma;
  int iterations = 0;
};

PrimalOut primal_newton(const Prepared& pr, const CMat& start) {
  const Eigen::Index d = pr.d;
  const Eigen::Index full = d * d;
  const Eigen::Index m = pr.r_sel.rows();
  Mat null_basis;
  if (m == 0) {
    null_basis = Mat::Identity(full, full);
  } else {
    Eigen::HouseholderQR<Mat> qr(pr.r_sel.transpose());
    Mat q = qr.householderQ();
    null_basis = q.rightCols(full - m);
  }
  const Eigen::Index dim = null_basis.cols();
  const Vec base = vec_h(start);

  auto sigma_of = [&](const Vec& t) { return mat_h(base + null_basis * t, d); };
  auto value = [&](const Vec& t) { return objective_value(pr, sigma_of(t)); };
  auto grad_of = [&](const Vec& t) {
    return Vec(null_basis.transpose() * vec_h(objective_gradient(pr, sigma_of(t))));
  };

  Vec t = Vec::Zero(dim);
  if (dim == 0) return {sigma_of(t), 0};
  int iterations = 0;
  int polish = 0;
  double tau = 0.0;
  double val = value(t);
  for (int it = 1; it <= kMaxIterations; ++it, iterations = it) {
    Vec g = grad_of(t);
    double stat = g.cwiseAbs().maxCoeff();
    if (stat <= 1e-10 * (1.0 + std::abs(val))) return {sigma_of(t), iterations};
    // finite differences of the analytic gradient; the gradient itself stays
    // exact so the Newton direction only needs the curvature approximately.
    // a probe can step over the cone boundary, so fall back to one-sided
    // differences when a side turns non-finite
    Mat hess(dim, dim);
    double h = 1e-5 * (1.0 + t.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < dim; ++j) {
      Vec tp = t, tm = t;
      tp[j] += h;
      tm[j] -= h;
      Vec gp = grad_of(tp), gm = grad_of(tm);
      if (gp.allFinite() && gm.allFinite())
        hess.col(j) = (gp - gm) / (2.0 * h);
      else if (gp.allFinite())
        hess.col(j) = (gp - g) / h;
      else if (gm.allFinite())
        hess.col(j) = (g - gm) / h;
      else
        hess.col(j).setZero();
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    double ridge = 1e-12 * (1.0 + std::abs(hess.trace()) / double(dim)) + tau;
    Vec dt = (hess + ridge * Mat::Identity(dim, dim)).ldlt().solve(-g);
    double slope = g.dot(dt);
    if (slope > 0.0) {  // not a descent direction; fall back to steepest descent
      dt = -g;
      slope = -g.squaredNorm();
    }
    // below the roundoff floor of the value a line search is blind; finish
    // with gradient-driven full steps judged on stationarity
    if (-slope <= 1e-13 * (1.0 + std::abs(val))) {
      Vec tn = t + dt;
      if (!std::isfinite(value(tn))) break;
      t = tn;
      val = value(t);
      double stat2 = grad_of(t).cwiseAbs().maxCoeff();
      if (stat2 <= 1e-10 * (1.0 + std::abs(val)) || ++polish >= 8)
        return {sigma_of(t), iterations};
      continue;
    }
    double alpha = 1.0;
    int bt = 0;
    while (bt < 60 && value(t + alpha * dt) > val + 1e-4 * alpha * slope) {
      alpha *= 0.5;
      ++bt;
    }
    if (bt >= 60) {
      tau = tau == 0.0 ? std::max(ridge, 1e-12) * 1e3 : tau * 100.0;
      if (tau > 1e20 * (1.0 + hess.cwiseAbs().maxCoeff())) break;
      continue;
    }
    tau = 0.0;
    t += alpha * dt;
    val = value(t);
  }
  Vec g = grad_of(t);
  if (g.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + std::abs(val))) return {sigma_of(t), iterations};
  throw ConvergenceError("q_project: primal Newton did not converge");
}

// ---- assembly and the public drivers ----

void validate_mixture(const QuantumPriorMixture& mix) {
  if (mix.atoms.empty()) throw std::invalid_argument("q_project: empty prior mixture");
  const Eigen::Index n = mix.atoms.front().state.dimension();
  for (const auto& atom : mix.atoms) {
    if (!(atom.weight > 0.0)) throw std::invalid_argument("q_project: atom weights must be positive");
    if (atom.state.dimension() != n)
      throw std::invalid_argument("q_project: mixture atoms must share one dimension");
  }
}

Prepared prepare(const QuantumPriorMixture& mix, double gamma, const QuantumConstraintSet& cs,
                 const QuantumPenalty& f) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("q_project: gamma must lie in [0, 1]");
  validate_mixture(mix);

  Prepared pr;
  pr.gamma = gamma;
  pr.pen = &f;
  pr.n = mix.atoms.front().state.dimension();
  for (const auto& atom : mix.atoms) pr.wsum += atom.weight;

  // working subspace: range of the support projector, shrunk for gamma = 1
  // to the priors' common support (outside it the deviation is infinite)
  if (cs.support.has_value()) {
    CMat p = qstate::observable(*cs.support);
    if (p.rows() != pr.n) throw std::invalid_argument("q_project: support projector dimension");
    if ((p * p - p).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("q_project: support constraint must be an orthogonal projector");
    pr.v = projector_range(p);
    if (pr.v.cols() == 0) throw std::invalid_argument("q_project: support projector is zero");
    pr.compressed = true;
  } else {
    pr.v = CMat::Identity(pr.n, pr.n);
  }
  if (gamma == 1.0) {
    for (const auto& atom : mix.atoms) {
      if (atom.state.faithful()) continue;
      pr.v = refine_isometry(pr.v, support_projector(atom.state));
      if (pr.v.cols() == 0)
        throw InfeasibleError(
            "q_project: every state on the support has infinite deviation from the prior");
      pr.compressed = pr.v.cols() < pr.n;
    }
  }
  pr.d = pr.v.cols();

  // branch data on the subspace
  if (gamma == 1.0) {
    pr.l0 = CMat::Zero(pr.d, pr.d);
    for (const auto& atom : mix.atoms) {
      pr.l0 += atom.weight * hermitize(pr.v.adjoint() * spectral_log(atom.state) * pr.v);
      pr.cconst += atom.weight * atom.state.trace();
    }
  } else if (gamma == 0.0) {
    CMat bar = CMat::Zero(pr.n, pr.n);
    for (const auto& atom : mix.atoms) {
      bar += atom.weight * atom.state.matrix();
      Vec s = atom.state.eigenvalues();
      double ent = 0.0;
      for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > kSupportEps) ent += s[i] * std::log(s[i]);
      pr.cconst += atom.weight * (ent - atom.state.trace());
    }
    CMat leak = bar - pr.v * (pr.v.adjoint() * bar * pr.v) * pr.v.adjoint();
    if (leak.cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, bar.cwiseAbs().maxCoeff()))
      throw InfeasibleError("q_project: the prior has mass outside the support");
    pr.omtil = hermitize(pr.v.adjoint() * bar * pr.v);
  } else {
    pr.bcross = CMat::Zero(pr.d, pr.d);
    for (const auto& atom : mix.atoms) {
      pr.bcross += atom.weight *
                   hermitize(pr.v.adjoint() * qstate::matrix_power(atom.state, 1.0 - gamma) * pr.v);
      pr.cconst += atom.weight * atom.state.trace() / gamma;
    }
  }

  // constraint rows in vec_h coordinates over the subspace
  std::vector<CMat> rows;
  std::vector<double> targets;
  for (const auto& mc : cs.moments) {
    CMat a = qstate::observable(mc.a);
    if (a.rows() != pr.n) throw std::invalid_argument("q_project: observable dimension mismatch");
    if (!std::isfinite(mc.c)) throw std::invalid_argument("q_project: non-finite moment target");
    rows.push_back(hermitize(pr.v.adjoint() * a * pr.v));
    targets.push_back(mc.c);
  }
  if (cs.trace.has_value()) {
    if (!std::isfinite(*cs.trace) || *cs.trace <= 0.0)
      throw std::invalid_argument("q_project: trace target must be positive");
    rows.push_back(CMat::Identity(pr.d, pr.d));
    targets.push_back(*cs.trace);
  }
  const Eigen::Index m_all = Eigen::Index(rows.size());
  pr.r_all.resize(m_all, pr.d * pr.d);
  pr.c_all.resize(m_all);
  for (Eigen::Index k = 0; k < m_all; ++k) {
    pr.r_all.row(k) = vec_h(rows[k]).transpose();
    pr.c_all[k] = targets[k];
  }

  // rank-revealing row selection, then a consistency check on what was dropped
  std::vector<Eigen::Index> sel;
  if (m_all > 0) {
    Eigen::ColPivHouseholderQR<Mat> qr(pr.r_all.transpose());
    qr.setThreshold(1e-10);
    Eigen::Index rank = qr.rank();
    for (Eigen::Index k = 0; k < rank; ++k) sel.push_back(qr.colsPermutation().indices()[k]);
    std::sort(sel.begin(), sel.end());
    if (rank < m_all) {
      Vec x = pr.r_all.completeOrthogonalDecomposition().solve(pr.c_all);
      double res = (pr.r_all * x - pr.c_all).cwiseAbs().maxCoeff();
      if (res > 1e-9 * row_scale(pr.c_all))
        throw InfeasibleError("q_project: constraint rows are inconsistent");
    }
  }
  const Eigen::Index m = Eigen::Index(sel.size());
  pr.r_sel.resize(m, pr.d * pr.d);
  pr.c_sel.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    pr.a_sel.push_back(rows[sel[k]]);
    pr.r_sel.row(k) = pr.r_all.row(sel[k]);
    pr.c_sel[k] = pr.c_all[sel[k]];
  }
  // a compressed row can vanish while its target does not
  for (Eigen::Index k = 0; k < m; ++k)
    if (pr.r_sel.row(k).cwiseAbs().maxCoeff() < 1e-12 && std::abs(pr.c_sel[k]) > 1e-10)
      throw InfeasibleError("q_project: a constraint is unsatisfiable on the support");
  return pr;
}

// Restrict the prepared problem to a face of the cone spanned by the columns
// of u_keep (d x d'). Returns false when the face cannot carry the targets.
bool try_face(Prepared& pr, const CMat& u_keep, CMat* interior) {
  Prepared face = pr;
  face.v = pr.v * u_keep;
  face.d = u_keep.cols();
  face.compressed = true;
  face.faced = true;
  const Eigen::Index m = Eigen::Index(pr.a_sel.size());
  face.a_sel.clear();
  face.r_sel.resize(m, face.d * face.d);
  for (Eigen::Index k = 0; k < m; ++k) {
    face.a_sel.push_back(hermitize(u_keep.adjoint() * pr.a_sel[k] * u_keep));
    face.r_sel.row(k) = vec_h(face.a_sel.back()).transpose();
  }
  const Eigen::Index m_all = pr.r_all.rows();
  Mat r_all(m_all, face.d * face.d);
  for (Eigen::Index k = 0; k < m_all; ++k)
    r_all.row(k) =
        vec_h(hermitize(u_keep.adjoint() * mat_h(pr.r_all.row(k).transpose(), pr.d) * u_keep))
            .transpose();
  face.r_all = r_all;
  if (pr.gamma == 0.0)
    face.omtil = hermitize(u_keep.adjoint() * pr.omtil * u_keep);
  else if (pr.gamma > 0.0 && pr.gamma < 1.0)
    face.bcross = hermitize(u_keep.adjoint() * pr.bcross * u_keep);
  try {
    *interior = phase1_interior(face.a_sel, face.c_sel, face.d);
  } catch (const InfeasibleError&) {
    return false;
  }
  pr = std::move(face);
  return true;
}

QuantumProjectionResult finish(const Prepared& pr, const QuantumPriorMixture& mix, const CMat& sigma,
                               int iterations, std::string method, const Vec& dual_lam) {
  CMat rho = hermitize(pr.v * sigma * pr.v.adjoint());
  QuantumProjectionResult out{DensityOperator(rho), 0.0, 0.0, 0.0, iterations, Vec(), method};

  for (const auto& atom : mix.atoms)
    out.objective += atom.weight * qstate::q_d_gamma(out.state, atom.state, pr.gamma);
  if (!pr.pen->is_none()) out.objective += pr.pen->value(rho);

  Vec x = vec_h(sigma);
  if (pr.r_all.rows() > 0)
    out.kkt_feasibility = (pr.r_all * x - pr.c_all).cwiseAbs().maxCoeff();

  Vec gvec = vec_h(objective_gradient(pr, sigma));
  if (pr.r_sel.rows() > 0) {
    if (dual_lam.size() == pr.r_sel.rows()) {
      out.multipliers = dual_lam;
    } else {
      out.multipliers = (pr.r_sel * pr.r_sel.transpose()).ldlt().solve(pr.r_sel * gvec);
    }
    out.kkt_stationarity =
        (gvec - pr.r_sel.transpose() * out.multipliers).cwiseAbs().maxCoeff();
  } else {
    out.multipliers = Vec(0);
    out.kkt_stationarity = gvec.cwiseAbs().maxCoeff();
  }
  return out;
}

QuantumProjectionResult solve(const QuantumPriorMixture& mix, double gamma,
                              const QuantumConstraintSet& cs, const QuantumPenalty& f,
                              const CMat* start) {
  if (cs.empty() && f.is_none() && start == nullptr && mix.atoms.size() == 1) {
    validate_mixture(mix);
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw std::invalid_argument("q_project: gamma must lie in [0, 1]");
    return {mix.atoms.front().state, 0.0, 0.0, 0.0, 0, Vec(0), "identity"};
  }
  Prepared pr = prepare(mix, gamma, cs, f);
  CMat interior = phase1_interior(pr.a_sel, pr.c_sel, pr.d);

  // prefer the face carrying the prior data when it stays feasible: that is
  // where a rank-deficient cross operator sends the minimizer
  if (f.is_none() && start == nullptr && gamma < 1.0) {
    const CMat& probe = gamma == 0.0 ? pr.omtil : pr.bcross;
    Eig e = eig_of(probe);
    double top = std::max(e.s.maxCoeff(), 0.0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < e.s.size(); ++i)
      if (e.s[i] > kSupportEps * std::max(1.0, top)) ++r;
    if (r > 0 && r < pr.d) {
      CMat u_keep(pr.d, r);
      Eigen::Index k = 0;
      for (Eigen::Index i = 0; i < e.s.size(); ++i)
        if (e.s[i] > kSupportEps * std::max(1.0, top)) u_keep.col(k++) = e.u.col(i);
      try_face(pr, u_keep, &interior);
    }
  }

  std::string method = pr.compressed ? "compressed " : "";
  if (pr.faced) method += "face ";

  if (gamma == 1.0 && f.is_none() && start == nullptr) {
    DualOut dual = dual_newton(pr);
    return finish(pr, mix, dual.sigma, dual.iterations, method + "dual-newton", dual.lam);
  }

  // pull the phase-1 point exactly onto the affine set; the chart inherits
  // its residual otherwise
  CMat polished = affine_project(pr.r_sel, pr.c_sel, interior, pr.d);
  if (eig_of(polished).s.minCoeff() > 0.0) interior = polished;

  CMat sigma0 = interior;
  if (start != nullptr) {
    CMat s = hermitize(pr.v.adjoint() * hermitize(*start) * pr.v);
    s = affine_project(pr.r_sel, pr.c_sel, s, pr.d);
    // blend toward the interior point until strictly positive
    double mixw = 0.0;
    for (int k = 0; k < 60; ++k) {
      CMat cand = (1.0 - mixw) * s + mixw * interior;
      if (eig_of(cand).s.minCoeff() > 1e-12) {
        sigma0 = cand;
        break;
      }
      mixw = mixw == 0.0 ? 1e-6 : std::min(1.0, mixw * 4.0);
    }
  }
  PrimalOut primal = primal_newton(pr, sigma0);
  return finish(pr, mix, primal.sigma, primal.iterations, method + "primal-newton", Vec());
}

}  // namespace

// ---- penalty ----

QuantumPenalty QuantumPenalty::none() { return QuantumPenalty(); }

QuantumPenalty QuantumPenalty::linear(CMat slope) {
  QuantumPenalty p;
  p.kind_ = Kind::linear;
  p.slope_ = qstate::observable(slope);
  return p;
}

QuantumPenalty QuantumPenalty::quadratic(double weight, CMat center) {
  if (!(weight >= 0.0)) throw std::invalid_argument("penalty: weight must be nonnegative");
  QuantumPenalty p;
  p.kind_ = Kind::quadratic;
  p.weight_ = weight;
  p.center_ = qstate::observable(center);
  return p;
}

double QuantumPenalty::value(const CMat& rho) const {
  switch (kind_) {
    case Kind::none:
      return 0.0;
    case Kind::linear:
      return (rho * slope_).trace().real();
    case Kind::quadratic: {
      CMat d = rho - center_;
      return 0.5 * weight_ * (d.adjoint() * d).trace().real();
    }
  }
  return 0.0;
}

CMat QuantumPenalty::gradient(const CMat& rho) const {
  switch (kind_) {
    case Kind::none:
      return CMat::Zero(rho.rows(), rho.cols());
    case Kind::linear:
      return slope_;
    case Kind::quadratic:
      return weight_ * (rho - center_);
  }
  return CMat::Zero(rho.rows(), rho.cols());
}

// ---- public drivers ----

QuantumProjectionResult q_project(const DensityOperator& omega, double gamma,
                                  const QuantumConstraintSet& cs, const QuantumPenalty& f) {
  QuantumPriorMixture mix;
  mix.atoms.push_back({1.0, omega});
  return solve(mix, gamma, cs, f, nullptr);
}

QuantumProjectionResult q_project(const DensityOperator& omega, double gamma,
                                  const QuantumConstraintSet& cs, const QuantumPenalty& f,
                                  const CMat& start) {
  QuantumPriorMixture mix;
  mix.atoms.push_back({1.0, omega});
  return solve(mix, gamma, cs, f, &start);
}

QuantumProjectionResult q_weighted_project(const QuantumPriorMixture& mix, double gamma,
                                           const QuantumConstraintSet& cs,
                                           const QuantumPenalty& f) {
  return solve(mix, gamma, cs, f, nullptr);
}

QuantumProjectionResult q_weighted_project(const QuantumPriorMixture& mix, double gamma,
                                           const QuantumConstraintSet& cs, const QuantumPenalty& f,
                                           const CMat& start) {
  return solve(mix, gamma, cs, f, &start);
}

std::vector<QuantumProjectionResult> q_trajectory(const DensityOperator& omega0, double gamma,
                                                  const QuantumSchedule& sched,
                                                  TrajectoryMode mode) {
  const size_t k = sched.times.size();
  if (k == 0 || sched.constraints.size() != k || sched.penalties.size() != k)
    throw std::invalid_argument("q_trajectory: schedule arrays must share a positive length");
  for (size_t i = 1; i < k; ++i)
    if (!(sched.times[i] > sched.times[i - 1]))
      throw std::invalid_argument("q_trajectory: times must be strictly increasing");
  if (!sched.constraints[0].empty() || !sched.penalties[0].is_none())
    throw std::invalid_argument("q_trajectory: the initial step must be unconstrained");

  std::vector<QuantumProjectionResult> out;
  out.push_back({omega0, 0.0, 0.0, 0.0, 0, Vec(0), "initial"});
  for (size_t i = 1; i < k; ++i) {
    const DensityOperator& base = (mode == TrajectoryMode::literal) ? omega0 : out.back().state;
    try {
      out.push_back(q_project(base, gamma, sched.constraints[i], sched.penalties[i]));
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("q_trajectory: step " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

LudersReport luders_experiment(const DensityOperator& rho, const CMat& p, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("luders_experiment: gamma must lie in [0, 1]");
  const Eigen::Index n = rho.dimension();
  CMat proj = qstate::observable(p);
  if (proj.rows() != n) throw std::invalid_argument("luders_experiment: projector dimension");
  if ((proj * proj - proj).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("luders_experiment: not an orthogonal projector");
  if (!rho.normalized()) throw std::invalid_argument("luders_experiment: state must have trace 1");
  double mass = (proj * rho.matrix() * proj).trace().real();
  if (mass <= 1e-12)
    throw std::invalid_argument("luders_experiment: the projector carries no mass");

  LudersReport rep{DensityOperator(hermitize(proj * rho.matrix() * proj) / mass),
                   std::nullopt,
                   std::nullopt,
                   "",
                   "",
                   false,
                   0.0,
                   Eigen::Matrix3d::Zero(),
                   Eigen::Matrix3d::Zero()};

  QuantumConstraintSet cs;
  cs.support = proj;
  cs.trace = 1.0;
  const QuantumPenalty none = QuantumPenalty::none();
  try {
    rep.forward = q_project(rho, gamma, cs, none).state;
  } catch (const std::exception& e) {
    rep.forward_error = e.what();
  }
  // the swapped argument order is the dual projection at 1 - gamma
  try {
    rep.reverse = q_project(rho, 1.0 - gamma, cs, none).state;
  } catch (const std::exception& e) {
    rep.reverse_error = e.what();
  }

  CMat comm = proj * rho.matrix() - rho.matrix() * proj;
  rep.commuting = comm.cwiseAbs().maxCoeff() <= 1e-12;

  const std::optional<DensityOperator> cands[3] = {rep.reduced, rep.forward, rep.reverse};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (!cands[i].has_value() || !cands[j].has_value()) {
        rep.trace_table(i, j) = nan;
        rep.d_half_table(i, j) = nan;
        continue;
      }
      rep.trace_table(i, j) = qstate::trace_distance(*cands[i], *cands[j]);
      rep.d_half_table(i, j) = qstate::q_d_gamma(*cands[i], *cands[j], 0.5);
      if (i != j) rep.commuting_disagreement = std::max(rep.commuting_disagreement,
                                                        rep.trace_table(i, j));
    }
  if (rep.commuting && rep.commuting_disagreement > 1e-10)
    throw ConvergenceError("luders_experiment: commuting candidates disagree beyond tolerance");
  return rep;
}

}  // namespace infodyn::qproj
