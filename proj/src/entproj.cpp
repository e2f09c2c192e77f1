#include "infodyn/entproj.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "infodyn/divergence.hpp"
#include "infodyn/errors.hpp"

namespace infodyn::entproj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxIterations = 500;

struct MixtureData {
  std::vector<Vec> priors;  // full-length atom states
  Vec weights;              // atom weights, > 0
  double total = 0.0;       // sum of atom weights
};

// The reduced problem: coordinates restricted to the effective support T,
// constraint rows made independent, prior data aggregated per coordinate.
struct ReducedProblem {
  double gamma = 1.0;
  std::vector<Eigen::Index> T;  // global indices of free coordinates
  Eigen::Index n_full = 0;

  // Aggregates over atoms, restricted to T:
  //   gamma in (0,1): S_i = sum_j w_j p_{j,i}^(1-gamma)
  //   gamma = 1:      L_i = sum_j w_j log p_{j,i}
  //   gamma = 0:      P_i = sum_j w_j p_{j,i}
  Vec agg;
  double W = 0.0;

  Mat A;      // independent rows over T
  Vec c;
  Mat A_all;  // every row over T (for feasibility reporting)
  Vec c_all;

  const PenaltyFunction* penalty = nullptr;

  Vec embed(const Vec& q_t) const {
    Vec full = Vec::Zero(n_full);
    for (size_t k = 0; k < T.size(); ++k) full[T[k]] = q_t[k];
    return full;
  }

  bool linear_coordinate(Eigen::Index k) const {
    return gamma < 1.0 && agg[k] == 0.0;  // no prior mass: objective affine in q_k
  }

  // Objective restricted to T, up to an additive constant (off-T prior mass).
  double value(const Vec& q) const {
    double acc = 0.0;
    if (gamma == 1.0) {
      for (Eigen::Index k = 0; k < q.size(); ++k)
        acc += W * (q[k] > 0.0 ? q[k] * std::log(q[k]) : 0.0) - q[k] * agg[k] - W * q[k];
    } else if (gamma == 0.0) {
      for (Eigen::Index k = 0; k < q.size(); ++k) {
        if (agg[k] > 0.0) {
          if (q[k] <= 0.0) return kInf;
          acc += W * q[k] - agg[k] * std::log(q[k]);
        } else {
          acc += W * q[k];
        }
      }
    } else {
      const double a = 1.0 / (1.0 - gamma), b = 1.0 / (gamma * (1.0 - gamma));
      for (Eigen::Index k = 0; k < q.size(); ++k)
        acc += W * q[k] * a - std::pow(q[k], gamma) * agg[k] * b;
    }
    if (penalty && !penalty->is_none()) acc += penalty->value(embed(q));
    return acc;
  }

  Vec gradient(const Vec& q) const {
    Vec g(q.size());
    if (gamma == 1.0) {
      for (Eigen::Index k = 0; k < q.size(); ++k) g[k] = W * std::log(q[k]) - agg[k];
    } else if (gamma == 0.0) {
      for (Eigen::Index k = 0; k < q.size(); ++k) g[k] = W - agg[k] / q[k];
    } else {
      const double a = 1.0 / (1.0 - gamma);
      for (Eigen::Index k = 0; k < q.size(); ++k)
        g[k] = (W - std::pow(q[k], gamma - 1.0) * agg[k]) * a;
    }
    if (penalty && !penalty->is_none()) {
      Vec gp = penalty->gradient(embed(q));
      for (size_t k = 0; k < T.size(); ++k) g[k] += gp[T[k]];
    }
    return g;
  }

  Vec hessian_diag(const Vec& q) const {
    Vec h(q.size());
    if (gamma == 1.0) {
      for (Eigen::Index k = 0; k < q.size(); ++k) h[k] = W / q[k];
    } else if (gamma == 0.0) {
      for (Eigen::Index k = 0; k < q.size(); ++k) h[k] = agg[k] / (q[k] * q[k]);
    } else {
      for (Eigen::Index k = 0; k < q.size(); ++k)
        h[k] = std::pow(q[k], gamma - 2.0) * agg[k];
    }
    return h;
  }

  Mat penalty_hessian() const {
    if (!penalty || penalty->is_none()) return Mat::Zero(T.size(), T.size());
    Mat hf = penalty->hessian(n_full);
    Mat h(T.size(), T.size());
    for (size_t r = 0; r < T.size(); ++r)
      for (size_t s = 0; s < T.size(); ++s) h(r, s) = hf(T[r], T[s]);
    return h;
  }
};

// Chart-scaled stationarity residual: || (grad J - A^T lam) . q^(1-gamma) ||_inf
// together with the least-squares multipliers that realize it.
std::pair<double, Vec> stationarity(const ReducedProblem& pr, const Vec& q) {
  Vec g = pr.gradient(q);
  Vec lam;
  Vec r = g;
  if (pr.A.rows() > 0) {
    lam = (pr.A * pr.A.transpose()).ldlt().solve(pr.A * g);
    r = g - pr.A.transpose() * lam;
  } else {
    lam = Vec(0);
  }
  double worst = 0.0;
  for (Eigen::Index k = 0; k < q.size(); ++k)
    worst = std::max(worst, std::abs(r[k]) * std::pow(q[k], 1.0 - pr.gamma));
  return {worst, lam};
}

double feasibility_residual(const ReducedProblem& pr, const Vec& q) {
  if (pr.A_all.rows() == 0) return 0.0;
  return (pr.A_all * q - pr.c_all).cwiseAbs().maxCoeff();
}

// Strictly positive point on {A q = c} by an infeasible-start Newton on the
// ridge-regularized analytic-center problem. Throws InfeasibleError when the
// affine system is inconsistent or positivity cannot be reached.
Vec phase1_interior(const Mat& A, const Vec& c, double scale, const Vec* hint) {
  const Eigen::Index n = A.cols(), m = A.rows();
  if (m > 0) {
    Vec q_ls = A.completeOrthogonalDecomposition().solve(c);
    if ((A * q_ls - c).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, c.cwiseAbs().maxCoeff()))
      throw InfeasibleError("project: constraint rows are inconsistent");
    if (m >= n) {
      // no nullspace: the affine solution is the only candidate
      Eigen::FullPivLU<Mat> lu(A);
      if (lu.rank() == n) {
        if (q_ls.minCoeff() <= 0.0)
          throw InfeasibleError("project: unique affine solution is not positive");
        return q_ls;
      }
    }
  }

  Vec q = hint ? *hint : Vec::Constant(n, std::max(scale, 1e-3) / double(n));
  for (Eigen::Index i = 0; i < n; ++i) q[i] = std::max(q[i], 1e-8 * scale);
  if (m == 0) return q;

  const double beta = 1e-8 / (scale * scale);
  Vec nu = Vec::Zero(m);
  auto residual_norm = [&](const Vec& qq, const Vec& nn) {
    Vec rd = -qq.cwiseInverse() + beta * qq + A.transpose() * nn;
    Vec rp = A * qq - c;
    return std::sqrt(rd.squaredNorm() + rp.squaredNorm());
  };
  for (int it = 0; it < 300; ++it) {
    Vec rd = -q.cwiseInverse() + beta * q + A.transpose() * nu;
    Vec rp = A * q - c;
    if (rp.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()) &&
        q.minCoeff() > 1e-12 * scale)
      return q;
    Mat kkt = Mat::Zero(n + m, n + m);
    for (Eigen::Index i = 0; i < n; ++i) kkt(i, i) = 1.0 / (q[i] * q[i]) + beta;
    kkt.block(0, n, n, m) = A.transpose();
    kkt.block(n, 0, m, n) = A;
    Vec rhs(n + m);
    rhs << -rd, -rp;
    Vec step = kkt.fullPivLu().solve(rhs);
    Vec dq = step.head(n), dnu = step.tail(m);
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (dq[i] < 0.0) alpha = std::min(alpha, -0.99 * q[i] / dq[i]);
    double r0 = residual_norm(q, nu);
    int bt = 0;
    while (bt < 60 && residual_norm(q + alpha * dq, nu + alpha * dnu) > (1.0 - 0.25 * alpha) * r0) {
      alpha *= 0.5;
      ++bt;
    }
    if (bt >= 60)
      throw InfeasibleError("project: no strictly positive feasible point found");
    q += alpha * dq;
    nu += alpha * dnu;
  }
  throw InfeasibleError("project: feasibility search did not converge");
}

// Damped Newton on the dual of the gamma = 1 exponential-family problem:
// q_i(lam) = exp((L_i + (A^T lam)_i)/W), maximizing
// g(lam) = const - W sum_i q_i(lam) + <lam, c>.
struct DualNewtonOutcome {
  Vec q;
  Vec lam;
  int iterations = 0;
};

DualNewtonOutcome dual_newton(const ReducedProblem& pr) {
  const Eigen::Index m = pr.A.rows();
  Vec lam = Vec::Zero(m);
  auto state_of = [&](const Vec& l) {
    Vec e = (pr.agg + pr.A.transpose() * l) / pr.W;
    Vec q(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) q[i] = std::exp(e[i]);
    return q;
  };
  auto dual_value = [&](const Vec& l) {
    Vec q = state_of(l);
    double s = q.sum();
    if (!std::isfinite(s)) return -kInf;
    return -pr.W * s + l.dot(pr.c);
  };
  const double scale = std::max(1.0, pr.c.size() ? pr.c.cwiseAbs().maxCoeff() : 1.0);
  const double tol = 1e-13 * scale;
  Vec q = state_of(lam);
  int iterations = 0;
  int polish = 0;
  for (int it = 1; it <= kMaxIterations; ++it, iterations = it) {
    Vec grad = pr.c - pr.A * q;
    if (grad.cwiseAbs().maxCoeff() <= tol) return {q, lam, it};
    Mat h = pr.A * q.asDiagonal() * pr.A.transpose() / pr.W;
    Vec d = (h + 1e-14 * h.trace() / double(m) * Mat::Identity(m, m)).ldlt().solve(grad);
    double g0 = dual_value(lam), slope = grad.dot(d);

    // predicted ascent below the roundoff floor of the dual value: the line
    // search is blind there, so finish with gradient-driven full steps
    if (slope <= 1e-13 * (1.0 + std::abs(g0))) {
      if (!std::isfinite(dual_value(lam + d))) break;
      lam += d;
      q = state_of(lam);
      if (++polish >= 8) break;
      continue;
    }

    double alpha = 1.0;
    int bt = 0;
    while (bt < 60 && dual_value(lam + alpha * d) < g0 + 1e-4 * alpha * slope) {
      alpha *= 0.5;
      ++bt;
    }
    if (bt >= 60) break;
    lam += alpha * d;
    q = state_of(lam);
  }
  if ((pr.c - pr.A * q).cwiseAbs().maxCoeff() <= 1e-11 * scale) return {q, lam, iterations};
  throw ConvergenceError("project: dual Newton did not converge");
}

struct PrimalNewtonOutcome {
  Vec q;
  int iterations = 0;
  std::vector<Eigen::Index> pinned;  // local indices fixed at zero by the active set
};

// Equality-constrained damped Newton over the strictly positive points of
// {A q = c}; +inf objective values act as a line-search barrier. Linear
// coordinates (no prior mass) may be pinned to the boundary along the way.
PrimalNewtonOutcome primal_newton(const ReducedProblem& pr, const Vec& q_start) {
  Eigen::Index n = pr.T.size();
  std::vector<Eigen::Index> active(n);
  for (Eigen::Index i = 0; i < n; ++i) active[i] = i;
  std::vector<Eigen::Index> pinned;
  Vec q = q_start;
  int total_iterations = 0;

  for (int round = 0; round <= int(pr.T.size()); ++round) {
    // restrict the problem to the active coordinates
    ReducedProblem sub = pr;
    sub.T.clear();
    for (Eigen::Index i : active) sub.T.push_back(pr.T[i]);
    sub.agg = Vec(active.size());
    for (size_t k = 0; k < active.size(); ++k) sub.agg[k] = pr.agg[active[k]];
    sub.A = Mat(pr.A.rows(), active.size());
    for (size_t k = 0; k < active.size(); ++k) sub.A.col(k) = pr.A.col(active[k]);
    sub.c = pr.c;
    sub.A_all = Mat(0, active.size());
    sub.c_all = Vec(0);

    Vec qa(active.size());
    for (size_t k = 0; k < active.size(); ++k) qa[k] = q[active[k]];
    if (qa.minCoeff() <= 0.0)
      qa = phase1_interior(sub.A, sub.c, std::max(qa.cwiseAbs().maxCoeff(), 1e-3), &qa);

    // nullspace of the reduced constraint rows
    Mat N;
    if (sub.A.rows() == 0) {
      N = Mat::Identity(qa.size(), qa.size());
    } else {
      Eigen::FullPivLU<Mat> lu(sub.A);
      lu.setThreshold(1e-10);
      N = lu.kernel();
      if (N.cols() == 1 && N.cwiseAbs().maxCoeff() == 0.0) N = Mat(qa.size(), 0);
    }

    if (N.cols() == 0) {
      // fully determined point
      Vec qq = Vec::Zero(n);
      for (size_t k = 0; k < active.size(); ++k) qq[active[k]] = qa[k];
      return {qq, total_iterations, pinned};
    }

    double val = sub.value(qa);
    Eigen::Index pin_candidate = -1;
    int polish = 0;
    double tau = 0.0;
    bool converged = false;
    for (int it = 1; it <= kMaxIterations; ++it, ++total_iterations) {
      Vec g = sub.gradient(qa);
      Vec gz = N.transpose() * g;
      Mat hz = N.transpose() *
               (Mat(sub.hessian_diag(qa).asDiagonal()) + sub.penalty_hessian()) * N;
      double ridge = 1e-14 * (1.0 + hz.trace() / double(hz.rows())) + tau;
      Vec dz = (hz + ridge * Mat::Identity(hz.rows(), hz.cols())).ldlt().solve(-gz);
      Vec dq = N * dz;

      double alpha_max = 1.0;
      Eigen::Index blocker = -1;
      for (Eigen::Index k = 0; k < qa.size(); ++k)
        if (dq[k] < 0.0 && -0.995 * qa[k] / dq[k] < alpha_max) {
          alpha_max = -0.995 * qa[k] / dq[k];
          blocker = k;
        }

      double slope = gz.dot(dz);
      double alpha = std::min(1.0, alpha_max);

      // once the predicted decrease drops below the roundoff floor of the
      // objective value, a value-based line search is blind; finish with
      // gradient-driven full Newton steps instead
      if (-slope <= 1e-13 * (1.0 + std::abs(val))) {
        qa += alpha * dq;
        val = sub.value(qa);
        double stat = stationarity(sub, qa).first;
        if (stat <= 1e-9 || ++polish >= 8) {
          converged = stat <= 1e-9;
          break;
        }
        continue;
      }

      int bt = 0;
      double trial_val = kInf;
      while (bt < 60) {
        trial_val = sub.value(qa + alpha * dq);
        if (trial_val <= val + 1e-4 * alpha * slope) break;
        alpha *= 0.5;
        ++bt;
      }
      if (bt >= 60) {
        // blocked line search despite a meaningful slope: damp the direction
        tau = tau == 0.0 ? std::max(ridge, 1e-12) * 1e3 : tau * 100.0;
        if (tau > 1e20 * (1.0 + hz.cwiseAbs().maxCoeff())) break;
        continue;
      }
      tau = 0.0;
      qa += alpha * dq;
      double prev = val;
      val = trial_val;

      if (blocker >= 0 && alpha_max < 1e-8 && sub.linear_coordinate(blocker) &&
          qa[blocker] < 1e-13 * (1.0 + qa.cwiseAbs().maxCoeff())) {
        pin_candidate = blocker;
        break;
      }

      double stat = stationarity(sub, qa).first;
      if (std::abs(val - prev) <= 1e-12 * std::max(1.0, std::abs(val)) && stat <= 1e-9)
        { converged = true; break; }
    }

    if (pin_candidate >= 0) {
      pinned.push_back(active[pin_candidate]);
      Vec qq = Vec::Zero(n);
      for (size_t k = 0; k < active.size(); ++k) qq[active[k]] = qa[k];
      q = qq;
      active.erase(active.begin() + pin_candidate);
      continue;
    }
    if (!converged) {
      double stat = stationarity(sub, qa).first;
      if (stat > 1e-9)
        throw ConvergenceError("project: primal Newton exceeded the iteration cap");
    }
    Vec qq = Vec::Zero(n);
    for (size_t k = 0; k < active.size(); ++k) qq[active[k]] = qa[k];
    return {qq, total_iterations, pinned};
  }
  throw ConvergenceError("project: active-set loop did not terminate");
}

ReducedProblem build_problem(const MixtureData& mix, double gamma, const ConstraintSet& cs,
                             const PenaltyFunction& f) {
  const Eigen::Index n = mix.priors.front().size();
  std::set<Eigen::Index> t_set;
  if (cs.support) {
    for (Eigen::Index i : *cs.support) {
      if (i < 0 || i >= n) throw std::invalid_argument("project: support index out of range");
      t_set.insert(i);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) t_set.insert(i);
  }
  if (gamma == 1.0) {
    // absolute continuity: q may charge only points every atom charges
    for (const Vec& p : mix.priors)
      for (auto it = t_set.begin(); it != t_set.end();)
        it = (p[*it] <= 0.0) ? t_set.erase(it) : std::next(it);
  }
  if (gamma == 0.0) {
    // the log factor sits on the priors: q must dominate each atom
    for (const Vec& p : mix.priors)
      for (Eigen::Index i = 0; i < n; ++i)
        if (p[i] > 0.0 && !t_set.count(i))
          throw InfeasibleError("project: gamma = 0 support constraint excludes prior mass");
  }
  if (t_set.empty()) throw InfeasibleError("project: effective support is empty");

  ReducedProblem pr;
  pr.gamma = gamma;
  pr.n_full = n;
  pr.T.assign(t_set.begin(), t_set.end());
  pr.W = mix.total;
  pr.penalty = &f;

  pr.agg = Vec::Zero(pr.T.size());
  for (size_t j = 0; j < mix.priors.size(); ++j) {
    const Vec& p = mix.priors[j];
    const double w = mix.weights[j];
    for (size_t k = 0; k < pr.T.size(); ++k) {
      const double pi = p[pr.T[k]];
      if (gamma == 1.0) pr.agg[k] += w * std::log(pi);
      else if (gamma == 0.0) pr.agg[k] += w * pi;
      else pr.agg[k] += w * std::pow(pi, 1.0 - gamma);
    }
  }

  // constraint rows over T
  std::vector<Vec> rows;
  std::vector<double> targets;
  for (const MomentConstraint& mc : cs.moments) {
    if (mc.a.size() != n) throw std::invalid_argument("project: constraint length mismatch");
    Vec row(pr.T.size());
    for (size_t k = 0; k < pr.T.size(); ++k) row[k] = mc.a[pr.T[k]];
    rows.push_back(row);
    targets.push_back(mc.c);
  }
  if (cs.total_mass) {
    if (*cs.total_mass <= 0.0) throw std::invalid_argument("project: total mass must be positive");
    rows.push_back(Vec::Ones(pr.T.size()));
    targets.push_back(*cs.total_mass);
  }
  pr.A_all = Mat(rows.size(), pr.T.size());
  pr.c_all = Vec(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    pr.A_all.row(r) = rows[r];
    pr.c_all[r] = targets[r];
  }

  // rank-revealing row selection at threshold 1e-10
  if (rows.empty()) {
    pr.A = Mat(0, pr.T.size());
    pr.c = Vec(0);
  } else {
    Eigen::ColPivHouseholderQR<Mat> qr(pr.A_all.transpose());
    qr.setThreshold(1e-10);
    Eigen::Index rank = qr.rank();
    pr.A = Mat(rank, pr.T.size());
    pr.c = Vec(rank);
    for (Eigen::Index k = 0; k < rank; ++k) {
      Eigen::Index row = qr.colsPermutation().indices()[k];
      pr.A.row(k) = pr.A_all.row(row);
      pr.c[k] = pr.c_all[row];
    }
    if (rank < pr.A_all.rows()) {
      // dependent rows were dropped; make sure their targets agree
      Vec q_ls = pr.A_all.completeOrthogonalDecomposition().solve(pr.c_all);
      double res = (pr.A_all * q_ls - pr.c_all).cwiseAbs().maxCoeff();
      if (res > 1e-9 * std::max(1.0, pr.c_all.cwiseAbs().maxCoeff()))
        throw InfeasibleError("project: constraint rows are inconsistent");
    }
  }
  return pr;
}

ProjectionResult finalize(const ReducedProblem& pr, const MixtureData& mix, double gamma,
                          const PenaltyFunction& f, const Vec& q_t, const Vec& lam,
                          int iterations, const std::string& method) {
  Vec q_full = pr.embed(q_t);
  Weights state(q_full);
  double objective = f.is_none() ? 0.0 : f.value(q_full);
  for (size_t j = 0; j < mix.priors.size(); ++j)
    objective += mix.weights[j] *
                 divergence::d_gamma(state, Weights(mix.priors[j]), gamma);
  auto [stat, lam_ls] = stationarity(pr, q_t);
  return {std::move(state), objective, stat, feasibility_residual(pr, q_t),
          iterations, lam.size() ? lam : lam_ls, method};
}

ProjectionResult solve(const MixtureData& mix, double gamma, const ConstraintSet& cs,
                       const PenaltyFunction& f, const Vec* start) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("project: gamma outside [0,1]");
  for (const Vec& p : mix.priors)
    if (p.size() != mix.priors.front().size())
      throw std::invalid_argument("project: prior length mismatch");

  ReducedProblem pr = build_problem(mix, gamma, cs, f);

  // certify strict feasibility once; both solver paths rely on it
  Vec hint(pr.T.size());
  for (size_t k = 0; k < pr.T.size(); ++k) {
    double m = 0.0;
    for (size_t j = 0; j < mix.priors.size(); ++j) m += mix.weights[j] * mix.priors[j][pr.T[k]];
    hint[k] = std::max(m / mix.total, 1e-6);
  }
  if (start) {
    if (start->size() != pr.n_full) throw std::invalid_argument("project: start length mismatch");
    for (size_t k = 0; k < pr.T.size(); ++k) hint[k] = std::max((*start)[pr.T[k]], 1e-10);
  }
  double scale = std::max({1e-3, hint.maxCoeff(),
                           pr.c.size() ? pr.c.cwiseAbs().maxCoeff() : 0.0});
  Vec q0 = phase1_interior(pr.A, pr.c, scale, &hint);

  if (gamma == 1.0 && f.is_none() && !start) {
    DualNewtonOutcome out = dual_newton(pr);
    return finalize(pr, mix, gamma, f, out.q, out.lam, out.iterations, "dual_newton");
  }
  PrimalNewtonOutcome out = primal_newton(pr, q0);
  ProjectionResult res = finalize(pr, mix, gamma, f, out.q, Vec(0), out.iterations,
                                  "primal_newton");
  if (!out.pinned.empty()) {
    // dual feasibility at coordinates pinned to the boundary
    Vec g = pr.gradient(out.q.cwiseMax(1e-300));
    Vec r = g;
    if (pr.A.rows() > 0) r = g - pr.A.transpose() * res.multipliers;
    for (Eigen::Index k : out.pinned)
      res.kkt_stationarity = std::max(res.kkt_stationarity, std::max(0.0, -r[k]));
  }
  return res;
}

MixtureData single(const Weights& p) {
  MixtureData mix;
  mix.priors.push_back(p.values());
  mix.weights = Vec::Ones(1);
  mix.total = 1.0;
  return mix;
}

MixtureData from_mixture(const PriorMixture& mixture) {
  if (mixture.atoms.empty()) throw std::invalid_argument("weighted_project: empty mixture");
  MixtureData mix;
  mix.weights = Vec(mixture.atoms.size());
  for (size_t j = 0; j < mixture.atoms.size(); ++j) {
    if (mixture.atoms[j].weight <= 0.0)
      throw std::invalid_argument("weighted_project: atom weights must be positive");
    mix.weights[j] = mixture.atoms[j].weight;
    mix.priors.push_back(mixture.atoms[j].state.values());
  }
  mix.total = mix.weights.sum();
  return mix;
}

}  // namespace

PenaltyFunction PenaltyFunction::none() { return PenaltyFunction(); }

PenaltyFunction PenaltyFunction::linear(Vec slope) {
  PenaltyFunction f;
  f.kind_ = Kind::linear;
  f.slope_ = std::move(slope);
  return f;
}

PenaltyFunction PenaltyFunction::quadratic(Mat w, Vec center) {
  if (w.rows() != w.cols() || w.rows() != center.size())
    throw std::invalid_argument("PenaltyFunction: shape mismatch");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("PenaltyFunction: quadratic weight must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(w);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("PenaltyFunction: quadratic weight must be positive semidefinite");
  PenaltyFunction f;
  f.kind_ = Kind::quadratic;
  f.w_ = std::move(w);
  f.center_ = std::move(center);
  return f;
}

double PenaltyFunction::value(const Vec& q) const {
  switch (kind_) {
    case Kind::none: return 0.0;
    case Kind::linear: return slope_.dot(q);
    case Kind::quadratic: {
      Vec d = q - center_;
      return 0.5 * d.dot(w_ * d);
    }
  }
  return 0.0;
}

Vec PenaltyFunction::gradient(const Vec& q) const {
  switch (kind_) {
    case Kind::none: return Vec::Zero(q.size());
    case Kind::linear: return slope_;
    case Kind::quadratic: return w_ * (q - center_);
  }
  return Vec::Zero(q.size());
}

Mat PenaltyFunction::hessian(Eigen::Index n) const {
  if (kind_ == Kind::quadratic) return w_;
  return Mat::Zero(n, n);
}

ProjectionResult project(const Weights& p, double gamma, const ConstraintSet& cs,
                         const PenaltyFunction& f) {
  if (cs.empty() && f.is_none())
    return {p, 0.0, 0.0, 0.0, 0, Vec(0), "identity"};
  return solve(single(p), gamma, cs, f, nullptr);
}

ProjectionResult project(const Weights& p, double gamma, const ConstraintSet& cs,
                         const PenaltyFunction& f, const Vec& start) {
  return solve(single(p), gamma, cs, f, &start);
}

ProjectionResult weighted_project(const PriorMixture& mix, double gamma, const ConstraintSet& cs,
                                  const PenaltyFunction& f) {
  return solve(from_mixture(mix), gamma, cs, f, nullptr);
}

ProjectionResult weighted_project(const PriorMixture& mix, double gamma, const ConstraintSet& cs,
                                  const PenaltyFunction& f, const Vec& start) {
  return solve(from_mixture(mix), gamma, cs, f, &start);
}

Weights bayes_update(const Weights& joint, Eigen::Index n_x, Eigen::Index n_theta,
                     Eigen::Index observed_x) {
  if (n_x <= 0 || n_theta <= 0 || joint.size() != n_x * n_theta)
    throw std::invalid_argument("bayes_update: joint must have n_x * n_theta entries");
  if (observed_x < 0 || observed_x >= n_x)
    throw std::invalid_argument("bayes_update: observed index out of range");
  double row_mass = 0.0;
  for (Eigen::Index t = 0; t < n_theta; ++t) row_mass += joint[observed_x * n_theta + t];
  if (row_mass <= 0.0)
    throw DegenerateConditioningError("bayes_update: observed row carries no mass");

  ConstraintSet cs;
  cs.support.emplace();
  for (Eigen::Index t = 0; t < n_theta; ++t) cs.support->push_back(observed_x * n_theta + t);
  cs.total_mass = 1.0;
  ProjectionResult r = project(joint, 1.0, cs, PenaltyFunction::none());
  Vec posterior(n_theta);
  for (Eigen::Index t = 0; t < n_theta; ++t) posterior[t] = r.state[observed_x * n_theta + t];
  return Weights(posterior);
}

double pythagorean_defect(const Weights& p, const Weights& q, double gamma,
                          const ConstraintSet& cs) {
  // q must lie in the constraint set
  if (cs.support) {
    std::set<Eigen::Index> s(cs.support->begin(), cs.support->end());
    for (Eigen::Index i = 0; i < q.size(); ++i)
      if (q[i] > 0.0 && !s.count(i))
        throw std::invalid_argument("pythagorean_defect: q charges excluded support");
  }
  for (const MomentConstraint& mc : cs.moments)
    if (std::abs(mc.a.dot(q.values()) - mc.c) > 1e-8 * std::max(1.0, std::abs(mc.c)))
      throw std::invalid_argument("pythagorean_defect: q violates a moment constraint");
  if (cs.total_mass && std::abs(q.total_mass() - *cs.total_mass) > 1e-8)
    throw std::invalid_argument("pythagorean_defect: q violates the mass constraint");

  Weights foot = project(p, gamma, cs, PenaltyFunction::none()).state;
  return divergence::d_gamma(q, p, gamma) - divergence::d_gamma(q, foot, gamma) -
         divergence::d_gamma(foot, p, gamma);
}

std::vector<ProjectionResult> trajectory(const Weights& p0, double gamma, const Schedule& sched,
                                         TrajectoryMode mode) {
  const size_t k = sched.times.size();
  if (k == 0 || sched.constraints.size() != k || sched.penalties.size() != k)
    throw std::invalid_argument("trajectory: schedule arrays must share a positive length");
  for (size_t i = 1; i < k; ++i)
    if (!(sched.times[i] > sched.times[i - 1]))
      throw std::invalid_argument("trajectory: times must be strictly increasing");
  if (!sched.constraints[0].empty() || !sched.penalties[0].is_none())
    throw std::invalid_argument("trajectory: the initial step must be unconstrained");

  std::vector<ProjectionResult> out;
  out.push_back({p0, 0.0, 0.0, 0.0, 0, Vec(0), "initial"});
  for (size_t i = 1; i < k; ++i) {
    const Weights& base = (mode == TrajectoryMode::literal) ? p0 : out.back().state;
    out.push_back(project(base, gamma, sched.constraints[i], sched.penalties[i]));
  }
  return out;
}

}  // namespace infodyn::entproj
