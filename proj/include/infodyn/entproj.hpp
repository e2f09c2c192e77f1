#pragma once

#include <optional>
#include <string>
#include <vector>

#include "infodyn/cmeasure.hpp"

namespace infodyn::entproj {

using cmeasure::Mat;
using cmeasure::Vec;
using cmeasure::Weights;

// Moment constraint <a, q> = c on raw weights.
struct MomentConstraint {
  Vec a;
  double c = 0.0;
};

// Affine-in-q constraint set: moment rows, an optional support restriction
// (indices allowed to carry mass) and an optional total-mass target.
struct ConstraintSet {
  std::vector<MomentConstraint> moments;
  std::optional<std::vector<Eigen::Index>> support;
  std::optional<double> total_mass;

  bool empty() const { return moments.empty() && !support.has_value() && !total_mass.has_value(); }
};

// Penalty term added to the projection objective: none, linear <s,q>, or
// quadratic 0.5 (q-c)^T W (q-c) with W positive semidefinite.
class PenaltyFunction {
 public:
  static PenaltyFunction none();
  static PenaltyFunction linear(Vec slope);
  static PenaltyFunction quadratic(Mat w, Vec center);

  bool is_none() const { return kind_ == Kind::none; }
  double value(const Vec& q) const;
  Vec gradient(const Vec& q) const;
  Mat hessian(Eigen::Index n) const;

 private:
  enum class Kind { none, linear, quadratic };
  Kind kind_ = Kind::none;
  Vec slope_;
  Mat w_;
  Vec center_;
};

struct ProjectionResult {
  Weights state;
  double objective = 0.0;         // d_gamma part plus penalty at the optimum
  double kkt_stationarity = 0.0;  // chart-scaled Lagrangian gradient, inf-norm
  double kkt_feasibility = 0.0;   // constraint residual over all rows, inf-norm
  int iterations = 0;
  Vec multipliers;                // one per independent constraint row
  std::string method;
};

// Entropic projection: the unique minimizer of d_gamma(q, p, gamma) + F(q)
// over the constraint set (equivalently d_gamma(p, q, 1-gamma) + F(q) by the
// duality identity). For gamma = 1 with moment constraints and no penalty the
// solution is the exponential family q_i = p_i exp(sum_k lambda_k a_k,i)
// consistent with the constraints, found by a damped Newton iteration on the
// Lagrangian dual; every other case runs an equality-constrained damped
// Newton in raw coordinates behind a phase-1 interior-point search. An empty
// constraint set with no penalty returns p unchanged.
ProjectionResult project(const Weights& p, double gamma, const ConstraintSet& cs,
                         const PenaltyFunction& f);

// Same, started from a caller-supplied point (pulled into the feasible
// affine set first); used for uniqueness checks.
ProjectionResult project(const Weights& p, double gamma, const ConstraintSet& cs,
                         const PenaltyFunction& f, const Vec& start);

// Finitely supported mixture of priors.
struct PriorMixture {
  struct Atom {
    double weight = 0.0;
    Weights state;
  };
  std::vector<Atom> atoms;
};

// Minimizes sum_j w_j d_gamma(q, p_j, gamma) + F(q) over the constraint set.
// At gamma = 1 the effective prior is the weighted geometric mean of the atoms.
ProjectionResult weighted_project(const PriorMixture& mix, double gamma, const ConstraintSet& cs,
                                  const PenaltyFunction& f);
ProjectionResult weighted_project(const PriorMixture& mix, double gamma, const ConstraintSet& cs,
                                  const PenaltyFunction& f, const Vec& start);

// Bayesian conditioning as an entropic projection: project the joint (rows x,
// columns theta, row-major) at gamma = 1 onto {support on row b, total mass 1}
// and marginalize onto theta. Errors when row b carries no mass.
Weights bayes_update(const Weights& joint, Eigen::Index n_x, Eigen::Index n_theta,
                     Eigen::Index observed_x);

// d_gamma(q,p) - d_gamma(q,p*) - d_gamma(p*,p) at the projection foot
// p* = project(p, gamma, cs, none); approximately zero for q in an affine
// constraint set, nonnegative for q in a convex subset of one.
double pythagorean_defect(const Weights& p, const Weights& q, double gamma,
                          const ConstraintSet& cs);

enum class TrajectoryMode { literal, chained };

// Constraint/penalty schedule over strictly increasing times; the state at
// the initial time is unconstrained by construction.
struct Schedule {
  std::vector<double> times;
  std::vector<ConstraintSet> constraints;
  std::vector<PenaltyFunction> penalties;
};

// Projection trajectory p(t_k). literal mode projects the initial state under
// each step's data independently; chained mode projects the previous step's
// result.
std::vector<ProjectionResult> trajectory(const Weights& p0, double gamma, const Schedule& sched,
                                         TrajectoryMode mode);

}  // namespace infodyn::entproj
