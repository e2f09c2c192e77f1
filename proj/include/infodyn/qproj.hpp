#pragma once

#include <optional>
#include <string>
#include <vector>

#include "infodyn/entproj.hpp"
#include "infodyn/qstate.hpp"

namespace infodyn::qproj {

using qstate::CMat;
using qstate::Complex;
using qstate::DensityOperator;
using Vec = Eigen::VectorXd;

// Moment constraint tr(rho' A) = c on a Hermitian observable A.
struct QuantumMomentConstraint {
  CMat a;
  double c = 0.0;
};

// Affine constraint set on density operators: moment rows, an optional
// orthogonal projector confining the state to its range, and an optional
// trace target.
struct QuantumConstraintSet {
  std::vector<QuantumMomentConstraint> moments;
  std::optional<CMat> support;
  std::optional<double> trace;

  bool empty() const { return moments.empty() && !support.has_value() && !trace.has_value(); }
};

// Penalty term added to the projection objective: none, linear tr(rho' S),
// or quadratic 0.5 * weight * ||rho' - C||_2^2 in the Hilbert-Schmidt norm.
class QuantumPenalty {
 public:
  static QuantumPenalty none();
  static QuantumPenalty linear(CMat slope);
  static QuantumPenalty quadratic(double weight, CMat center);

  bool is_none() const { return kind_ == Kind::none; }
  double value(const CMat& rho) const;
  CMat gradient(const CMat& rho) const;

 private:
  enum class Kind { none, linear, quadratic };
  Kind kind_ = Kind::none;
  CMat slope_;
  double weight_ = 0.0;
  CMat center_;
};

struct QuantumProjectionResult {
  DensityOperator state;
  double objective = 0.0;         // q_d_gamma part plus penalty at the optimum
  double kkt_stationarity = 0.0;  // Lagrangian gradient residual, inf-norm
  double kkt_feasibility = 0.0;   // constraint residual over all rows, inf-norm
  int iterations = 0;
  Vec multipliers;                // one per independent constraint row
  std::string method;
};

// Entropic projection on density operators: the unique minimizer of
// q_d_gamma(rho', omega, gamma) + F(rho') over the constraint set
// (equivalently q_d_gamma(omega, rho', 1-gamma) + F(rho') by the duality
// identity). Support constraints are solved on the compressed subspace and
// embedded back. For gamma = 1 with moment constraints and no penalty the
// solution is the matrix exponential family
// rho' = exp(log omega + sum_k lambda_k A_k + kappa I) found by a damped
// Newton iteration on the Lagrangian dual, with derivatives of the matrix
// exponential taken spectrally; every other case runs an equality-constrained
// damped Newton over a Hermitian chart of the feasible affine set behind a
// phase-1 interior search. An empty constraint set with no penalty returns
// omega unchanged.
QuantumProjectionResult q_project(const DensityOperator& omega, double gamma,
                                  const QuantumConstraintSet& cs, const QuantumPenalty& f);

// Same, started from a caller-supplied Hermitian point (pulled into the
// feasible affine set first); used for uniqueness checks.
QuantumProjectionResult q_project(const DensityOperator& omega, double gamma,
                                  const QuantumConstraintSet& cs, const QuantumPenalty& f,
                                  const CMat& start);

// Finitely supported mixture of prior states.
struct QuantumPriorMixture {
  struct Atom {
    double weight = 0.0;
    DensityOperator state;
  };
  std::vector<Atom> atoms;
};

// Minimizes sum_j w_j q_d_gamma(rho', rho_j, gamma) + F(rho') over the
// constraint set. At gamma = 1 the effective prior is the weighted geometric
// mean exp(sum_j w_j log rho_j / W) of the atoms.
QuantumProjectionResult q_weighted_project(const QuantumPriorMixture& mix, double gamma,
                                           const QuantumConstraintSet& cs,
                                           const QuantumPenalty& f);
QuantumProjectionResult q_weighted_project(const QuantumPriorMixture& mix, double gamma,
                                           const QuantumConstraintSet& cs,
                                           const QuantumPenalty& f, const CMat& start);

// Constraint/penalty schedule over strictly increasing times; the state at
// the initial time is unconstrained by construction.
struct QuantumSchedule {
  std::vector<double> times;
  std::vector<QuantumConstraintSet> constraints;
  std::vector<QuantumPenalty> penalties;
};

using entproj::TrajectoryMode;

// Projection trajectory rho(t_k). literal mode projects the initial state
// under each step's data independently; chained mode projects the previous
// step's result. Per-step failures carry the step index.
std::vector<QuantumProjectionResult> q_trajectory(const DensityOperator& omega0, double gamma,
                                                  const QuantumSchedule& sched,
                                                  TrajectoryMode mode);

// Side-by-side comparison of entropic updating against the projection
// postulate. Candidates: the reduced state P rho P / tr(P rho P), the
// minimizer of q_d_gamma(rho', rho, gamma), and the minimizer of
// q_d_gamma(rho, rho', gamma), the latter two over {range of P, trace 1}.
// A direction whose infimum is infinite is reported absent with its reason.
// When [P, rho] = 0 all available candidates must agree to 1e-10 and the
// report records their worst disagreement; non-commuting instances are
// descriptive only.
struct LudersReport {
  DensityOperator reduced;
  std::optional<DensityOperator> forward;
  std::optional<DensityOperator> reverse;
  std::string forward_error;
  std::string reverse_error;
  bool commuting = false;
  double commuting_disagreement = 0.0;
  Eigen::Matrix3d trace_table;   // pairwise trace distances, NaN when absent
  Eigen::Matrix3d d_half_table;  // pairwise q_d_gamma at gamma = 1/2
};

LudersReport luders_experiment(const DensityOperator& rho, const CMat& p, double gamma);

}  // namespace infodyn::qproj
