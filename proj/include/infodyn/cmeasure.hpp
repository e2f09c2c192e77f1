#pragma once

#include <Eigen/Dense>
#include <vector>

#include "infodyn/errors.hpp"

namespace infodyn::cmeasure {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Finite positive weight vector over a finite sample space, treated as the
// integral f |-> sum_i w_i f_i. Entries are >= 0 and at least one is > 0.
class Weights {
 public:
  explicit Weights(Vec w);

  const Vec& values() const { return w_; }
  double operator[](Eigen::Index i) const { return w_[i]; }
  Eigen::Index size() const { return w_.size(); }

  double total_mass() const { return w_.sum(); }
  bool normalized(double tol = 1e-12) const;
  std::vector<Eigen::Index> support() const;  // indices with w_i > 0

 private:
  Vec w_;
};

// Integral of f against the weights: sum_i w_i f_i.
double expectation(const Weights& mu, const Vec& f);

// Conditional expectation given the level sets of g: on each set {g = c} the
// value is the omega-weighted average of f there. Output is constant on level
// sets; a level set with zero omega-mass raises DegenerateConditioningError.
Vec conditional_expectation(const Weights& omega, const Vec& f, const Vec& g);

// Linear functional represented by a coefficient vector.
class LinearFunctional {
 public:
  explicit LinearFunctional(Vec coeffs) : coeffs_(std::move(coeffs)) {}
  double operator()(const Vec& f) const { return coeffs_.dot(f); }
  const Vec& coefficients() const { return coeffs_; }

 private:
  Vec coeffs_;
};

// Expectation updating: f |-> omega(E_phi(f | g)). The conditional expectation
// is taken under phi, the outer integral under omega; the constant-one
// function maps to omega's total mass.
LinearFunctional update_by_conditioning(const Weights& omega, const Weights& phi, const Vec& g);

// Coordinate embedding l_gamma(mu) = mu^gamma / gamma for gamma in (0,1];
// gamma = 0 is the logarithmic chart l_0(mu) = log(mu) (needs full support).
Vec gamma_embed(const Weights& mu, double gamma);

// Inverse of gamma_embed on its image.
Vec gamma_embed_inverse(const Vec& x, double gamma);

// Row-stochastic positive matrix acting on functions by (M f)_i = sum_j M_ij f_j
// (unital: M 1 = 1). The predual action on weights is the transpose.
class MarkovMap {
 public:
  explicit MarkovMap(Mat m);

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  const Mat& matrix() const { return m_; }

  Vec apply_to_function(const Vec& f) const;  // length cols -> length rows

 private:
  Mat m_;
};

// Predual action: weights on the row space map to weights on the column
// space, mu |-> M^T mu. Preserves total mass and positivity.
Weights apply_markov(const Weights& mu, const MarkovMap& t);

// l^p norm of a vector; p >= 1, p = infinity allowed.
double lp_norm(const Vec& v, double p);

}  // namespace infodyn::cmeasure
