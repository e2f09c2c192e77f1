#pragma once

#include <functional>
#include <optional>

#include "infodyn/cmeasure.hpp"

namespace infodyn::divergence {

using cmeasure::Mat;
using cmeasure::Vec;
using cmeasure::Weights;

// One-parameter deviation family on positive weights,
//   D_gamma(mu,nu) = sum_i [ mu_i/(1-gamma) + nu_i/gamma - mu_i^gamma nu_i^(1-gamma)/(gamma(1-gamma)) ]
// for gamma in (0,1), with the limits
//   D_1(mu,nu) = sum_i [ nu_i - mu_i + mu_i log(mu_i/nu_i) ],
//   D_0(mu,nu) = D_1(nu,mu).
// Satisfies d_gamma(mu,nu,gamma) = d_gamma(nu,mu,1-gamma). Returns +inf when
// gamma = 1 and mu charges a point nu does not (mirrored at gamma = 0).
double d_gamma(const Weights& mu, const Weights& nu, double gamma);

// Kullback-Leibler divergence on normalized states; equals d_gamma(mu,nu,1).
// Errors unless both arguments are normalized to 1e-12.
double kl(const Weights& mu, const Weights& nu);

// Generator for the Csiszar-Morimoto family: convex f with f(1) = 0, together
// with the boundary data lim_{t->0+} f(t) and lim_{t->inf} f(t)/t (either may
// be +inf).
struct CsiszarGenerator {
  std::function<double(double)> f;
  double limit_at_zero;      // lim_{t->0+} f(t)
  double slope_at_infinity;  // lim_{t->inf} f(t)/t

  // Sampled checks: f(1) = 0 within 1e-12 and chord convexity >= -1e-9 on a
  // log grid over [1e-3, 1e3]. Throws on violation.
  void check() const;
};

// sum_i mu_i f(nu_i/mu_i) with the conventions
//   mu_i = nu_i = 0            -> 0
//   mu_i > 0, nu_i = 0         -> mu_i * limit_at_zero
//   mu_i = 0, nu_i > 0         -> nu_i * slope_at_infinity.
double csiszar(const Weights& mu, const Weights& nu, const CsiszarGenerator& gen);

// Generator reproducing d_gamma(.,.,gamma) through csiszar for gamma in [0,1]:
// f_gamma(t) = 1/(1-gamma) + t/gamma - t^(1-gamma)/(gamma(1-gamma)) inside
// (0,1); f_1(t) = t - 1 - log t; f_0(t) = 1 - t + t log t.
CsiszarGenerator gamma_csiszar_generator(double gamma);

// Smoothed total-variation generator sqrt((t-1)^2 + eps^2) - eps.
CsiszarGenerator smoothed_tv_generator(double eps);

// Generator t log t - t + 1 (reproduces d_gamma with swapped arguments at 1).
CsiszarGenerator xlogx_generator();

// Bregman structure: convex potential Psi on a chart, its gradient, the chart
// l and the dual chart l* with l*(q) = grad Psi(l(q)).
struct BregmanGenerator {
  std::function<double(const Vec&)> psi;
  std::function<Vec(const Vec&)> grad_psi;
  std::function<Vec(const Weights&)> chart;       // l
  std::function<Vec(const Weights&)> dual_chart;  // l*

  // Sampled invariants on the given states: l*(q) = grad Psi(l(q)) within
  // 1e-9 and the Young-Fenchel gap Psi(l(p)) + Psi^lf(l*(q)) - <l(p),l*(q)>
  // is >= -1e-10. Throws on violation.
  void check(const std::vector<Weights>& samples) const;
};

// D_Psi(p1,p2) = Psi(l(p1)) + Psi^lf(l*(p2)) - <l(p1), l*(p2)>, evaluated via
// the Fenchel equality Psi^lf(l*(q)) = <l(q),l*(q)> - Psi(l(q)) which holds on
// the dual chart.
double bregman(const Weights& p1, const Weights& p2, const BregmanGenerator& gen);

// The gamma-family as a Bregman structure: Psi_gamma(l_gamma(mu)) =
// sum_i mu_i/(1-gamma) for gamma in (0,1); gamma = 1 uses the negative entropy
// potential with the identity chart (dual chart log); gamma = 0 its dual.
BregmanGenerator gamma_bregman_generator(double gamma);

// Quadratic potential Psi(x) = 0.5 |x|^2 in the identity chart.
BregmanGenerator quadratic_bregman_generator();

// Generalized cosine residual
//   D(p1,p2) + D(p2,p3) - D(p1,p3) - <l(p1)-l(p2), l*(p3)-l*(p2)>.
double cosine_defect(const Weights& p1, const Weights& p2, const Weights& p3,
                     const BregmanGenerator& gen);

struct LegendreDualResult {
  double value = 0.0;
  Vec argmax;
  bool bounded = true;  // false when the sup sits on the box boundary with outward ascent
};

// Numerical Legendre transform Psi*(y) = sup_x { <x,y> - Psi(x) } over an
// axis-aligned box, by cyclic coordinate ascent with golden-section line
// searches. Psi must be convex on the box.
LegendreDualResult legendre_dual(const std::function<double(const Vec&)>& psi, const Vec& y,
                                 const Vec& box_lo, const Vec& box_hi);

}  // namespace infodyn::divergence
