#include "infodyn/cmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace infodyn::cmeasure {

Weights::Weights(Vec w) : w_(std::move(w)) {
  if (w_.size() == 0) throw std::invalid_argument("Weights: empty vector");
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (!std::isfinite(w_[i]) || w_[i] < 0.0)
      throw std::invalid_argument("Weights: entries must be finite and >= 0");
  }
  if (w_.maxCoeff() <= 0.0) throw std::invalid_argument("Weights: total mass must be positive");
}

bool Weights::normalized(double tol) const { return std::abs(total_mass() - 1.0) <= tol; }

std::vector<Eigen::Index> Weights::support() const {
  std::vector<Eigen::Index> s;
  for (Eigen::Index i = 0; i < w_.size(); ++i)
    if (w_[i] > 0.0) s.push_back(i);
  return s;
}

double expectation(const Weights& mu, const Vec& f) {
  if (f.size() != mu.size()) throw std::invalid_argument("expectation: length mismatch");
  return mu.values().dot(f);
}

namespace {

// Indices grouped by exact value of g.
std::map<double, std::vector<Eigen::Index>> level_sets(const Vec& g) {
  std::map<double, std::vector<Eigen::Index>> blocks;
  for (Eigen::Index i = 0; i < g.size(); ++i) blocks[g[i]].push_back(i);
  return blocks;
}

}  // namespace

Vec conditional_expectation(const Weights& omega, const Vec& f, const Vec& g) {
  const Eigen::Index n = omega.size();
  if (f.size() != n || g.size() != n)
    throw std::invalid_argument("conditional_expectation: length mismatch");
  Vec e(n);
  for (const auto& [value, idx] : level_sets(g)) {
    double mass = 0.0, acc = 0.0;
    bool flat = true;
    for (Eigen::Index i : idx) {
      mass += omega[i];
      acc += omega[i] * f[i];
      flat = flat && f[i] == f[idx.front()];
    }
    if (mass <= 0.0)
      throw DegenerateConditioningError("conditional_expectation: level set g = " +
                                        std::to_string(value) + " carries no mass");
    // a block-constant f is its own conditional expectation; returning the
    // constant verbatim keeps conditioning exactly idempotent
    double block = flat ? f[idx.front()] : acc / mass;
    for (Eigen::Index i : idx) e[i] = block;
  }
  return e;
}

LinearFunctional update_by_conditioning(const Weights& omega, const Weights& phi, const Vec& g) {
  const Eigen::Index n = omega.size();
  if (phi.size() != n || g.size() != n)
    throw std::invalid_argument("update_by_conditioning: length mismatch");
  // omega(E_phi(f|g)) = sum_j f_j phi_j omega(B_j)/phi(B_j) over the level
  // sets B_j containing j; the representing coefficients are computed blockwise.
  Vec coeffs(n);
  for (const auto& [value, idx] : level_sets(g)) {
    double phi_mass = 0.0, omega_mass = 0.0;
    for (Eigen::Index i : idx) {
      phi_mass += phi[i];
      omega_mass += omega[i];
    }
    if (phi_mass <= 0.0)
      throw DegenerateConditioningError("update_by_conditioning: level set g = " +
                                        std::to_string(value) + " carries no phi-mass");
    for (Eigen::Index i : idx) coeffs[i] = phi[i] * omega_mass / phi_mass;
  }
  return LinearFunctional(coeffs);
}

Vec gamma_embed(const Weights& mu, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma_embed: gamma outside [0,1]");
  const Vec& w = mu.values();
  Vec x(w.size());
  if (gamma == 0.0) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) throw std::domain_error("gamma_embed: log chart needs full support");
      x[i] = std::log(w[i]);
    }
    return x;
  }
  for (Eigen::Index i = 0; i < w.size(); ++i) x[i] = std::pow(w[i], gamma) / gamma;
  return x;
}

Vec gamma_embed_inverse(const Vec& x, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma_embed_inverse: gamma outside [0,1]");
  Vec w(x.size());
  if (gamma == 0.0) {
    for (Eigen::Index i = 0; i < x.size(); ++i) w[i] = std::exp(x[i]);
    return w;
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double s = gamma * x[i];
    if (s < 0.0) throw std::domain_error("gamma_embed_inverse: point outside chart image");
    w[i] = std::pow(s, 1.0 / gamma);
  }
  return w;
}

MarkovMap::MarkovMap(Mat m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.cols() == 0) throw std::invalid_argument("MarkovMap: empty matrix");
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < m_.cols(); ++j) {
      if (!std::isfinite(m_(i, j)) || m_(i, j) < 0.0)
        throw std::invalid_argument("MarkovMap: entries must be finite and >= 0");
      row_sum += m_(i, j);
    }
    if (std::abs(row_sum - 1.0) > 1e-12)
      throw std::invalid_argument("MarkovMap: rows must sum to 1 (unitality)");
  }
}

Vec MarkovMap::apply_to_function(const Vec& f) const {
  if (f.size() != m_.cols()) throw std::invalid_argument("MarkovMap: function length mismatch");
  return m_ * f;
}

Weights apply_markov(const Weights& mu, const MarkovMap& t) {
  if (mu.size() != t.rows()) throw std::invalid_argument("apply_markov: weight length mismatch");
  return Weights(t.matrix().transpose() * mu.values());
}

double lp_norm(const Vec& v, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return std::pow(acc, 1.0 / p);
}

}  // namespace infodyn::cmeasure
