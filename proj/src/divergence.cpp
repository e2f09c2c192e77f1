#include "infodyn/divergence.hpp"

#include <cmath>
#include <limits>

namespace infodyn::divergence {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double d_gamma(const Weights& mu, const Weights& nu, double gamma) {
  if (mu.size() != nu.size()) throw std::invalid_argument("d_gamma: length mismatch");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("d_gamma: gamma outside [0,1]");
  const Vec& m = mu.values();
  const Vec& n = nu.values();
  double acc = 0.0;
  if (gamma == 1.0) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (m[i] == 0.0) {
        acc += n[i];  // 0 log 0 := 0
      } else if (n[i] == 0.0) {
        return kInf;  // mu charges a point nu does not
      } else {
        acc += n[i] - m[i] + m[i] * std::log(m[i] / n[i]);
      }
    }
    return acc;
  }
  if (gamma == 0.0) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (n[i] == 0.0) {
        acc += m[i];
      } else if (m[i] == 0.0) {
        return kInf;
      } else {
        acc += m[i] - n[i] + n[i] * std::log(n[i] / m[i]);
      }
    }
    return acc;
  }
  const double a = 1.0 / (1.0 - gamma), b = 1.0 / gamma, c = 1.0 / (gamma * (1.0 - gamma));
  for (Eigen::Index i = 0; i < m.size(); ++i)
    acc += m[i] * a + n[i] * b - std::pow(m[i], gamma) * std::pow(n[i], 1.0 - gamma) * c;
  return acc;
}

double kl(const Weights& mu, const Weights& nu) {
  if (!mu.normalized() || !nu.normalized())
    throw std::invalid_argument("kl: both arguments must be normalized");
  return d_gamma(mu, nu, 1.0);
}

void CsiszarGenerator::check() const {
  if (std::abs(f(1.0)) > 1e-12) throw std::invalid_argument("CsiszarGenerator: f(1) != 0");
  // chord test on a log grid: f(t_mid) <= convex combination of endpoints
  const int k = 64;
  for (int i = 0; i + 2 < k; ++i) {
    double ta = std::pow(10.0, -3.0 + 6.0 * i / (k - 1));
    double tm = std::pow(10.0, -3.0 + 6.0 * (i + 1) / (k - 1));
    double tb = std::pow(10.0, -3.0 + 6.0 * (i + 2) / (k - 1));
    double lam = (tb - tm) / (tb - ta);
    if (f(tm) - (lam * f(ta) + (1.0 - lam) * f(tb)) > 1e-9)
      throw std::invalid_argument("CsiszarGenerator: sampled convexity violated");
  }
}

double csiszar(const Weights& mu, const Weights& nu, const CsiszarGenerator& gen) {
  if (mu.size() != nu.size()) throw std::invalid_argument("csiszar: length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double m = mu[i], n = nu[i];
    if (m == 0.0 && n == 0.0) continue;
    double term;
    if (n == 0.0) {
      term = m * gen.limit_at_zero;
    } else if (m == 0.0) {
      term = n * gen.slope_at_infinity;
    } else {
      term = m * gen.f(n / m);
    }
    if (std::isnan(term)) throw std::domain_error("csiszar: undefined boundary combination");
    acc += term;
    if (std::isinf(acc)) return acc;
  }
  return acc;
}

CsiszarGenerator gamma_csiszar_generator(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma_csiszar_generator: gamma outside [0,1]");
  if (gamma == 1.0)
    return {[](double t) { return t - 1.0 - std::log(t); }, kInf, 1.0};
  if (gamma == 0.0)
    return {[](double t) { return 1.0 - t + t * std::log(t); }, 1.0, kInf};
  const double a = 1.0 / (1.0 - gamma), b = 1.0 / gamma, c = 1.0 / (gamma * (1.0 - gamma));
  return {[a, b, c, gamma](double t) { return a + t * b - std::pow(t, 1.0 - gamma) * c; }, a, b};
}

CsiszarGenerator smoothed_tv_generator(double eps) {
  if (eps <= 0.0) throw std::invalid_argument("smoothed_tv_generator: eps must be > 0");
  return {[eps](double t) { return std::hypot(t - 1.0, eps) - eps; },
          std::hypot(1.0, eps) - eps, 1.0};
}

CsiszarGenerator xlogx_generator() {
  return {[](double t) { return t * std::log(t) - t + 1.0; }, 1.0, kInf};
}

void BregmanGenerator::check(const std::vector<Weights>& samples) const {
  for (const Weights& q : samples) {
    Vec x = chart(q);
    Vec d = dual_chart(q);
    if ((d - grad_psi(x)).cwiseAbs().maxCoeff() > 1e-9)
      throw std::invalid_argument("BregmanGenerator: dual chart is not grad Psi o chart");
  }
  for (const Weights& p : samples)
    for (const Weights& q : samples) {
      // Psi(l(p)) + Psi^lf(l*(q)) - <l(p), l*(q)> >= 0 (Young-Fenchel)
      Vec xp = chart(p), xq = chart(q), yq = dual_chart(q);
      double gap = psi(xp) + (xq.dot(yq) - psi(xq)) - xp.dot(yq);
      if (gap < -1e-10) throw std::invalid_argument("BregmanGenerator: negative Young-Fenchel gap");
    }
}

double bregman(const Weights& p1, const Weights& p2, const BregmanGenerator& gen) {
  Vec x1 = gen.chart(p1), x2 = gen.chart(p2), y2 = gen.dual_chart(p2);
  // Psi^lf(l*(p2)) = <l(p2), l*(p2)> - Psi(l(p2)) on the dual chart.
  return gen.psi(x1) + (x2.dot(y2) - gen.psi(x2)) - x1.dot(y2);
}

BregmanGenerator gamma_bregman_generator(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma_bregman_generator: gamma outside [0,1]");
  if (gamma == 1.0) {
    // negative entropy Psi(x) = sum x log x - x, identity chart, dual chart log
    return {
        [](const Vec& x) {
          double acc = 0.0;
          for (Eigen::Index i = 0; i < x.size(); ++i)
            acc += (x[i] > 0.0 ? x[i] * std::log(x[i]) : 0.0) - x[i];
          return acc;
        },
        [](const Vec& x) { return x.array().log().matrix().eval(); },
        [](const Weights& q) { return q.values(); },
        [](const Weights& q) { return gamma_embed(q, 0.0); },
    };
  }
  if (gamma == 0.0) {
    // Psi(x) = sum exp(x), log chart, dual chart identity
    return {
        [](const Vec& x) { return x.array().exp().sum(); },
        [](const Vec& x) { return x.array().exp().matrix().eval(); },
        [](const Weights& q) { return gamma_embed(q, 0.0); },
        [](const Weights& q) { return q.values(); },
    };
  }
  const double g = gamma;
  return {
      // Psi_gamma(x) = sum (g x_i)^(1/g) / (1-g), so Psi_gamma(l_gamma(mu)) = sum mu_i/(1-g)
      [g](const Vec& x) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) acc += std::pow(g * x[i], 1.0 / g);
        return acc / (1.0 - g);
      },
      [g](const Vec& x) {
        Vec out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
          out[i] = std::pow(g * x[i], (1.0 - g) / g) / (1.0 - g);
        return out;
      },
      [g](const Weights& q) { return gamma_embed(q, g); },
      [g](const Weights& q) { return gamma_embed(q, 1.0 - g); },
  };
}

BregmanGenerator quadratic_bregman_generator() {
  return {
      [](const Vec& x) { return 0.5 * x.squaredNorm(); },
      [](const Vec& x) { return x; },
      [](const Weights& q) { return q.values(); },
      [](const Weights& q) { return q.values(); },
  };
}

double cosine_defect(const Weights& p1, const Weights& p2, const Weights& p3,
                     const BregmanGenerator& gen) {
  double lhs = bregman(p1, p2, gen) + bregman(p2, p3, gen) - bregman(p1, p3, gen);
  Vec dl = gen.chart(p1) - gen.chart(p2);
  Vec dd = gen.dual_chart(p3) - gen.dual_chart(p2);
  return lhs - dl.dot(dd);
}

namespace {

// Golden-section maximization of h along coordinate i within [lo, hi].
double golden_max(const std::function<double(double)>& h, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double hc = h(c), hd = h(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (hc > hd) {
      b = d; d = c; hd = hc;
      c = b - invphi * (b - a); hc = h(c);
    } else {
      a = c; c = d; hc = hd;
      d = a + invphi * (b - a); hd = h(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

LegendreDualResult legendre_dual(const std::function<double(const Vec&)>& psi, const Vec& y,
                                 const Vec& box_lo, const Vec& box_hi) {
  const Eigen::Index n = y.size();
  if (box_lo.size() != n || box_hi.size() != n)
    throw std::invalid_argument("legendre_dual: box dimension mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(box_lo[i] < box_hi[i])) throw std::invalid_argument("legendre_dual: empty box");

  auto objective = [&](const Vec& x) { return x.dot(y) - psi(x); };
  Vec x = 0.5 * (box_lo + box_hi);
  double val = objective(x);
  for (int sweep = 0; sweep < 500; ++sweep) {
    double prev = val;
    Vec prev_x = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto along = [&](double xi) {
        Vec z = x;
        z[i] = xi;
        return objective(z);
      };
      x[i] = golden_max(along, box_lo[i], box_hi[i]);
    }
    val = objective(x);
    if (val - prev <= 1e-13 * (1.0 + std::abs(val)) &&
        (x - prev_x).cwiseAbs().maxCoeff() <= 1e-10)
      break;
  }

  LegendreDualResult res;
  res.value = objective(x);
  res.argmax = x;
  res.bounded = true;
  // boundary with outward ascent means the box clipped the supremum
  for (Eigen::Index i = 0; i < n; ++i) {
    double width = box_hi[i] - box_lo[i];
    double step = 1e-7 * width;
    auto at = [&](double xi) {
      Vec z = x;
      z[i] = xi;
      return objective(z);
    };
    if (x[i] >= box_hi[i] - 1e-9 * width && at(x[i]) - at(x[i] - step) > 1e-8 * step)
      res.bounded = false;
    if (x[i] <= box_lo[i] + 1e-9 * width && at(x[i]) - at(x[i] + step) > 1e-8 * step)
      res.bounded = false;
  }
  return res;
}

}  // namespace infodyn::divergence
