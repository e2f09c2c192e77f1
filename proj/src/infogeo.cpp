#include "infodyn/infogeo.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace infodyn::infogeo {

namespace {

double resolve_step(const Weights& mu, double h, double dflt_scale) {
  double m = mu.values().minCoeff();
  if (m <= 0.0) throw std::domain_error("eguchi: base point must have full support");
  if (h == 0.0) return dflt_scale * m;
  if (h < 1e-6 * m || h > 1e-1 * m)
    throw std::invalid_argument("eguchi: step outside [1e-6, 1e-1] * min(mu)");
  return h;
}

double checked(double v) {
  if (!std::isfinite(v)) throw std::domain_error("eguchi: non-finite deviation in stencil");
  return v;
}

// F(x,y) = D(chart^-1 x, chart^-1 y)
struct ChartedDeviation {
  const DeviationFn& dev;
  const Chart& chart;
  double operator()(const Vec& x, const Vec& y) const {
    return checked(dev(chart.from(x), chart.from(y)));
  }
};

Mat mixed_second(const ChartedDeviation& F, const Vec& x0, double h) {
  const Eigen::Index n = x0.size();
  Mat g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Vec xp = x0, xm = x0, yp = x0, ym = x0;
      xp[i] += h; xm[i] -= h; yp[j] += h; ym[j] -= h;
      g(i, j) = (F(xp, yp) - F(xp, ym) - F(xm, yp) + F(xm, ym)) / (4.0 * h * h);
    }
  return g;
}

std::vector<Mat> third_derivatives(const ChartedDeviation& F, const Vec& x0, double h,
                                   bool first_slot_double) {
  const Eigen::Index n = x0.size();
  auto F2 = [&](const Vec& a, const Vec& b) {
    return first_slot_double ? F(a, b) : F(b, a);
  };
  std::vector<Mat> out(n, Mat(n, n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Vec yp = x0, ym = x0;
    yp[k] += h; ym[k] -= h;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) {
        auto sec = [&](const Vec& y) {
          if (i == j) {
            Vec xp = x0, xm = x0;
            xp[i] += h; xm[i] -= h;
            return (F2(xp, y) - 2.0 * F2(x0, y) + F2(xm, y)) / (h * h);
          }
          Vec xpp = x0, xpm = x0, xmp = x0, xmm = x0;
          xpp[i] += h; xpp[j] += h;
          xpm[i] += h; xpm[j] -= h;
          xmp[i] -= h; xmp[j] += h;
          xmm[i] -= h; xmm[j] -= h;
          return (F2(xpp, y) - F2(xpm, y) - F2(xmp, y) + F2(xmm, y)) / (4.0 * h * h);
        };
        double v = -(sec(yp) - sec(ym)) / (2.0 * h);
        out[k](i, j) = v;
        out[k](j, i) = v;
      }
  }
  return out;
}

}  // namespace

Chart raw_chart() {
  return {"raw", [](const Vec& w) { return w; }, [](const Vec& x) { return x; }};
}

Chart gamma_chart(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma_chart: gamma outside [0,1]");
  if (gamma == 0.0) {
    return {"log",
            [](const Vec& w) { return w.array().log().matrix().eval(); },
            [](const Vec& x) { return x.array().exp().matrix().eval(); }};
  }
  return {"gamma_" + std::to_string(gamma),
          [gamma](const Vec& w) {
            Vec x(w.size());
            for (Eigen::Index i = 0; i < w.size(); ++i) x[i] = std::pow(w[i], gamma) / gamma;
            return x;
          },
          [gamma](const Vec& x) {
            Vec w(x.size());
            for (Eigen::Index i = 0; i < x.size(); ++i) w[i] = std::pow(gamma * x[i], 1.0 / gamma);
            return w;
          }};
}

MetricMatrix eguchi_metric(const DeviationFn& dev, const Weights& mu, const Chart& chart,
                           double h) {
  h = resolve_step(mu, h, 1e-4);
  ChartedDeviation F{dev, chart};
  Vec x0 = chart.to(mu.values());
  Mat gh = mixed_second(F, x0, h);
  Mat gh2 = mixed_second(F, x0, h / 2.0);
  Mat g = (4.0 * gh2 - gh) / 3.0;
  g = (-0.5 * (g + g.transpose())).eval();
  // fix the sign so the form is positive definite
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.eigenvalues().maxCoeff() < 0.0) g = -g;
  else if (es.eigenvalues().minCoeff() < 0.0)
    throw std::domain_error("eguchi_metric: extracted form is indefinite");
  return {g, x0, chart.name, (gh2 - gh).cwiseAbs().maxCoeff()};
}

MetricMatrix fisher_rao_metric(const Weights& mu) {
  const Vec& w = mu.values();
  if (w.minCoeff() <= 0.0) throw std::domain_error("fisher_rao_metric: full support required");
  Mat g = w.cwiseInverse().asDiagonal();
  return {g, w, "raw", 0.0};
}

ConnectionCoefficients eguchi_connection(const DeviationFn& dev, const Weights& mu,
                                         const Chart& chart, double h) {
  h = resolve_step(mu, h, 5e-3);
  ChartedDeviation F{dev, chart};
  Vec x0 = chart.to(mu.values());
  auto richardson = [](const std::vector<Mat>& a, const std::vector<Mat>& b) {
    std::vector<Mat> out(a.size());
    for (size_t k = 0; k < a.size(); ++k) out[k] = (4.0 * b[k] - a[k]) / 3.0;
    return out;
  };
  auto inc = [](const std::vector<Mat>& a, const std::vector<Mat>& b) {
    double m = 0.0;
    for (size_t k = 0; k < a.size(); ++k) m = std::max(m, (b[k] - a[k]).cwiseAbs().maxCoeff());
    return m;
  };
  std::vector<Mat> ph = third_derivatives(F, x0, h, true);
  std::vector<Mat> ph2 = third_derivatives(F, x0, h / 2.0, true);
  std::vector<Mat> dh = third_derivatives(F, x0, h, false);
  std::vector<Mat> dh2 = third_derivatives(F, x0, h / 2.0, false);
  ConnectionCoefficients c;
  c.primal = richardson(ph, ph2);
  c.dual = richardson(dh, dh2);
  c.base = x0;
  c.chart_name = chart.name;
  c.fd_error = std::max(inc(ph, ph2), inc(dh, dh2));
  return c;
}

MetricField metric_field(const DeviationFn& dev, const Chart& chart, double h) {
  return [dev, chart, h](const Vec& x) {
    Weights mu(chart.from(x));
    return eguchi_metric(dev, mu, chart, h).g;
  };
}

double duality_defect(const MetricField& g_field, const ConnectionCoefficients& conn,
                      const Weights& mu, const Chart& chart,
                      const std::vector<std::array<Vec, 3>>& directions, double h) {
  // the compatibility residual differences an already-noisy numerical metric,
  // so it wants a much wider stencil than the metric itself
  h = resolve_step(mu, h, 8e-2);
  Vec x0 = chart.to(mu.values());
  if (conn.base.size() != x0.size() || (conn.base - x0).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("duality_defect: connection was extracted at a different point");
  if (conn.chart_name != chart.name)
    throw std::invalid_argument("duality_defect: chart mismatch");
  const Eigen::Index n = x0.size();
  double worst = 0.0;
  for (const auto& [u, v, w] : directions) {
    auto dg_along = [&](double step) {
      Mat gp = g_field(x0 + step * u);
      Mat gm = g_field(x0 - step * u);
      return (v.dot(gp * w) - v.dot(gm * w)) / (2.0 * step);
    };
    double lhs = (4.0 * dg_along(h / 2.0) - dg_along(h)) / 3.0;
    double rhs = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
          rhs += u[i] * v[j] * conn.primal[k](i, j) * w[k] +
                 u[i] * w[j] * conn.dual[k](i, j) * v[k];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace infodyn::infogeo
