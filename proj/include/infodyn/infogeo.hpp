#pragma once

#include <array>
#include <functional>
#include <string>

#include "infodyn/cmeasure.hpp"

namespace infodyn::infogeo {

using cmeasure::Mat;
using cmeasure::Vec;
using cmeasure::Weights;

// Deviation evaluator on raw weight vectors; +inf and exceptions allowed
// outside the domain.
using DeviationFn = std::function<double(const Vec&, const Vec&)>;

// Coordinate chart on the positive orthant.
struct Chart {
  std::string name;
  std::function<Vec(const Vec&)> to;    // weights -> chart coordinates
  std::function<Vec(const Vec&)> from;  // chart coordinates -> weights
};

Chart raw_chart();
Chart gamma_chart(double gamma);  // l_gamma; gamma = 0 is the log chart

struct MetricMatrix {
  Mat g;
  Vec base;  // chart coordinates of the base point
  std::string chart_name;
  double fd_error = 0.0;  // Richardson increment, an error estimate
};

// Connection coefficients in covariant form: primal[k](i,j) = Gamma_{ij,k},
// symmetric in (i,j); dual holds the conjugate family.
struct ConnectionCoefficients {
  std::vector<Mat> primal;
  std::vector<Mat> dual;
  Vec base;
  std::string chart_name;
  double fd_error = 0.0;
};

// Metric extracted from a deviation: g_ij = -d^2/(dx_i dy_j) D(x,y) at the
// diagonal, in chart coordinates, by central differences with Richardson
// extrapolation over {h, h/2}; symmetrized, sign fixed to positive definite.
// h = 0 selects the default 1e-4 * min(mu); allowed band [1e-6, 1e-1] * min(mu).
MetricMatrix eguchi_metric(const DeviationFn& dev, const Weights& mu, const Chart& chart,
                           double h = 0.0);

// Closed form diag(1/mu_i) in raw coordinates.
MetricMatrix fisher_rao_metric(const Weights& mu);

// Connection pair extracted from a deviation:
//   Gamma_{ij,k}  = -d^3 D / dx_i dx_j dy_k   (primal)
//   Gamma*_{ij,k} = -d^3 D / dy_i dy_j dx_k   (dual)
// at the diagonal, in chart coordinates. Third-derivative stencils sit higher
// on the roundoff floor, so h = 0 selects 5e-3 * min(mu); same allowed band.
ConnectionCoefficients eguchi_connection(const DeviationFn& dev, const Weights& mu,
                                         const Chart& chart, double h = 0.0);

using MetricField = std::function<Mat(const Vec& chart_point)>;

// Metric field in the given chart, for differentiating g against the base point.
MetricField metric_field(const DeviationFn& dev, const Chart& chart, double h = 0.0);

// Max over direction triples (u,v,w) of
//   | d_u g(v,w) - Gamma(u,v;w) - Gamma*(u,w;v) |,
// the compatibility residual between a metric field and a connection pair.
// Differentiates an already-noisy numerical metric, so h = 0 selects the much
// wider 8e-2 * min(mu); same allowed band.
double duality_defect(const MetricField& g_field, const ConnectionCoefficients& conn,
                      const Weights& mu, const Chart& chart,
                      const std::vector<std::array<Vec, 3>>& directions, double h = 0.0);

}  // namespace infodyn::infogeo
