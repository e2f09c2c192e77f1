#include "experiments.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

#include "infodyn/divergence.hpp"
#include "infodyn/entproj.hpp"
#include "infodyn/infogeo.hpp"
#include "infodyn/qproj.hpp"
#include "infodyn/qstate.hpp"

namespace infodyn::cli {
namespace {

using cmeasure::Weights;
using qstate::Complex;
using qstate::DensityOperator;

// ---------------------------------------------------------------------------
// config field access

const json& need(const json& cfg, const char* key, const std::string& what) {
  if (!cfg.contains(key)) throw std::invalid_argument(what + ": missing field \"" + key + "\"");
  return cfg.at(key);
}

double num_field(const json& cfg, const char* key, const std::string& what) {
  const json& v = need(cfg, key, what);
  if (!v.is_number()) throw std::invalid_argument(what + ": field \"" + key + "\" must be a number");
  return v.get<double>();
}

long long int_field(const json& cfg, const char* key, const std::string& what, long long lo,
                    long long hi) {
  const json& v = need(cfg, key, what);
  if (!v.is_number_integer())
    throw std::invalid_argument(what + ": field \"" + key + "\" must be an integer");
  long long n = v.get<long long>();
  if (n < lo || n > hi)
    throw std::invalid_argument(what + ": field \"" + key + "\" is out of range");
  return n;
}

std::uint64_t seed_field(const json& cfg, const std::string& what) {
  if (!cfg.contains("seed")) return 0;
  const json& v = cfg.at("seed");
  if (!v.is_number_unsigned())
    throw std::invalid_argument(what + ": field \"seed\" must be an unsigned integer");
  return v.get<std::uint64_t>();
}

std::vector<double> gamma_list(const json& cfg, const std::string& what) {
  Vec g = vec_from_json(need(cfg, "gammas", what), what + ": gammas");
  std::vector<double> out(g.data(), g.data() + g.size());
  for (double x : out)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument(what + ": gammas must lie in [0, 1]");
  return out;
}

entproj::TrajectoryMode mode_field(const json& cfg, const std::string& what) {
  std::string m = cfg.value("mode", std::string("literal"));
  if (m == "literal") return entproj::TrajectoryMode::literal;
  if (m == "chained") return entproj::TrajectoryMode::chained;
  throw std::invalid_argument(what + ": mode must be \"literal\" or \"chained\"");
}

// ---------------------------------------------------------------------------
// constraint / penalty payloads

entproj::ConstraintSet constraints_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + ": a constraint set must be an object");
  entproj::ConstraintSet cs;
  if (j.contains("moments")) {
    const json& ms = j.at("moments");
    if (!ms.is_array()) throw std::invalid_argument(what + ": \"moments\" must be an array");
    for (const json& m : ms)
      cs.moments.push_back({vec_from_json(need(m, "a", what), what + ": moment row"),
                            num_field(m, "c", what)});
  }
  if (j.contains("support")) {
    const json& s = j.at("support");
    if (!s.is_array()) throw std::invalid_argument(what + ": \"support\" must be an index array");
    std::vector<Eigen::Index> idx;
    for (const json& e : s) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw std::invalid_argument(what + ": support indices must be non-negative integers");
      idx.push_back(e.get<Eigen::Index>());
    }
    cs.support = std::move(idx);
  }
  if (j.contains("total_mass")) cs.total_mass = num_field(j, "total_mass", what);
  return cs;
}

entproj::PenaltyFunction penalty_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument(what + ": a penalty needs a \"kind\"");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") return entproj::PenaltyFunction::none();
  if (kind == "linear")
    return entproj::PenaltyFunction::linear(vec_from_json(need(j, "slope", what), what));
  if (kind == "quadratic")
    return entproj::PenaltyFunction::quadratic(rmat_from_json(need(j, "w", what), what),
                                               vec_from_json(need(j, "center", what), what));
  throw std::invalid_argument(what + ": unknown penalty kind \"" + kind + "\"");
}

qproj::QuantumConstraintSet quantum_constraints_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + ": a constraint set must be an object");
  qproj::QuantumConstraintSet cs;
  if (j.contains("moments")) {
    const json& ms = j.at("moments");
    if (!ms.is_array()) throw std::invalid_argument(what + ": \"moments\" must be an array");
    for (const json& m : ms)
      cs.moments.push_back({cmat_from_json(need(m, "a", what), what + ": moment row"),
                            num_field(m, "c", what)});
  }
  if (j.contains("support"))
    cs.support = cmat_from_json(j.at("support"), what + ": support projector");
  if (j.contains("trace")) cs.trace = num_field(j, "trace", what);
  return cs;
}

qproj::QuantumPenalty quantum_penalty_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument(what + ": a penalty needs a \"kind\"");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") return qproj::QuantumPenalty::none();
  if (kind == "linear")
    return qproj::QuantumPenalty::linear(cmat_from_json(need(j, "slope", what), what));
  if (kind == "quadratic")
    return qproj::QuantumPenalty::quadratic(num_field(j, "weight", what),
                                            cmat_from_json(need(j, "center", what), what));
  throw std::invalid_argument(what + ": unknown penalty kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// deterministic draws (engine-output based, identical on every platform)

struct Draw {
  std::mt19937_64 eng;
  explicit Draw(std::uint64_t seed) : eng(seed) {}

  double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
  double gauss() {
    double u = 1.0 - u01();
    double v = u01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }
  Vec positive(Eigen::Index n, double lo, double hi) {
    Vec out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = uniform(lo, hi);
    return out;
  }
  // Wishart draw with a spectral floor, normalized to unit trace.
  CMat faithful_density(Eigen::Index n) {
    CMat g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = Complex(gauss(), gauss());
    CMat w = g * g.adjoint();
    w += 0.05 * (w.trace().real() / static_cast<double>(n)) * CMat::Identity(n, n);
    return w / w.trace().real();
  }
};

// ---------------------------------------------------------------------------
// row helpers

void matrix_columns(std::vector<std::string>& cols, const std::string& prefix, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      cols.push_back(prefix + "_re_" + std::to_string(i) + "_" + std::to_string(j));
      cols.push_back(prefix + "_im_" + std::to_string(i) + "_" + std::to_string(j));
    }
}

void matrix_values(std::vector<double>& row, const CMat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j).real());
      row.push_back(m(i, j).imag());
    }
}

// ---------------------------------------------------------------------------
// divergence-sweep

json divergence_sweep_template() {
  json t;
  t["experiment"] = "divergence-sweep";
  t["seed"] = 1;
  t["dim"] = 4;
  t["pairs"] = 16;
  t["gammas"] = json::array({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  return t;
}

RunRecord run_divergence_sweep(const json& cfg) {
  const std::string what = "divergence-sweep";
  std::vector<double> gammas = gamma_list(cfg, what);
  std::vector<std::pair<Vec, Vec>> prs;
  if (cfg.contains("mu") || cfg.contains("nu")) {
    Vec mu = vec_from_json(need(cfg, "mu", what), what + ": mu");
    Vec nu = vec_from_json(need(cfg, "nu", what), what + ": nu");
    if (mu.size() != nu.size())
      throw std::invalid_argument(what + ": mu and nu must share a length");
    prs.emplace_back(std::move(mu), std::move(nu));
  } else {
    Eigen::Index dim = int_field(cfg, "dim", what, 1, 64);
    long long pairs = int_field(cfg, "pairs", what, 1, 100000);
    Draw d(seed_field(cfg, what));
    for (long long k = 0; k < pairs; ++k)
      prs.emplace_back(d.positive(dim, 0.1, 3.0), d.positive(dim, 0.1, 3.0));
  }

  RunRecord rec;
  rec.columns = {"step", "t", "deviation", "dual_deviation", "duality_defect"};
  double worst = 0.0;
  for (size_t k = 0; k < prs.size(); ++k) {
    Weights mu(prs[k].first), nu(prs[k].second);
    for (double g : gammas) {
      double a = divergence::d_gamma(mu, nu, g);
      double b = divergence::d_gamma(nu, mu, 1.0 - g);
      double defect = std::abs(a - b);
      worst = std::max(worst, defect);
      rec.rows.push_back({static_cast<double>(k), g, a, b, defect});
    }
  }
  rec.residuals["max_duality_defect"] = worst;
  return rec;
}

// ---------------------------------------------------------------------------
// metric-extract

json metric_extract_template() {
  json t;
  t["experiment"] = "metric-extract";
  t["seed"] = 7;
  t["mu"] = json::array({0.2, 0.3, 0.1, 0.4});
  t["gammas"] = json::array({0.0, 0.25, 0.5, 0.75, 1.0});
  return t;
}

RunRecord run_metric_extract(const json& cfg) {
  const std::string what = "metric-extract";
  std::vector<double> gammas = gamma_list(cfg, what);
  Vec mu;
  if (cfg.contains("mu")) {
    mu = vec_from_json(cfg.at("mu"), what + ": mu");
  } else {
    Eigen::Index dim = int_field(cfg, "dim", what, 2, 8);
    Draw d(seed_field(cfg, what));
    mu = d.positive(dim, 0.2, 1.0);
    mu /= mu.sum();
  }
  Weights base(mu);
  const Eigen::Index n = mu.size();
  Mat fisher = infogeo::fisher_rao_metric(base).g;

  RunRecord rec;
  rec.columns = {"step", "t"};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      rec.columns.push_back("g_" + std::to_string(i) + "_" + std::to_string(j));
  rec.columns.push_back("fd_error");
  rec.columns.push_back("fisher_gap");

  double worst = 0.0;
  for (size_t k = 0; k < gammas.size(); ++k) {
    double g = gammas[k];
    auto dev = [g](const Vec& x, const Vec& y) {
      return divergence::d_gamma(Weights(x), Weights(y), g);
    };
    infogeo::MetricMatrix m = infogeo::eguchi_metric(dev, base, infogeo::raw_chart());
    double gap = (m.g - fisher).cwiseAbs().maxCoeff();
    worst = std::max(worst, gap);
    std::vector<double> row = {static_cast<double>(k), g};
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) row.push_back(m.g(i, j));
    row.push_back(m.fd_error);
    row.push_back(gap);
    rec.rows.push_back(std::move(row));
  }
  rec.residuals["max_fisher_gap"] = worst;
  rec.outputs["chart"] = "raw";
  rec.outputs["base"] = vec_to_json(mu);
  return rec;
}

// ---------------------------------------------------------------------------
// dice

json dice_template() {
  json t;
  t["experiment"] = "dice";
  t["gamma"] = 1.0;
  t["prior"] = json::array({1.0, 1.0, 1.0, 1.0, 1.0, 1.0});
  t["values"] = json::array({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  t["target_mean"] = 4.5;
  return t;
}

RunRecord run_dice(const json& cfg) {
  const std::string what = "dice";
  Vec prior = vec_from_json(need(cfg, "prior", what), what + ": prior");
  Vec values = vec_from_json(need(cfg, "values", what), what + ": values");
  if (prior.size() != values.size())
    throw std::invalid_argument(what + ": prior and values must share a length");
  double target = num_field(cfg, "target_mean", what);
  double gamma = num_field(cfg, "gamma", what);

  Weights p(prior / prior.sum());
  entproj::ConstraintSet cs;
  cs.moments.push_back({values, target});
  cs.total_mass = 1.0;
  entproj::ProjectionResult r = entproj::project(p, gamma, cs, entproj::PenaltyFunction::none());

  double mean = r.state.values().dot(values);
  RunRecord rec;
  rec.columns = {"step", "t"};
  for (Eigen::Index i = 0; i < prior.size(); ++i) rec.columns.push_back("q_" + std::to_string(i));
  rec.columns.insert(rec.columns.end(),
                     {"mean", "mean_residual", "kkt_stationarity", "kkt_feasibility"});
  std::vector<double> row = {0.0, 0.0};
  for (Eigen::Index i = 0; i < r.state.size(); ++i) row.push_back(r.state[i]);
  row.insert(row.end(),
             {mean, std::abs(mean - target), r.kkt_stationarity, r.kkt_feasibility});
  rec.rows.push_back(std::move(row));
  rec.residuals["mean_residual"] = std::abs(mean - target);
  rec.residuals["kkt_stationarity"] = r.kkt_stationarity;
  rec.residuals["kkt_feasibility"] = r.kkt_feasibility;
  rec.outputs["method"] = r.method;
  rec.outputs["iterations"] = r.iterations;
  rec.outputs["objective"] = r.objective;
  rec.outputs["multipliers"] = vec_to_json(r.multipliers);
  return rec;
}

// ---------------------------------------------------------------------------
// bayes-recovery

json bayes_recovery_template() {
  json t;
  t["experiment"] = "bayes-recovery";
  t["seed"] = 11;
  t["n_x"] = 4;
  t["n_theta"] = 3;
  t["observed_x"] = 1;
  return t;
}

RunRecord run_bayes_recovery(const json& cfg) {
  const std::string what = "bayes-recovery";
  Eigen::Index n_x = int_field(cfg, "n_x", what, 1, 64);
  Eigen::Index n_theta = int_field(cfg, "n_theta", what, 1, 64);
  Eigen::Index observed = int_field(cfg, "observed_x", what, 0, n_x - 1);

  Vec joint;
  if (cfg.contains("joint")) {
    joint = vec_from_json(cfg.at("joint"), what + ": joint");
    if (joint.size() != n_x * n_theta)
      throw std::invalid_argument(what + ": joint must hold n_x * n_theta weights");
  } else {
    Draw d(seed_field(cfg, what));
    joint = d.positive(n_x * n_theta, 0.1, 1.0);
    joint /= joint.sum();
  }

  Weights posterior = entproj::bayes_update(Weights(joint), n_x, n_theta, observed);
  Vec oracle = joint.segment(observed * n_theta, n_theta);
  oracle /= oracle.sum();
  double gap = (posterior.values() - oracle).cwiseAbs().maxCoeff();

  RunRecord rec;
  rec.columns = {"step", "t"};
  for (Eigen::Index i = 0; i < n_theta; ++i)
    rec.columns.push_back("posterior_" + std::to_string(i));
  for (Eigen::Index i = 0; i < n_theta; ++i) rec.columns.push_back("oracle_" + std::to_string(i));
  rec.columns.push_back("max_abs_gap");
  std::vector<double> row = {0.0, 0.0};
  for (Eigen::Index i = 0; i < n_theta; ++i) row.push_back(posterior[i]);
  for (Eigen::Index i = 0; i < n_theta; ++i) row.push_back(oracle[i]);
  row.push_back(gap);
  rec.rows.push_back(std::move(row));
  rec.residuals["max_abs_gap"] = gap;
  return rec;
}

// ---------------------------------------------------------------------------
// gibbs-qubit

json gibbs_qubit_template() {
  json t;
  t["experiment"] = "gibbs-qubit";
  t["gamma"] = 1.0;
  t["prior"] = matrix_to_json(0.5 * CMat::Identity(2, 2));
  t["observable"] = matrix_to_json(qstate::pauli_z());
  t["target"] = 0.5;
  return t;
}

RunRecord run_gibbs_qubit(const json& cfg) {
  const std::string what = "gibbs-qubit";
  DensityOperator prior(cmat_from_json(need(cfg, "prior", what), what + ": prior"));
  CMat a = cmat_from_json(need(cfg, "observable", what), what + ": observable");
  double target = num_field(cfg, "target", what);
  double gamma = num_field(cfg, "gamma", what);

  qproj::QuantumConstraintSet cs;
  cs.moments.push_back({a, target});
  cs.trace = 1.0;
  qproj::QuantumProjectionResult r =
      qproj::q_project(prior, gamma, cs, qproj::QuantumPenalty::none());

  double moment = (r.state.matrix() * a).trace().real();
  const Eigen::Index n = prior.dimension();
  RunRecord rec;
  rec.columns = {"step", "t"};
  matrix_columns(rec.columns, "rho", n);
  rec.columns.insert(rec.columns.end(),
                     {"moment_residual", "kkt_stationarity", "kkt_feasibility"});
  std::vector<double> row = {0.0, 0.0};
  matrix_values(row, r.state.matrix());
  row.insert(row.end(), {std::abs(moment - target), r.kkt_stationarity, r.kkt_feasibility});
  rec.rows.push_back(std::move(row));
  rec.residuals["moment_residual"] = std::abs(moment - target);
  rec.residuals["kkt_stationarity"] = r.kkt_stationarity;
  rec.residuals["kkt_feasibility"] = r.kkt_feasibility;
  rec.outputs["method"] = r.method;
  rec.outputs["iterations"] = r.iterations;
  rec.outputs["objective"] = r.objective;
  rec.outputs["multipliers"] = vec_to_json(r.multipliers);
  rec.outputs["eigenvalues"] = vec_to_json(r.state.eigenvalues());
  rec.outputs["state"] = matrix_to_json(r.state.matrix());
  return rec;
}

// ---------------------------------------------------------------------------
// luders

json luders_template() {
  json t;
  t["experiment"] = "luders";
  t["gamma"] = 0.5;
  CMat rho = CMat::Zero(3, 3);
  rho(0, 0) = 0.5;
  rho(1, 1) = 0.3;
  rho(2, 2) = 0.2;
  CMat p = CMat::Zero(3, 3);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  t["state"] = matrix_to_json(rho);
  t["projector"] = matrix_to_json(p);
  return t;
}

RunRecord run_luders(const json& cfg) {
  const std::string what = "luders";
  DensityOperator rho(cmat_from_json(need(cfg, "state", what), what + ": state"));
  CMat p = cmat_from_json(need(cfg, "projector", what), what + ": projector");
  double gamma = num_field(cfg, "gamma", what);

  qproj::LudersReport rep = qproj::luders_experiment(rho, p, gamma);
  const Eigen::Index n = rho.dimension();

  RunRecord rec;
  rec.columns = {"step", "t"};
  matrix_columns(rec.columns, "reduced", n);
  rec.columns.insert(rec.columns.end(), {"forward_present", "reverse_present", "commuting",
                                         "commuting_disagreement"});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      rec.columns.push_back("tdist_" + std::to_string(i) + "_" + std::to_string(j));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      rec.columns.push_back("dhalf_" + std::to_string(i) + "_" + std::to_string(j));

  std::vector<double> row = {0.0, 0.0};
  matrix_values(row, rep.reduced.matrix());
  row.insert(row.end(), {rep.forward ? 1.0 : 0.0, rep.reverse ? 1.0 : 0.0,
                         rep.commuting ? 1.0 : 0.0, rep.commuting_disagreement});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) row.push_back(rep.trace_table(i, j));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) row.push_back(rep.d_half_table(i, j));
  rec.rows.push_back(std::move(row));

  rec.residuals["commuting_disagreement"] = rep.commuting_disagreement;
  rec.outputs["candidate_order"] = json::array({"reduced", "forward", "reverse"});
  rec.outputs["commuting"] = rep.commuting;
  rec.outputs["reduced"] = matrix_to_json(rep.reduced.matrix());
  rec.outputs["forward"] = rep.forward ? matrix_to_json(rep.forward->matrix()) : json();
  rec.outputs["reverse"] = rep.reverse ? matrix_to_json(rep.reverse->matrix()) : json();
  rec.outputs["forward_error"] = rep.forward_error;
  rec.outputs["reverse_error"] = rep.reverse_error;
  return rec;
}

// ---------------------------------------------------------------------------
// trajectory-classical

json trajectory_classical_template() {
  json t;
  t["experiment"] = "trajectory-classical";
  t["gamma"] = 1.0;
  t["mode"] = "literal";
  t["prior"] = json::array({0.25, 0.25, 0.25, 0.25});
  json sched;
  sched["times"] = json::array({0.0, 1.0, 2.0, 3.0});
  json steps = json::array();
  steps.push_back(json::object());
  for (double c : {2.0, 2.5, 3.0}) {
    json cs;
    cs["moments"] = json::array();
    json m;
    m["a"] = json::array({1.0, 2.0, 3.0, 4.0});
    m["c"] = c;
    cs["moments"].push_back(m);
    cs["total_mass"] = 1.0;
    steps.push_back(cs);
  }
  sched["constraints"] = steps;
  t["schedule"] = sched;
  return t;
}

RunRecord run_trajectory_classical(const json& cfg) {
  const std::string what = "trajectory-classical";
  Weights p0(vec_from_json(need(cfg, "prior", what), what + ": prior"));
  double gamma = num_field(cfg, "gamma", what);
  const json& sj = need(cfg, "schedule", what);

  entproj::Schedule sched;
  Vec times = vec_from_json(need(sj, "times", what), what + ": times");
  sched.times.assign(times.data(), times.data() + times.size());
  const json& csj = need(sj, "constraints", what);
  if (!csj.is_array()) throw std::invalid_argument(what + ": \"constraints\" must be an array");
  for (const json& c : csj) sched.constraints.push_back(constraints_from_json(c, what));
  if (sj.contains("penalties")) {
    for (const json& f : sj.at("penalties")) sched.penalties.push_back(penalty_from_json(f, what));
  } else {
    sched.penalties.assign(sched.times.size(), entproj::PenaltyFunction::none());
  }

  auto path = entproj::trajectory(p0, gamma, sched, mode_field(cfg, what));

  const Eigen::Index n = p0.size();
  RunRecord rec;
  rec.columns = {"step", "t"};
  for (Eigen::Index i = 0; i < n; ++i) rec.columns.push_back("q_" + std::to_string(i));
  rec.columns.insert(rec.columns.end(), {"objective", "kkt_stationarity", "kkt_feasibility"});
  json methods = json::array();
  double worst_st = 0.0, worst_fe = 0.0;
  for (size_t k = 0; k < path.size(); ++k) {
    std::vector<double> row = {static_cast<double>(k), sched.times[k]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(path[k].state[i]);
    row.insert(row.end(), {path[k].objective, path[k].kkt_stationarity, path[k].kkt_feasibility});
    rec.rows.push_back(std::move(row));
    methods.push_back(path[k].method);
    worst_st = std::max(worst_st, path[k].kkt_stationarity);
    worst_fe = std::max(worst_fe, path[k].kkt_feasibility);
  }
  rec.residuals["max_kkt_stationarity"] = worst_st;
  rec.residuals["max_kkt_feasibility"] = worst_fe;
  rec.outputs["methods"] = methods;
  return rec;
}

// ---------------------------------------------------------------------------
// trajectory-quantum

json trajectory_quantum_template() {
  json t;
  t["experiment"] = "trajectory-quantum";
  t["gamma"] = 1.0;
  t["mode"] = "chained";
  t["prior"] = matrix_to_json(0.5 * CMat::Identity(2, 2));
  json sched;
  sched["times"] = json::array({0.0, 1.0, 2.0});
  json steps = json::array();
  steps.push_back(json::object());
  {
    json cs;
    cs["moments"] = json::array();
    json m;
    m["a"] = matrix_to_json(qstate::pauli_z());
    m["c"] = 0.4;
    cs["moments"].push_back(m);
    cs["trace"] = 1.0;
    steps.push_back(cs);
  }
  {
    json cs;
    cs["moments"] = json::array();
    json m;
    m["a"] = matrix_to_json(qstate::pauli_x());
    m["c"] = 0.3;
    cs["moments"].push_back(m);
    cs["trace"] = 1.0;
    steps.push_back(cs);
  }
  sched["constraints"] = steps;
  t["schedule"] = sched;
  return t;
}

RunRecord run_trajectory_quantum(const json& cfg) {
  const std::string what = "trajectory-quantum";
  DensityOperator rho0(cmat_from_json(need(cfg, "prior", what), what + ": prior"));
  double gamma = num_field(cfg, "gamma", what);
  const json& sj = need(cfg, "schedule", what);

  qproj::QuantumSchedule sched;
  Vec times = vec_from_json(need(sj, "times", what), what + ": times");
  sched.times.assign(times.data(), times.data() + times.size());
  const json& csj = need(sj, "constraints", what);
  if (!csj.is_array()) throw std::invalid_argument(what + ": \"constraints\" must be an array");
  for (const json& c : csj) sched.constraints.push_back(quantum_constraints_from_json(c, what));
  if (sj.contains("penalties")) {
    for (const json& f : sj.at("penalties"))
      sched.penalties.push_back(quantum_penalty_from_json(f, what));
  } else {
    sched.penalties.assign(sched.times.size(), qproj::QuantumPenalty::none());
  }

  auto path = qproj::q_trajectory(rho0, gamma, sched, mode_field(cfg, what));

  const Eigen::Index n = rho0.dimension();
  RunRecord rec;
  rec.columns = {"step", "t"};
  matrix_columns(rec.columns, "rho", n);
  rec.columns.insert(rec.columns.end(), {"objective", "kkt_stationarity", "kkt_feasibility"});
  json methods = json::array();
  double worst_st = 0.0, worst_fe = 0.0;
  for (size_t k = 0; k < path.size(); ++k) {
    std::vector<double> row = {static_cast<double>(k), sched.times[k]};
    matrix_values(row, path[k].state.matrix());
    row.insert(row.end(), {path[k].objective, path[k].kkt_stationarity, path[k].kkt_feasibility});
    rec.rows.push_back(std::move(row));
    methods.push_back(path[k].method);
    worst_st = std::max(worst_st, path[k].kkt_stationarity);
    worst_fe = std::max(worst_fe, path[k].kkt_feasibility);
  }
  rec.residuals["max_kkt_stationarity"] = worst_st;
  rec.residuals["max_kkt_feasibility"] = worst_fe;
  rec.outputs["methods"] = methods;
  return rec;
}

// ---------------------------------------------------------------------------
// cocycle-limit

json cocycle_limit_template() {
  json t;
  t["experiment"] = "cocycle-limit";
  t["seed"] = 5;
  t["dim"] = 2;
  t["instances"] = 4;
  t["steps"] = json::array({0.2, 0.1, 0.05, 0.025, 0.0125});
  return t;
}

RunRecord run_cocycle_limit(const json& cfg) {
  const std::string what = "cocycle-limit";
  Vec steps_v = vec_from_json(need(cfg, "steps", what), what + ": steps");
  std::vector<double> steps(steps_v.data(), steps_v.data() + steps_v.size());

  std::vector<std::pair<CMat, CMat>> insts;
  if (cfg.contains("omega") || cfg.contains("phi")) {
    insts.emplace_back(cmat_from_json(need(cfg, "omega", what), what + ": omega"),
                       cmat_from_json(need(cfg, "phi", what), what + ": phi"));
  } else {
    Eigen::Index dim = int_field(cfg, "dim", what, 2, 8);
    long long instances = int_field(cfg, "instances", what, 1, 1000);
    Draw d(seed_field(cfg, what));
    for (long long k = 0; k < instances; ++k)
      insts.emplace_back(d.faithful_density(dim), d.faithful_density(dim));
  }

  RunRecord rec;
  rec.columns = {"step", "t", "estimate", "exact", "abs_error"};
  json pairs = json::array();
  double worst = 0.0;
  for (size_t k = 0; k < insts.size(); ++k) {
    DensityOperator om(insts[k].first), ph(insts[k].second);
    double exact = qstate::q_d_gamma(ph, om, 1.0);
    for (double t : steps) {
      CMat u = qstate::connes_cocycle(om, ph, t);
      double raw = -((ph.matrix() * u).trace().imag()) / t;
      rec.rows.push_back({static_cast<double>(k), t, raw, exact, std::abs(raw - exact)});
    }
    double lim = qstate::petz_limit_entropy(om, ph, steps);
    worst = std::max(worst, std::abs(lim - exact));
    rec.rows.push_back({static_cast<double>(k), 0.0, lim, exact, std::abs(lim - exact)});
    json pair;
    pair["omega"] = matrix_to_json(insts[k].first);
    pair["phi"] = matrix_to_json(insts[k].second);
    pairs.push_back(std::move(pair));
  }
  rec.residuals["max_limit_error"] = worst;
  rec.outputs["pairs"] = pairs;
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// registry

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> reg = {
      {"divergence-sweep", "gamma-deviation values and duality defects over random pairs",
       divergence_sweep_template, run_divergence_sweep},
      {"metric-extract", "finite-difference metric at a base point against the closed form",
       metric_extract_template, run_metric_extract},
      {"dice", "maximum-entropy die weights under a mean constraint", dice_template, run_dice},
      {"bayes-recovery", "conditioning as entropic projection against the direct posterior",
       bayes_recovery_template, run_bayes_recovery},
      {"gibbs-qubit", "qubit projection under a magnetization constraint", gibbs_qubit_template,
       run_gibbs_qubit},
      {"luders", "entropic updating against the projection postulate", luders_template,
       run_luders},
      {"trajectory-classical", "classical projection path along a constraint schedule",
       trajectory_classical_template, run_trajectory_classical},
      {"trajectory-quantum", "quantum projection path along a constraint schedule",
       trajectory_quantum_template, run_trajectory_quantum},
      {"cocycle-limit", "cocycle-derivative estimates against the relative entropy",
       cocycle_limit_template, run_cocycle_limit},
  };
  return reg;
}

const Experiment* find_experiment(const std::string& name) {
  for (const Experiment& e : experiments())
    if (e.name == name) return &e;
  return nullptr;
}

RunRecord run_qproject(const json& cfg) {
  const std::string what = "qproject";
  DensityOperator prior(cmat_from_json(need(cfg, "prior", what), what + ": prior"));
  double gamma = num_field(cfg, "gamma", what);
  qproj::QuantumConstraintSet cs =
      quantum_constraints_from_json(need(cfg, "constraints", what), what);
  qproj::QuantumPenalty f = cfg.contains("penalty")
                                ? quantum_penalty_from_json(cfg.at("penalty"), what)
                                : qproj::QuantumPenalty::none();

  qproj::QuantumProjectionResult r =
      cfg.contains("start")
          ? qproj::q_project(prior, gamma, cs, f,
                             cmat_from_json(cfg.at("start"), what + ": start"))
          : qproj::q_project(prior, gamma, cs, f);

  const Eigen::Index n = prior.dimension();
  RunRecord rec;
  rec.columns = {"step", "t"};
  matrix_columns(rec.columns, "rho", n);
  rec.columns.insert(rec.columns.end(),
                     {"objective", "kkt_stationarity", "kkt_feasibility"});
  std::vector<double> row = {0.0, 0.0};
  matrix_values(row, r.state.matrix());
  row.insert(row.end(), {r.objective, r.kkt_stationarity, r.kkt_feasibility});
  rec.rows.push_back(std::move(row));
  rec.residuals["kkt_stationarity"] = r.kkt_stationarity;
  rec.residuals["kkt_feasibility"] = r.kkt_feasibility;
  rec.outputs["state"] = matrix_to_json(r.state.matrix());
  rec.outputs["eigenvalues"] = vec_to_json(r.state.eigenvalues());
  rec.outputs["objective"] = r.objective;
  rec.outputs["kkt_stationarity"] = r.kkt_stationarity;
  rec.outputs["kkt_feasibility"] = r.kkt_feasibility;
  rec.outputs["iterations"] = r.iterations;
  rec.outputs["multipliers"] = vec_to_json(r.multipliers);
  rec.outputs["method"] = r.method;
  return rec;
}

}  // namespace infodyn::cli
