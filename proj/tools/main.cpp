#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "infodyn/errors.hpp"

namespace fs = std::filesystem;

namespace infodyn::cli {
namespace {

// exit codes: 0 success, 1 config error, 2 infeasible, 3 non-convergence
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return 3;
  } catch (const DegenerateConditioningError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  json cfg = json::parse(ss.str());
  if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object: " + path);
  return cfg;
}

void write_results(const fs::path& dir, const std::string& name, const json& ident,
                   const RunRecord& rec, double wall_ms) {
  json result;
  result["experiment"] = name;
  result["input_digest"] = digest(ident.dump());
  result["config"] = ident;
  result["columns"] = rec.columns;
  result["rows"] = rec.rows;
  result["residuals"] = rec.residuals;
  result["outputs"] = rec.outputs;
  result["wall_time_ms"] = wall_ms;
  fs::create_directories(dir);
  write_atomic(dir / "result.json", result.dump(2) + "\n");
  write_atomic(dir / "result.csv", render_csv(rec.columns, rec.rows));
}

int do_list() {
  for (const Experiment& e : experiments())
    std::cout << std::left << std::setw(22) << e.name << e.description << '\n';
  return 0;
}

int do_template(const std::string& name) {
  const Experiment* exp = find_experiment(name);
  if (!exp) throw std::invalid_argument("unknown experiment \"" + name + "\"");
  std::cout << exp->config_template().dump(2) << '\n';
  return 0;
}

int do_run(const std::string& path, const std::optional<std::uint64_t>& seed,
           const std::string& mode, std::string out_dir) {
  json cfg = load_config(path);
  const json& nj = cfg.contains("experiment") ? cfg.at("experiment") : json();
  if (!nj.is_string())
    throw std::invalid_argument("config must name an \"experiment\": " + path);
  std::string name = nj.get<std::string>();
  const Experiment* exp = find_experiment(name);
  if (!exp) throw std::invalid_argument("unknown experiment \"" + name + "\"");

  if (seed) cfg["seed"] = *seed;
  if (!mode.empty()) cfg["mode"] = mode;
  if (out_dir.empty()) out_dir = cfg.value("out", std::string("."));
  json ident = cfg;
  ident.erase("out");

  auto t0 = std::chrono::steady_clock::now();
  RunRecord rec = exp->run(cfg);
  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  write_results(fs::path(out_dir), name, ident, rec, wall_ms);
  std::cout << "wrote " << (fs::path(out_dir) / "result.json").string() << " and result.csv\n";
  return 0;
}

int do_qproject(const std::string& path, std::string out_dir) {
  json cfg = load_config(path);
  if (out_dir.empty()) out_dir = cfg.value("out", std::string());
  json ident = cfg;
  ident.erase("out");

  auto t0 = std::chrono::steady_clock::now();
  RunRecord rec = run_qproject(cfg);
  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::cout << rec.outputs.dump(2) << '\n';
  if (!out_dir.empty()) write_results(fs::path(out_dir), "qproject", ident, rec, wall_ms);
  return 0;
}

}  // namespace
}  // namespace infodyn::cli

int main(int argc, char** argv) {
  using namespace infodyn::cli;

  CLI::App app{"entropic inference toolkit: deviations, geometry extraction, projections"};
  app.require_subcommand(0, 1);
  std::string template_name;
  app.add_option("--template", template_name,
                 "print a ready-to-run config for the named experiment");

  auto* run_cmd = app.add_subcommand("run", "execute a config and write result.json/result.csv");
  std::string config_path, out_dir, mode;
  std::uint64_t seed = 0;
  run_cmd->add_option("config", config_path, "path to a config JSON")->required();
  auto* out_opt = run_cmd->add_option("--out", out_dir, "output directory (default \".\")");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the config rng seed");
  auto* mode_opt = run_cmd->add_option("--mode", mode, "override the trajectory mode")
                       ->check(CLI::IsMember({"literal", "chained"}));

  auto* list_cmd = app.add_subcommand("list", "list the canned experiments");

  auto* qp_cmd = app.add_subcommand("qproject", "project a density operator onto a constraint set");
  std::string qp_config, qp_out;
  qp_cmd->add_option("config", qp_config, "path to a projection config JSON")->required();
  auto* qp_out_opt = qp_cmd->add_option("--out", qp_out, "also write result files here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  return guarded([&]() -> int {
    if (!template_name.empty()) {
      if (run_cmd->parsed() || list_cmd->parsed() || qp_cmd->parsed())
        throw std::invalid_argument("--template cannot be combined with a subcommand");
      return do_template(template_name);
    }
    if (run_cmd->parsed())
      return do_run(config_path,
                    seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                    mode_opt->count() ? mode : std::string(),
                    out_opt->count() ? out_dir : std::string());
    if (qp_cmd->parsed())
      return do_qproject(qp_config, qp_out_opt->count() ? qp_out : std::string());
    return do_list();
  });
}
