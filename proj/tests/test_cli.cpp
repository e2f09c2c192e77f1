#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Proc {
  int code = -1;
  std::string out;
};

Proc run_cli(const std::string& args) {
  std::string cmd = std::string(INFODYN_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  Proc r;
  char buf[4096];
  size_t got;
  while ((got = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, got);
  int st = ::pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() /
               ("infodyn_cli_" + std::to_string(static_cast<long>(::getpid())) + "_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  REQUIRE(f.good());
  f << s;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  double at(size_t row, const std::string& col) const {
    auto it = std::find(header.begin(), header.end(), col);
    REQUIRE(it != header.end());
    return rows.at(row).at(static_cast<size_t>(it - header.begin()));
  }
};

Csv parse_csv(const std::string& text) {
  Csv out;
  std::istringstream lines(text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    if (first) {
      out.header = cells;
      first = false;
    } else {
      std::vector<double> row;
      for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

const std::vector<std::string>& canned_names() {
  static const std::vector<std::string> names = {
      "divergence-sweep",     "metric-extract",    "dice",
      "bayes-recovery",       "gibbs-qubit",       "luders",
      "trajectory-classical", "trajectory-quantum", "cocycle-limit"};
  return names;
}

}  // namespace

TEST_CASE("list prints every canned experiment") {
  Proc r = run_cli("list");
  CHECK(r.code == 0);
  for (const auto& name : canned_names()) CHECK(r.out.find(name) != std::string::npos);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') >= 9);

  Proc bare = run_cli("");
  CHECK(bare.code == 0);
  CHECK(bare.out == r.out);
}

TEST_CASE("templates round-trip through run") {
  fs::path dir = fresh_dir("roundtrip");
  for (const auto& name : canned_names()) {
    CAPTURE(name);
    Proc t = run_cli("--template " + name);
    REQUIRE(t.code == 0);
    json cfg = json::parse(t.out);
    CHECK(cfg.at("experiment").get<std::string>() == name);

    fs::path cfgp = dir / (name + ".json");
    spit(cfgp, t.out);
    fs::path out = dir / name;
    Proc r = run_cli("run \"" + cfgp.string() + "\" --out \"" + out.string() + "\"");
    CHECK(r.code == 0);
    REQUIRE(fs::exists(out / "result.json"));
    REQUIRE(fs::exists(out / "result.csv"));

    json res = json::parse(slurp(out / "result.json"));
    CHECK(res.at("experiment").get<std::string>() == name);
    CHECK(res.at("rows").size() >= 1);
    CHECK(res.at("input_digest").get<std::string>().rfind("fnv1a64:", 0) == 0);
    CHECK(res.contains("wall_time_ms"));
    CHECK(res.at("columns").size() == res.at("rows").at(0).size());
  }
}

TEST_CASE("a fixed seed reproduces the CSV byte for byte") {
  fs::path dir = fresh_dir("determinism");
  for (const auto& name : canned_names()) {
    CAPTURE(name);
    Proc t = run_cli("--template " + name);
    REQUIRE(t.code == 0);
    fs::path cfgp = dir / (name + ".json");
    spit(cfgp, t.out);

    fs::path o1 = dir / (name + "_1"), o2 = dir / (name + "_2");
    REQUIRE(run_cli("run \"" + cfgp.string() + "\" --out \"" + o1.string() + "\"").code == 0);
    REQUIRE(run_cli("run \"" + cfgp.string() + "\" --out \"" + o2.string() + "\"").code == 0);
    CHECK(slurp(o1 / "result.csv") == slurp(o2 / "result.csv"));

    // result.json agrees up to the timing field
    json a = json::parse(slurp(o1 / "result.json"));
    json b = json::parse(slurp(o2 / "result.json"));
    a.erase("wall_time_ms");
    b.erase("wall_time_ms");
    CHECK(a == b);
  }
}

TEST_CASE("seed and mode flags reach the run") {
  fs::path dir = fresh_dir("flags");
  Proc t = run_cli("--template divergence-sweep");
  REQUIRE(t.code == 0);
  fs::path sweep = dir / "sweep.json";
  spit(sweep, t.out);
  fs::path s1 = dir / "s1", s2 = dir / "s2";
  REQUIRE(run_cli("run \"" + sweep.string() + "\" --out \"" + s1.string() + "\" --seed 42").code == 0);
  REQUIRE(run_cli("run \"" + sweep.string() + "\" --out \"" + s2.string() + "\" --seed 43").code == 0);
  CHECK(slurp(s1 / "result.csv") != slurp(s2 / "result.csv"));

  Proc tq = run_cli("--template trajectory-quantum");
  REQUIRE(tq.code == 0);
  fs::path traj = dir / "traj.json";
  spit(traj, tq.out);
  fs::path lit = dir / "lit", chain = dir / "chain";
  REQUIRE(run_cli("run \"" + traj.string() + "\" --out \"" + lit.string() + "\" --mode literal").code == 0);
  REQUIRE(run_cli("run \"" + traj.string() + "\" --out \"" + chain.string() + "\" --mode chained").code == 0);
  Csv lc = parse_csv(slurp(lit / "result.csv"));
  Csv cc = parse_csv(slurp(chain / "result.csv"));
  // final step constrains the x moment only: the literal run forgets the
  // magnetization step, the chained run keeps it
  CHECK(lc.at(2, "rho_re_0_0") == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(cc.at(2, "rho_re_0_0") > 0.55);
}

TEST_CASE("exit codes separate config errors, infeasibility, and success") {
  fs::path dir = fresh_dir("exitcodes");

  fs::path bad = dir / "bad.json";
  spit(bad, "{ not json");
  fs::path bad_out = dir / "bad_out";
  CHECK(run_cli("run \"" + bad.string() + "\" --out \"" + bad_out.string() + "\"").code == 1);
  CHECK(!fs::exists(bad_out / "result.json"));
  CHECK(!fs::exists(bad_out / "result.csv"));

  fs::path unknown = dir / "unknown.json";
  spit(unknown, R"({"experiment":"frobnicate"})");
  CHECK(run_cli("run \"" + unknown.string() + "\"").code == 1);

  CHECK(run_cli("run \"" + (dir / "missing.json").string() + "\"").code == 1);
  CHECK(run_cli("--template frobnicate").code == 1);

  Proc t = run_cli("--template dice");
  REQUIRE(t.code == 0);
  json cfg = json::parse(t.out);
  cfg["target_mean"] = 7.0;  // beyond the largest face value
  fs::path imp = dir / "impossible.json";
  spit(imp, cfg.dump());
  fs::path imp_out = dir / "imp_out";
  CHECK(run_cli("run \"" + imp.string() + "\" --out \"" + imp_out.string() + "\"").code == 2);
  CHECK(!fs::exists(imp_out / "result.json"));

  fs::path ok = dir / "dice.json";
  spit(ok, t.out);
  CHECK(run_cli("run \"" + ok.string() + "\" --out \"" + (dir / "ok_out").string() + "\"").code == 0);
}

TEST_CASE("dice emits Gibbs weights with a tiny mean residual") {
  fs::path dir = fresh_dir("dice");
  Proc t = run_cli("--template dice");
  REQUIRE(t.code == 0);
  spit(dir / "dice.json", t.out);
  REQUIRE(run_cli("run \"" + (dir / "dice.json").string() + "\" --out \"" + dir.string() + "\"").code == 0);
  Csv csv = parse_csv(slurp(dir / "result.csv"));
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.at(0, "mean_residual") < 1e-10);
  CHECK(csv.at(0, "kkt_stationarity") < 1e-9);
  double total = 0.0;
  for (int i = 0; i < 6; ++i) total += csv.at(0, "q_" + std::to_string(i));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  for (int i = 0; i + 1 < 6; ++i)  // mean above the midpoint tilts the weights upward
    CHECK(csv.at(0, "q_" + std::to_string(i)) < csv.at(0, "q_" + std::to_string(i + 1)));
}

TEST_CASE("bayes-recovery posterior columns equal the direct posterior") {
  fs::path dir = fresh_dir("bayes");
  Proc t = run_cli("--template bayes-recovery");
  REQUIRE(t.code == 0);
  spit(dir / "cfg.json", t.out);
  REQUIRE(run_cli("run \"" + (dir / "cfg.json").string() + "\" --out \"" + dir.string() + "\"").code == 0);
  Csv csv = parse_csv(slurp(dir / "result.csv"));
  REQUIRE(csv.rows.size() == 1);
  for (int i = 0; i < 3; ++i) {
    double gap = std::abs(csv.at(0, "posterior_" + std::to_string(i)) -
                          csv.at(0, "oracle_" + std::to_string(i)));
    CHECK(gap < 1e-12);
  }
  CHECK(csv.at(0, "max_abs_gap") < 1e-12);
}

TEST_CASE("gibbs-qubit lands on the closed form") {
  fs::path dir = fresh_dir("gibbs");
  Proc t = run_cli("--template gibbs-qubit");
  REQUIRE(t.code == 0);
  spit(dir / "cfg.json", t.out);
  REQUIRE(run_cli("run \"" + (dir / "cfg.json").string() + "\" --out \"" + dir.string() + "\"").code == 0);
  Csv csv = parse_csv(slurp(dir / "result.csv"));
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.at(0, "rho_re_0_0") == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(csv.at(0, "rho_re_1_1") == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(std::abs(csv.at(0, "rho_re_0_1")) < 1e-8);
  CHECK(std::abs(csv.at(0, "rho_im_0_1")) < 1e-8);
  CHECK(csv.at(0, "kkt_stationarity") < 1e-8);
  CHECK(csv.at(0, "moment_residual") < 1e-8);
}

TEST_CASE("qproject reports a certified projection") {
  fs::path dir = fresh_dir("qproject");
  json cfg;
  cfg["gamma"] = 1.0;
  cfg["prior"] = json::parse(R"({"n":2,"entries":[[0.5,0],[0,0],[0,0],[0.5,0]]})");
  cfg["constraints"] = json::parse(
      R"({"moments":[{"a":{"n":2,"entries":[[1,0],[0,0],[0,0],[-1,0]]},"c":0.5}],"trace":1.0})");
  spit(dir / "cfg.json", cfg.dump());

  Proc r = run_cli("qproject \"" + (dir / "cfg.json").string() + "\" --out \"" + dir.string() + "\"");
  REQUIRE(r.code == 0);
  json rep = json::parse(r.out);
  CHECK(rep.at("method").get<std::string>() == "dual-newton");
  CHECK(rep.at("kkt_stationarity").get<double>() < 1e-8);
  CHECK(rep.at("kkt_feasibility").get<double>() < 1e-8);
  CHECK(rep.at("state").at("entries").at(0).at(0).get<double>() ==
        doctest::Approx(0.75).epsilon(1e-6));

  REQUIRE(fs::exists(dir / "result.json"));
  json stored = json::parse(slurp(dir / "result.json"));
  CHECK(stored.at("outputs").at("objective") == rep.at("objective"));

  // infeasible target through the same subcommand
  cfg["constraints"]["moments"][0]["c"] = 1.5;
  spit(dir / "bad.json", cfg.dump());
  CHECK(run_cli("qproject \"" + (dir / "bad.json").string() + "\"").code == 2);
}
