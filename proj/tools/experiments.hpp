#pragma once

#include <string>
#include <vector>

#include "matjson.hpp"

namespace infodyn::cli {

// Flat numeric table plus free-form summaries; the CSV body is exactly
// columns x rows, everything else lands in result.json.
struct RunRecord {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json residuals = json::object();
  json outputs = json::object();
};

struct Experiment {
  std::string name;
  std::string description;
  json (*config_template)();
  RunRecord (*run)(const json& cfg);
};

// Registry of canned experiments, in stable listing order.
const std::vector<Experiment>& experiments();
const Experiment* find_experiment(const std::string& name);

// The qproject subcommand body: one projection, reported as a single-row
// record whose outputs carry the full result payload.
RunRecord run_qproject(const json& cfg);

}  // namespace infodyn::cli
