#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace infodyn::cli {

using json = nlohmann::json;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

// Matrices travel as {"n": side, "entries": [[re, im], ...]}, row-major.
json matrix_to_json(const CMat& m);
CMat cmat_from_json(const json& j, const std::string& what);
Mat rmat_from_json(const json& j, const std::string& what);  // imaginary parts must vanish

// Plain number arrays.
Vec vec_from_json(const json& j, const std::string& what);
json vec_to_json(const Vec& v);

// Shortest round-trip decimal form; the CSV determinism contract rests on it.
std::string number_to_string(double v);

// Header line plus one line per row, comma separated, '\n' terminated.
std::string render_csv(const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows);

// FNV-1a 64-bit over the bytes, as "fnv1a64:" + 16 hex digits.
std::string digest(const std::string& bytes);

// Write through a sibling temp file and an atomic rename.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace infodyn::cli
