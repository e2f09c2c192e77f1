#include "matjson.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace infodyn::cli {

json matrix_to_json(const CMat& m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      entries.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
  json out;
  out["n"] = m.rows();
  out["entries"] = std::move(entries);
  return out;
}

CMat cmat_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("n") || !j.contains("entries"))
    throw std::invalid_argument(what + ": a matrix needs \"n\" and \"entries\"");
  const json& nj = j.at("n");
  if (!nj.is_number_integer() || nj.get<long long>() < 1)
    throw std::invalid_argument(what + ": \"n\" must be a positive integer");
  const Eigen::Index n = nj.get<Eigen::Index>();
  const json& entries = j.at("entries");
  if (!entries.is_array() || entries.size() != static_cast<size_t>(n * n))
    throw std::invalid_argument(what + ": \"entries\" must hold n*n [re, im] pairs");
  CMat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index jj = 0; jj < n; ++jj) {
      const json& e = entries.at(static_cast<size_t>(i * n + jj));
      if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() || !e.at(1).is_number())
        throw std::invalid_argument(what + ": each matrix entry must be an [re, im] number pair");
      m(i, jj) = std::complex<double>(e.at(0).get<double>(), e.at(1).get<double>());
    }
  return m;
}

Mat rmat_from_json(const json& j, const std::string& what) {
  CMat m = cmat_from_json(j, what);
  if (m.imag().cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument(what + ": matrix must be real");
  return m.real();
}

Vec vec_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(what + ": expected a non-empty number array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j.at(i).is_number())
      throw std::invalid_argument(what + ": expected a non-empty number array");
    v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  }
  return v;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::string number_to_string(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string render_csv(const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::logic_error("render_csv: row width does not match the header");
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += number_to_string(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f.good()) throw std::runtime_error("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace infodyn::cli
