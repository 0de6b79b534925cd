#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "isingbound/model.hpp"
#include "isingbound/rounding.hpp"
#include "isingbound/solver.hpp"
#include "isingbound/subsets.hpp"

// JSON wire formats.  ordered_json keeps keys in the documented order so
// identical runs produce byte-identical files.

namespace isingbound {

using ordered_json = nlohmann::ordered_json;

// Raised for unreadable/unwritable paths and malformed file content; the CLI
// maps it to its I/O exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// {"n": int, "couplings": [[i, j, value], ...]} with i < j per entry.
inline ordered_json model_to_json(const IsingModel& m) {
  ordered_json j;
  j["n"] = m.n();
  auto& list = j["couplings"] = ordered_json::array();
  for (const auto& [a, b, v] : m.coupling_list())
    list.push_back(ordered_json::array({a, b, v}));
  return j;
}

inline IsingModel model_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("couplings"))
    throw IoError("model json: expected object with n and couplings");
  if (!j["n"].is_number_integer())
    throw IoError("model json: n must be an integer");
  const int n = j["n"].get<int>();
  if (n < 1) throw IoError("model json: n must be >= 1");
  if (!j["couplings"].is_array())
    throw IoError("model json: couplings must be an array");
  IsingModel m(n);
  for (const auto& e : j["couplings"]) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number())
      throw IoError("model json: coupling entries must be [i, j, value]");
    const int a = e[0].get<int>();
    const int b = e[1].get<int>();
    const double v = e[2].get<double>();
    if (a < 0 || b >= n || a >= b)
      throw IoError("model json: coupling indices must satisfy 0 <= i < j < n");
    if (!std::isfinite(v)) throw IoError("model json: coupling value not finite");
    if (m.coupling(a, b) != 0.0)
      throw IoError("model json: duplicate coupling entry");
    m.set_coupling(a, b, v);
  }
  return m;
}

inline ordered_json certificate_to_json(const BoundCertificate& cert) {
  ordered_json j;
  j["upper_bound"] = cert.upper_bound;
  j["converged"] = cert.converged;
  j["iterations"] = cert.iterations;
  auto& trace = j["trace"] = ordered_json::array();
  for (const auto& step : cert.trace) {
    ordered_json row;
    row["master"] = step.master;
    row["surrogate"] = step.surrogate;
    row["seed"] = vertices_of(step.seed);
    trace.push_back(std::move(row));
  }
  return j;
}

inline ordered_json report_to_json(const BoundReport& rep) {
  ordered_json j;
  j["lower"] = rep.lower;
  j["upper"] = rep.upper;
  j["gap"] = rep.gap;
  if (rep.guarantee)
    j["guarantee"] = *rep.guarantee;
  else
    j["guarantee"] = nullptr;  // undefined density or seedless run
  if (rep.delta)
    j["delta"] = *rep.delta;
  else
    j["delta"] = nullptr;
  j["j_total"] = rep.j_total;
  j["seed_set"] = vertices_of(rep.seed_set);
  j["solver"] = certificate_to_json(rep.solver);
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

inline void write_model(const std::string& path, const IsingModel& m) {
  write_text_file(path, model_to_json(m).dump(2) + "\n");
}

inline IsingModel read_model(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace isingbound
