#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgauge/core.hpp"
#include "qgauge/evolution.hpp"
#include "qgauge/bundle.hpp"

// Wire formats: the matrix JSON encoding
// {"rows": r, "cols": c, "data": [[re, im], ...]} (row-major, doubles with 17
// significant digits) and the trajectory/lift CSV dumps.

namespace qgauge {

struct serialization_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string matrix_to_json(const Matrix& m) {
  std::string out = "{\"rows\": " + std::to_string(m.rows()) +
                    ", \"cols\": " + std::to_string(m.cols()) + ", \"data\": [";
  bool first = true;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!first) out += ", ";
      first = false;
      out += "[" + format_double(m(i, j).real()) + ", " + format_double(m(i, j).imag()) + "]";
    }
  }
  out += "]}";
  return out;
}

inline std::string matrix_to_json(const RealMatrix& m) {
  return matrix_to_json(Matrix(m.cast<Complex>()));
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw serialization_error(path + ": expected a matrix object");
  for (const auto& [key, value] : j.items())
    if (key != "rows" && key != "cols" && key != "data")
      throw serialization_error(path + "." + key + ": unknown field");
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw serialization_error(path + ": matrix needs rows, cols, data");
  if (!j["rows"].is_number_integer() || !j["cols"].is_number_integer())
    throw serialization_error(path + ": rows/cols must be integers");
  const Eigen::Index rows = j["rows"].get<Eigen::Index>();
  const Eigen::Index cols = j["cols"].get<Eigen::Index>();
  if (rows < 1 || cols < 1) throw serialization_error(path + ": rows/cols must be positive");
  const auto& data = j["data"];
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw serialization_error(path + ".data: expected " + std::to_string(rows * cols) +
                              " [re, im] pairs");
  Matrix m(rows, cols);
  for (Eigen::Index idx = 0; idx < rows * cols; ++idx) {
    const auto& entry = data[static_cast<std::size_t>(idx)];
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
      throw serialization_error(path + ".data[" + std::to_string(idx) +
                                "]: expected an [re, im] number pair");
    double re = entry[0].get<double>();
    double im = entry[1].get<double>();
    if (!std::isfinite(re) || !std::isfinite(im))
      throw serialization_error(path + ".data[" + std::to_string(idx) + "]: non-finite entry");
    m(idx / cols, idx % cols) = Complex(re, im);
  }
  return m;
}

inline std::string real_array_to_json(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out + "]";
}

// Trajectory CSV: t, then dim^2 re_ij/im_ij columns row-major, LF endings.
inline void write_trajectory_csv(const StateTrajectory& traj, std::ostream& os) {
  const Eigen::Index d = traj.states.empty() ? 0 : traj.states.front().dim();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      os << ",re_" << i << j << ",im_" << i << j;
  os << "\n";
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    os << format_double(traj.times[s]);
    const Matrix& m = traj.states[s].matrix();
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        os << "," << format_double(m(i, j).real()) << "," << format_double(m(i, j).imag());
    os << "\n";
  }
}

// Lift CSV mirrors the trajectory CSV with 2 * dim * k entry columns.
inline void write_lift_csv(const std::vector<Purification>& lift,
                           const std::vector<double>& times, std::ostream& os) {
  const Eigen::Index d = lift.empty() ? 0 : lift.front().dim();
  const Eigen::Index k = lift.empty() ? 0 : lift.front().k();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      os << ",re_psi_" << i << j << ",im_psi_" << i << j;
  os << "\n";
  for (std::size_t s = 0; s < lift.size(); ++s) {
    os << format_double(times[s]);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        os << "," << format_double(lift[s].psi(i, j).real()) << ","
           << format_double(lift[s].psi(i, j).imag());
    os << "\n";
  }
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qgauge
