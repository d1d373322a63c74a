#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qgauge/bundle.hpp"
#include "qgauge/core.hpp"
#include "qgauge/dynamic_distance.hpp"
#include "qgauge/evolution.hpp"
#include "qgauge/serialize.hpp"
#include "qgauge/twin.hpp"

// Scenario-file front end: one JSON document per run, validated fail-fast
// (no outputs are written when validation fails), dispatched to the module
// named by "command". Exit-code contract: 0 success, 1 optimizer did not
// converge (result still written), 2 validation error, 3 IO failure.

namespace qgauge {

constexpr const char* kArtifactVersion = "0.1.0";

struct scenario_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::string command;
  nlohmann::json doc;
  std::string raw_text;
};

struct RunRecord {
  std::uint64_t scenario_digest = 0;
  std::string version = kArtifactVersion;
  double wall_time_s = 0.0;
  std::string result_json;  // payload, deterministic for a fixed scenario
  std::string result_path;
  int exit_code = 0;
};

namespace detail {

using nlohmann::json;

inline void expect_keys(const json& j, const std::string& path,
                        const std::vector<std::string>& allowed,
                        const std::vector<std::string>& required) {
  if (!j.is_object()) throw scenario_error(path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& a : allowed) known = known || key == a;
    if (!known) throw scenario_error(path + "." + key + ": unknown field");
  }
  for (const auto& r : required)
    if (!j.contains(r)) throw scenario_error(path + ": missing required field '" + r + "'");
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw scenario_error(path + ": expected a number");
  double x = j.get<double>();
  if (!std::isfinite(x)) throw scenario_error(path + ": non-finite number");
  return x;
}

inline std::int64_t get_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw scenario_error(path + ": expected an integer");
  return j.get<std::int64_t>();
}

inline int get_positive_int(const json& j, const std::string& path) {
  std::int64_t v = get_integer(j, path);
  if (v < 1) throw scenario_error(path + ": must be a positive integer");
  return static_cast<int>(v);
}

inline DensityOperator parse_density(const json& j, const std::string& path) {
  Matrix m;
  try {
    m = matrix_from_json(j, path);
  } catch (const serialization_error& err) {
    throw scenario_error(err.what());
  }
  try {
    return DensityOperator(std::move(m));
  } catch (const std::exception& err) {
    throw scenario_error(path + ": " + err.what());
  }
}

inline HamiltonianPath parse_path(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw scenario_error(path + ": expected a non-empty array of segments");
  HamiltonianPath out;
  for (std::size_t s = 0; s < j.size(); ++s) {
    std::string seg_path = path + "[" + std::to_string(s) + "]";
    expect_keys(j[s], seg_path, {"generator", "duration"}, {"generator", "duration"});
    double duration = get_number(j[s]["duration"], seg_path + ".duration");
    if (!(duration > 0.0)) throw scenario_error(seg_path + ".duration: must be positive");
    Matrix g;
    try {
      g = matrix_from_json(j[s]["generator"], seg_path + ".generator");
    } catch (const serialization_error& err) {
      throw scenario_error(err.what());
    }
    try {
      out.segments.push_back({HermitianOperator(std::move(g)), duration});
    } catch (const std::exception& err) {
      throw scenario_error(seg_path + ".generator: " + err.what());
    }
  }
  try {
    out.validate();
  } catch (const std::exception& err) {
    throw scenario_error(path + ": " + err.what());
  }
  return out;
}

inline RealMatrix parse_real_matrix(const json& j, const std::string& path) {
  Matrix m;
  try {
    m = matrix_from_json(j, path);
  } catch (const serialization_error& err) {
    throw scenario_error(err.what());
  }
  if (m.imag().cwiseAbs().maxCoeff() > 0.0)
    throw scenario_error(path + ": expected a real matrix (all imaginary parts zero)");
  return m.real();
}

inline void parse_output_block(const json& j, const std::string& path,
                               const std::vector<std::string>& optional_csv_keys) {
  std::vector<std::string> allowed = {"result"};
  for (const auto& k : optional_csv_keys) allowed.push_back(k);
  expect_keys(j, path, allowed, {"result"});
  for (const auto& [key, value] : j.items())
    if (!value.is_string() || value.get<std::string>().empty())
      throw scenario_error(path + "." + key + ": expected a non-empty path string");
}

inline OptimizerConfig parse_optimizer(const json& j, const std::string& path) {
  OptimizerConfig config;
  if (j.is_null()) return config;
  expect_keys(j, path,
              {"restarts", "seed", "max_iterations", "penalty_schedule", "convergence_tol",
               "endpoint_tol"},
              {});
  if (j.contains("restarts")) config.restarts = get_positive_int(j["restarts"], path + ".restarts");
  if (j.contains("seed"))
    config.seed = static_cast<std::uint64_t>(get_integer(j["seed"], path + ".seed"));
  if (j.contains("max_iterations"))
    config.max_iterations = get_positive_int(j["max_iterations"], path + ".max_iterations");
  if (j.contains("penalty_schedule")) {
    const auto& sched = j["penalty_schedule"];
    if (!sched.is_array() || sched.empty())
      throw scenario_error(path + ".penalty_schedule: expected a non-empty array");
    config.penalty_schedule.clear();
    for (std::size_t i = 0; i < sched.size(); ++i)
      config.penalty_schedule.push_back(
          get_number(sched[i], path + ".penalty_schedule[" + std::to_string(i) + "]"));
  }
  if (j.contains("convergence_tol"))
    config.convergence_tol = get_number(j["convergence_tol"], path + ".convergence_tol");
  if (j.contains("endpoint_tol"))
    config.endpoint_tol = get_number(j["endpoint_tol"], path + ".endpoint_tol");
  try {
    config.validate();
  } catch (const std::exception& err) {
    throw scenario_error(path + ": " + err.what());
  }
  return config;
}

// Full fail-fast validation of one command document; returns nothing, throws
// scenario_error naming the offending key path.
inline void validate_command(const json& doc) {
  const std::string command = doc["command"].get<std::string>();
  if (command == "evolve") {
    expect_keys(doc, "$", {"command", "rho0", "path", "samples_per_segment", "output"},
                {"command", "rho0", "path", "samples_per_segment", "output"});
    DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
    HamiltonianPath path = parse_path(doc["path"], "$.path");
    if (rho0.dim() != path.dim())
      throw scenario_error("$.path: generator dimension does not match $.rho0");
    if (get_positive_int(doc["samples_per_segment"], "$.samples_per_segment") < 2)
      throw scenario_error("$.samples_per_segment: must be >= 2");
    parse_output_block(doc["output"], "$.output", {"trajectory_csv"});
  } else if (command == "hdist") {
    expect_keys(doc, "$", {"command", "rho0", "path", "quadrature_points", "output"},
                {"command", "rho0", "path", "quadrature_points", "output"});
    DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
    HamiltonianPath path = parse_path(doc["path"], "$.path");
    if (rho0.dim() != path.dim())
      throw scenario_error("$.path: generator dimension does not match $.rho0");
    if (get_positive_int(doc["quadrature_points"], "$.quadrature_points") < 8)
      throw scenario_error("$.quadrature_points: must be >= 8");
    parse_output_block(doc["output"], "$.output", {});
  } else if (command == "dyndist") {
    expect_keys(doc, "$",
                {"command", "rho0", "rho1", "duration", "segments", "optimizer", "output"},
                {"command", "rho0", "rho1", "duration", "segments", "output"});
    DistanceProblem problem{parse_density(doc["rho0"], "$.rho0"),
                            parse_density(doc["rho1"], "$.rho1"),
                            get_number(doc["duration"], "$.duration"),
                            get_positive_int(doc["segments"], "$.segments")};
    try {
      problem.validate();
    } catch (const std::exception& err) {
      throw scenario_error(std::string("$: ") + err.what());
    }
    parse_optimizer(doc.contains("optimizer") ? doc["optimizer"] : json(), "$.optimizer");
    parse_output_block(doc["output"], "$.output", {});
  } else if (command == "lift") {
    expect_keys(doc, "$",
                {"command", "rho0", "path", "samples_per_segment", "steps_per_sample",
                 "grouping_tol", "output"},
                {"command", "rho0", "path", "samples_per_segment", "steps_per_sample", "output"});
    DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
    HamiltonianPath path = parse_path(doc["path"], "$.path");
    if (rho0.dim() != path.dim())
      throw scenario_error("$.path: generator dimension does not match $.rho0");
    if (get_positive_int(doc["samples_per_segment"], "$.samples_per_segment") < 2)
      throw scenario_error("$.samples_per_segment: must be >= 2");
    get_positive_int(doc["steps_per_sample"], "$.steps_per_sample");
    if (doc.contains("grouping_tol") && !(get_number(doc["grouping_tol"], "$.grouping_tol") > 0.0))
      throw scenario_error("$.grouping_tol: must be positive");
    parse_output_block(doc["output"], "$.output", {"lift_csv"});
  } else if (command == "gauge") {
    expect_keys(doc, "$", {"command", "rho0", "grouping_tol", "seed", "n_samples", "output"},
                {"command", "rho0", "seed", "n_samples", "output"});
    parse_density(doc["rho0"], "$.rho0");
    get_integer(doc["seed"], "$.seed");
    get_positive_int(doc["n_samples"], "$.n_samples");
    if (doc.contains("grouping_tol") && !(get_number(doc["grouping_tol"], "$.grouping_tol") > 0.0))
      throw scenario_error("$.grouping_tol: must be positive");
    parse_output_block(doc["output"], "$.output", {});
  } else if (command == "twin") {
    expect_keys(doc, "$",
                {"command", "d", "seed", "angle_scale", "generator", "n_samples", "output"},
                {"command", "d", "seed", "angle_scale", "output"});
    int d = get_positive_int(doc["d"], "$.d");
    if (d <= 1) throw scenario_error("$.d: theorem hypothesis requires d > 1");
    get_integer(doc["seed"], "$.seed");
    double angle = get_number(doc["angle_scale"], "$.angle_scale");
    if (angle < 0.0 || angle > M_PI)
      throw scenario_error("$.angle_scale: must lie in [0, pi]");
    if (doc.contains("generator")) {
      RealMatrix g = parse_real_matrix(doc["generator"], "$.generator");
      if (g.rows() != d) throw scenario_error("$.generator: dimension does not match $.d");
      try {
        LinearGenerator{g}.validate();
      } catch (const std::exception& err) {
        throw scenario_error(std::string("$.generator: ") + err.what());
      }
    }
    if (doc.contains("n_samples") && get_positive_int(doc["n_samples"], "$.n_samples") < 1000)
      throw scenario_error("$.n_samples: must be >= 1000");
    parse_output_block(doc["output"], "$.output", {});
  } else {
    throw scenario_error("$.command: unknown command '" + command + "'");
  }
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw scenario_error(std::string("$: malformed JSON: ") + err.what());
  }
  if (!doc.is_object()) throw scenario_error("$: expected a JSON object");
  if (!doc.contains("command") || !doc["command"].is_string())
    throw scenario_error("$.command: missing or not a string");
  detail::validate_command(doc);
  return Scenario{doc["command"].get<std::string>(), std::move(doc), text};
}

namespace detail {

inline std::string path_to_json(const HamiltonianPath& path) {
  std::string out = "[";
  for (std::size_t s = 0; s < path.segments.size(); ++s) {
    if (s) out += ", ";
    out += "{\"duration\": " + format_double(path.segments[s].duration) +
           ", \"generator\": " + matrix_to_json(path.segments[s].generator.matrix()) + "}";
  }
  return out + "]";
}

inline std::string run_evolve(const json& doc, std::string* csv_out) {
  DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
  HamiltonianPath path = parse_path(doc["path"], "$.path");
  int samples = get_positive_int(doc["samples_per_segment"], "$.samples_per_segment");
  StateTrajectory traj = evolve_von_neumann(rho0, path, samples);

  double drift = 0.0;
  const Spectrum& s0 = traj.states.front().spectrum();
  for (const auto& st : traj.states) {
    Spectrum s = st.spectrum();
    for (int i = 0; i < s.size(); ++i)
      drift = std::max(drift, std::abs(s.values[i] - s0.values[i]));
  }
  if (csv_out && doc["output"].contains("trajectory_csv")) {
    std::ostringstream os;
    write_trajectory_csv(traj, os);
    *csv_out = os.str();
  }
  return "{\"t_final\": " + format_double(traj.times.back()) +
         ", \"num_samples\": " + std::to_string(traj.times.size()) +
         ", \"max_eigenvalue_drift\": " + format_double(drift) +
         ", \"final_state\": " + matrix_to_json(traj.final_state().matrix()) + "}";
}

inline std::string run_hdist(const json& doc) {
  DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
  HamiltonianPath path = parse_path(doc["path"], "$.path");
  int points = get_positive_int(doc["quadrature_points"], "$.quadrature_points");
  return "{\"h_distance\": " + format_double(h_distance(rho0, path, points)) + "}";
}

inline std::string run_dyndist(const json& doc, std::optional<std::uint64_t> seed_override,
                               bool* converged) {
  DistanceProblem problem{parse_density(doc["rho0"], "$.rho0"),
                          parse_density(doc["rho1"], "$.rho1"),
                          get_number(doc["duration"], "$.duration"),
                          get_positive_int(doc["segments"], "$.segments")};
  OptimizerConfig config =
      parse_optimizer(doc.contains("optimizer") ? doc["optimizer"] : json(), "$.optimizer");
  if (seed_override) config.seed = *seed_override;
  DistanceResult result = dynamic_distance(problem, config);
  *converged = result.converged;
  return "{\"distance\": " + format_double(result.distance) +
         ", \"endpoint_defect\": " + format_double(result.endpoint_defect) +
         ", \"converged\": " + (result.converged ? std::string("true") : std::string("false")) +
         ", \"restart_index\": " + std::to_string(result.restart_index) +
         ", \"path\": " + path_to_json(result.best_path) + "}";
}

inline std::string run_lift(const json& doc, std::string* csv_out) {
  DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
  HamiltonianPath path = parse_path(doc["path"], "$.path");
  int samples = get_positive_int(doc["samples_per_segment"], "$.samples_per_segment");
  int steps = get_positive_int(doc["steps_per_sample"], "$.steps_per_sample");
  double grouping_tol = doc.contains("grouping_tol")
                            ? get_number(doc["grouping_tol"], "$.grouping_tol")
                            : kDefaultGroupingTol;

  StateTrajectory traj = evolve_von_neumann(rho0, path, samples);
  Purification psi0 = standard_purification(rho0, grouping_tol);
  std::vector<Purification> lift = horizontal_lift(traj, psi0, steps);

  double projection_error = 0.0;
  for (std::size_t s = 0; s < lift.size(); ++s)
    projection_error = std::max(
        projection_error, max_abs(lift[s].psi * lift[s].psi.adjoint() - traj.states[s].matrix()));
  double base_len = base_induced_length(traj, grouping_tol);
  double lift_len = lift_length(lift, traj);

  if (csv_out && doc["output"].contains("lift_csv")) {
    std::ostringstream os;
    write_lift_csv(lift, traj.times, os);
    *csv_out = os.str();
  }
  return "{\"base_length\": " + format_double(base_len) +
         ", \"lift_length\": " + format_double(lift_len) +
         ", \"length_gap\": " + format_double(std::abs(base_len - lift_len)) +
         ", \"max_projection_error\": " + format_double(projection_error) +
         ", \"sigma\": " + real_array_to_json(psi0.sigma.values) + "}";
}

inline std::string run_gauge(const json& doc, std::optional<std::uint64_t> seed_override) {
  DensityOperator rho0 = parse_density(doc["rho0"], "$.rho0");
  double grouping_tol = doc.contains("grouping_tol")
                            ? get_number(doc["grouping_tol"], "$.grouping_tol")
                            : kDefaultGroupingTol;
  std::uint64_t seed = seed_override
                           ? *seed_override
                           : static_cast<std::uint64_t>(get_integer(doc["seed"], "$.seed"));
  int n_samples = get_positive_int(doc["n_samples"], "$.n_samples");

  GaugeGroupStructure structure = gauge_group_factors(rho0, grouping_tol);
  double commutation_defect = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Matrix v = structure.sample(seed + static_cast<std::uint64_t>(s)).matrix();
    commutation_defect =
        std::max(commutation_defect, max_abs(v * rho0.matrix() - rho0.matrix() * v));
  }
  std::string factors = "[";
  for (std::size_t i = 0; i < structure.factor_dims.size(); ++i) {
    if (i) factors += ", ";
    factors += std::to_string(structure.factor_dims[i]);
  }
  factors += "]";
  return "{\"factor_dims\": " + factors +
         ", \"algebra_dim\": " + std::to_string(structure.algebra_dim) +
         ", \"sigma\": " + real_array_to_json(structure.sigma.values) +
         ", \"max_commutation_defect\": " + format_double(commutation_defect) + "}";
}

inline std::string run_twin(const json& doc, std::optional<std::uint64_t> seed_override) {
  int d = get_positive_int(doc["d"], "$.d");
  std::uint64_t seed = seed_override
                           ? *seed_override
                           : static_cast<std::uint64_t>(get_integer(doc["seed"], "$.seed"));
  double angle = get_number(doc["angle_scale"], "$.angle_scale");
  LinearGenerator gen{doc.contains("generator") ? parse_real_matrix(doc["generator"], "$.generator")
                                                : RealMatrix(RealMatrix::Identity(d, d))};
  Entangler ent = angle > 0.0 ? make_entangler(d, seed, angle)
                              : Entangler{RealMatrix::Identity(d, d), seed};
  TwinReport report = discriminate_representations(gen, ent);
  return "{\"complexity_z\": " + format_double(report.trip_z.complexity) +
         ", \"complexity_zprime\": " + format_double(report.trip_zprime.complexity) +
         ", \"gap\": " + format_double(report.complexity_gap) +
         ", \"decoder_gap\": " + format_double(report.decoder_gap) +
         ", \"verdict\": \"" + to_string(report.verdict) + "\"}";
}

}  // namespace detail

inline RunRecord run_scenario(const Scenario& scenario, const std::string& out_dir = ".",
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
  auto start = std::chrono::steady_clock::now();
  RunRecord record;
  record.scenario_digest = fnv1a64(scenario.raw_text);

  std::string csv;
  std::string csv_key;
  bool converged = true;
  if (scenario.command == "evolve") {
    record.result_json = detail::run_evolve(scenario.doc, &csv);
    csv_key = "trajectory_csv";
  } else if (scenario.command == "hdist") {
    record.result_json = detail::run_hdist(scenario.doc);
  } else if (scenario.command == "dyndist") {
    record.result_json = detail::run_dyndist(scenario.doc, seed_override, &converged);
  } else if (scenario.command == "lift") {
    record.result_json = detail::run_lift(scenario.doc, &csv);
    csv_key = "lift_csv";
  } else if (scenario.command == "gauge") {
    record.result_json = detail::run_gauge(scenario.doc, seed_override);
  } else if (scenario.command == "twin") {
    record.result_json = detail::run_twin(scenario.doc, seed_override);
  } else {
    throw scenario_error("$.command: unknown command '" + scenario.command + "'");
  }

  const auto& output = scenario.doc["output"];
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  char digest_hex[17];
  std::snprintf(digest_hex, sizeof(digest_hex), "%016llx",
                static_cast<unsigned long long>(record.scenario_digest));
  std::string file_body = "{\"digest\": \"" + std::string(digest_hex) + "\", \"version\": \"" +
                          record.version + "\", \"result\": " + record.result_json + "}\n";

  record.result_path = (dir / output["result"].get<std::string>()).string();
  {
    std::ofstream os(record.result_path, std::ios::binary);
    if (!os || !(os << file_body)) throw io_error("cannot write " + record.result_path);
  }
  if (!csv_key.empty() && output.contains(csv_key)) {
    std::string csv_path = (dir / output[csv_key].get<std::string>()).string();
    std::ofstream os(csv_path, std::ios::binary);
    if (!os || !(os << csv)) throw io_error("cannot write " + csv_path);
  }

  record.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  record.exit_code = converged ? 0 : 1;
  return record;
}

// One runnable skeleton per command; every module operation is reachable
// from at least one of these.
inline std::vector<std::pair<std::string, std::string>> scenario_templates() {
  const std::string sx_half_pi =
      "{\"rows\": 2, \"cols\": 2, \"data\": [[0, 0], [1.5707963267948966, 0], "
      "[1.5707963267948966, 0], [0, 0]]}";
  const std::string rho_mixed =
      "{\"rows\": 2, \"cols\": 2, \"data\": [[0.75, 0], [0, 0], [0, 0], [0.25, 0]]}";
  const std::string rho_mixed_swapped =
      "{\"rows\": 2, \"cols\": 2, \"data\": [[0.25, 0], [0, 0], [0, 0], [0.75, 0]]}";
  const std::string rho_deg3 =
      "{\"rows\": 3, \"cols\": 3, \"data\": [[0.5, 0], [0, 0], [0, 0], [0, 0], [0.25, 0], "
      "[0, 0], [0, 0], [0, 0], [0.25, 0]]}";
  const std::string seg = "[{\"generator\": " + sx_half_pi + ", \"duration\": 1}]";

  std::vector<std::pair<std::string, std::string>> templates;
  templates.emplace_back("evolve",
                         "{\"command\": \"evolve\", \"rho0\": " + rho_mixed +
                             ", \"path\": " + seg +
                             ", \"samples_per_segment\": 16, \"output\": {\"result\": "
                             "\"evolve_result.json\", \"trajectory_csv\": \"trajectory.csv\"}}");
  templates.emplace_back("hdist",
                         "{\"command\": \"hdist\", \"rho0\": " + rho_mixed +
                             ", \"path\": " + seg +
                             ", \"quadrature_points\": 32, \"output\": {\"result\": "
                             "\"hdist_result.json\"}}");
  templates.emplace_back(
      "dyndist",
      "{\"command\": \"dyndist\", \"rho0\": " + rho_mixed + ", \"rho1\": " + rho_mixed_swapped +
          ", \"duration\": 1, \"segments\": 4, \"optimizer\": {\"restarts\": 4, \"seed\": 1, "
          "\"max_iterations\": 200}, \"output\": {\"result\": \"dyndist_result.json\"}}");
  templates.emplace_back("lift",
                         "{\"command\": \"lift\", \"rho0\": " + rho_mixed +
                             ", \"path\": " + seg +
                             ", \"samples_per_segment\": 64, \"steps_per_sample\": 8, "
                             "\"output\": {\"result\": \"lift_result.json\", \"lift_csv\": "
                             "\"lift.csv\"}}");
  templates.emplace_back("gauge",
                         "{\"command\": \"gauge\", \"rho0\": " + rho_deg3 +
                             ", \"seed\": 7, \"n_samples\": 25, \"output\": {\"result\": "
                             "\"gauge_result.json\"}}");
  templates.emplace_back("twin",
                         "{\"command\": \"twin\", \"d\": 2, \"seed\": 3, \"angle_scale\": "
                         "0.78539816339744828, \"output\": {\"result\": \"twin_result.json\"}}");
  return templates;
}

}  // namespace qgauge
