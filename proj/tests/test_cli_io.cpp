#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qgauge/scenario.hpp"
#include "test_helpers.hpp"

using namespace qgauge;
using namespace qgauge::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("qgauge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kValidEvolve = R"({"command": "evolve",
  "rho0": {"rows": 2, "cols": 2, "data": [[0.75, 0], [0, 0], [0, 0], [0.25, 0]]},
  "path": [{"generator": {"rows": 2, "cols": 2,
            "data": [[0, 0], [1.5707963267948966, 0], [1.5707963267948966, 0], [0, 0]]},
            "duration": 1}],
  "samples_per_segment": 8,
  "output": {"result": "r.json"}})";

}  // namespace

TEST_CASE("matrix JSON round trip at full precision") {
  Matrix m = random_hermitian(3, 99).matrix() +
             Complex(0, 1) * random_hermitian(3, 100).matrix();
  std::string encoded = matrix_to_json(m);
  Matrix decoded = matrix_from_json(nlohmann::json::parse(encoded), "$");
  CHECK(max_abs(m - decoded) == 0.0);
}

TEST_CASE("matrix JSON rejects malformed documents") {
  auto parse = [](const std::string& text) {
    return matrix_from_json(nlohmann::json::parse(text), "$.m");
  };
  CHECK_THROWS_WITH(parse(R"({"rows": 2, "cols": 2, "data": [[1, 0]]})"),
                    Catch::Matchers::ContainsSubstring("$.m.data"));
  CHECK_THROWS_WITH(parse(R"({"rows": 1, "cols": 1, "data": [[1, 0]], "extra": 1})"),
                    Catch::Matchers::ContainsSubstring("$.m.extra"));
  CHECK_THROWS_AS(parse(R"({"rows": 1, "cols": 1, "data": [[1]]})"), serialization_error);
}

TEST_CASE("parse_scenario accepts a valid document") {
  Scenario s = parse_scenario(kValidEvolve);
  CHECK(s.command == "evolve");
}

TEST_CASE("parse_scenario rejects unknown commands by name") {
  CHECK_THROWS_WITH(parse_scenario(R"({"command": "warp"})"),
                    Catch::Matchers::ContainsSubstring("warp"));
}

TEST_CASE("parse_scenario names the violated invariant") {
  std::string bad = kValidEvolve;
  bad.replace(bad.find("0.75"), 4, "0.65");  // trace 0.9
  CHECK_THROWS_WITH(parse_scenario(bad), Catch::Matchers::ContainsSubstring("trace"));
}

TEST_CASE("parse_scenario rejects unknown fields with the key path") {
  std::string extra = kValidEvolve;
  extra.insert(extra.find("\"rho0\""), "\"mystery\": 1, ");
  CHECK_THROWS_WITH(parse_scenario(extra), Catch::Matchers::ContainsSubstring("$.mystery"));
}

TEST_CASE("parse_scenario rejects malformed JSON") {
  CHECK_THROWS_AS(parse_scenario("{nope"), scenario_error);
}

TEST_CASE("every template parses, runs, and is deterministic") {
  for (const auto& [name, body] : scenario_templates()) {
    INFO(name);
    Scenario scenario = parse_scenario(body);
    fs::path dir_a = fresh_dir(name + "_a");
    fs::path dir_b = fresh_dir(name + "_b");
    RunRecord a = run_scenario(scenario, dir_a.string());
    RunRecord b = run_scenario(scenario, dir_b.string());
    REQUIRE(a.exit_code == 0);
    REQUIRE(slurp(a.result_path) == slurp(b.result_path));
    REQUIRE(a.result_json == b.result_json);
  }
}

TEST_CASE("dyndist template converges and reports the expected fields") {
  const auto templates = scenario_templates();
  const std::string* body = nullptr;
  for (const auto& [name, text] : templates)
    if (name == "dyndist") body = &text;
  REQUIRE(body != nullptr);
  fs::path dir = fresh_dir("dyndist_fields");
  RunRecord record = run_scenario(parse_scenario(*body), dir.string());
  nlohmann::json result = nlohmann::json::parse(record.result_json);
  CHECK(result["converged"].get<bool>());
  CHECK(result["distance"].get<double>() <= M_PI / 2.0 + 2e-2);
  CHECK(result["endpoint_defect"].get<double>() <= 1e-6);
  CHECK(result.contains("path"));
  CHECK(result.contains("restart_index"));
}

TEST_CASE("trajectory CSV round trips at 17 significant digits") {
  DensityOperator rho0 = diag_density({0.75, 0.25});
  auto path = single_segment((M_PI / 2.0) * pauli_x(), 1.0);
  StateTrajectory traj = evolve_von_neumann(rho0, path, 4);

  std::ostringstream os;
  write_trajectory_csv(traj, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,re_00,im_00,re_01,im_01,re_10,im_10,re_11,im_11");

  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    std::string line;
    REQUIRE(std::getline(is, line));
    std::istringstream fields(line);
    std::string field;
    std::getline(fields, field, ',');
    REQUIRE(std::stod(field) == traj.times[s]);
    for (Eigen::Index i = 0; i < 2; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        std::getline(fields, field, ',');
        REQUIRE(std::stod(field) == traj.states[s].matrix()(i, j).real());
        std::getline(fields, field, ',');
        REQUIRE(std::stod(field) == traj.states[s].matrix()(i, j).imag());
      }
    }
  }
}

TEST_CASE("degenerate CSV dumps are header-only") {
  StateTrajectory empty;
  std::ostringstream os;
  write_trajectory_csv(empty, os);
  CHECK(os.str() == "t\n");

  std::ostringstream lift_os;
  write_lift_csv({}, {}, lift_os);
  CHECK(lift_os.str() == "t\n");
}

TEST_CASE("seed override changes seeded commands deterministically") {
  const auto templates = scenario_templates();
  const std::string* body = nullptr;
  for (const auto& [name, text] : templates)
    if (name == "gauge") body = &text;
  REQUIRE(body != nullptr);
  Scenario scenario = parse_scenario(*body);
  fs::path dir = fresh_dir("gauge_seed");
  RunRecord a = run_scenario(scenario, dir.string(), 123u);
  RunRecord b = run_scenario(scenario, dir.string(), 123u);
  CHECK(a.result_json == b.result_json);
}

TEST_CASE("validation failures happen before any output is written") {
  std::string bad = kValidEvolve;
  bad.replace(bad.find("0.75"), 4, "0.65");
  fs::path dir = fresh_dir("failfast");
  CHECK_THROWS_AS(parse_scenario(bad), scenario_error);
  CHECK(fs::is_empty(dir));
}
