#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qgauge/scenario.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw qgauge::io_error("cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qgauge: density-operator evolution, dynamic distances, purification lifts, "
               "gauge structure and twin-representation reports"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::string out_dir = ".";
  std::optional<std::int64_t> seed_override;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_file, "scenario JSON file")->required();
  run->add_option("--seed", seed_override, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory (default: current)");
  run->add_flag("--quiet", quiet, "suppress the run summary");

  auto* validate = app.add_subcommand("validate", "validate a scenario file without running it");
  validate->add_option("scenario", scenario_file, "scenario JSON file")->required();

  auto* templates = app.add_subcommand("templates", "print the six scenario skeletons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (templates->parsed()) {
      for (const auto& [name, body] : qgauge::scenario_templates())
        std::cout << "# " << name << "\n" << body << "\n";
      return 0;
    }

    qgauge::Scenario scenario = qgauge::parse_scenario(read_file(scenario_file));
    if (validate->parsed()) {
      std::cout << "ok: " << scenario.command << "\n";
      return 0;
    }

    std::optional<std::uint64_t> seed;
    if (seed_override) seed = static_cast<std::uint64_t>(*seed_override);
    qgauge::RunRecord record = qgauge::run_scenario(scenario, out_dir, seed);
    if (!quiet) {
      std::fprintf(stderr, "command=%s digest=%016llx version=%s wall_time=%.3fs result=%s\n",
                   scenario.command.c_str(),
                   static_cast<unsigned long long>(record.scenario_digest),
                   record.version.c_str(), record.wall_time_s, record.result_path.c_str());
      if (record.exit_code == 1) std::fprintf(stderr, "optimizer did not converge\n");
    }
    return record.exit_code;
  } catch (const qgauge::scenario_error& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const qgauge::io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
