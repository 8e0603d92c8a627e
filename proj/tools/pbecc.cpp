#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pbecc/pbecc.hpp"

namespace fs = std::filesystem;
using namespace pbecc::harness;

namespace {

fs::path resolve_scenario(const std::string& arg, const fs::path& dir) {
  if (fs::exists(arg)) return arg;
  for (const char* ext : {".yaml", ".yml"}) {
    const fs::path p = dir / (arg + ext);
    if (fs::exists(p)) return p;
  }
  throw ScenarioError(0, arg, "no such scenario file or bundled scenario");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PBE-CC discrete-event simulator"};
  app.require_subcommand(1);
  std::string scenario_dir = PBECC_SCENARIO_DIR;
  app.add_option("--scenario-dir", scenario_dir, "Directory holding the bundled scenarios");

  auto* run = app.add_subcommand("run", "Run a scenario and write traces");
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  run->add_option("scenario", scenario, "Scenario file or bundled scenario name")->required();
  run->add_option("--seed", seed, "RNG seed (defaults to the scenario's seed)");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* rep = app.add_subcommand("report", "Recompute metrics from a trace directory");
  std::string trace_dir;
  rep->add_option("trace-dir", trace_dir, "Directory written by `run`")->required();

  auto* list = app.add_subcommand("list-scenarios", "List the bundled scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Scenario s = load_scenario(resolve_scenario(scenario, scenario_dir));
      const SimulationResult r = run_scenario(s, seed);
      const Json metrics = write_run(out_dir, r);
      std::cout << dump(metrics);
    } else if (*rep) {
      std::cout << dump(report(trace_dir));
    } else if (*list) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(scenario_dir)) {
        if (e.path().extension() == ".yaml") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const fs::path& p : files) {
        const Scenario s = load_scenario(p);
        std::cout << p.stem().string() << "\t" << s.description << "\n";
      }
    }
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const TraceError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
