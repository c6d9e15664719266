// finsler <check|curvature|geodesic|distance|bounds|schwarz|replay> --config FILE [--out DIR] [--tolerance X]
//
// Exit codes: 0 all expectations met, 1 hard failure or unmet expectation, 2 usage or config error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "finsler/app/commands.hpp"
#include "finsler/app/yaml_config.hpp"

namespace fs = std::filesystem;
using finsler::Json;

namespace {

int run_replay(const fs::path& file, const fs::path& out, double tolerance) {
  const Json stored = finsler::app::read_json_file(file);
  const auto r = finsler::app::replay(stored, tolerance);
  const auto dir = out / "replay" / r.id;
  fs::create_directories(dir);
  Json report = {{"schema", finsler::app::kSchema}, {"command", "replay"}, {"id", r.id}, {"source", file.string()}};
  report["result"] = r.to_json();
  report["passed"] = r.passed;
  report["metadata"] = finsler::app::metadata();
  finsler::app::write_file(dir / "report.json", report.dump(2) + "\n");
  std::cout << (r.passed ? "PASS" : "FAIL") << "  replay " << r.command << "/" << r.id << " ("
            << (r.bitwise ? "bitwise" : "tolerance") << ")\n";
  for (const auto& d : r.differences) std::cout << "  " << d << "\n";
  return r.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical real and complex Finsler geometry"};
  std::string command, config, out = "out";
  std::optional<double> tolerance;
  app.add_option("command", command, "check | curvature | geodesic | distance | bounds | schwarz | replay")
      ->required()
      ->check(CLI::IsMember(finsler::app::commands()));
  app.add_option("--config,-c", config, "YAML or JSON config; for replay, a report.json")->required();
  app.add_option("--out,-o", out, "output directory")->capture_default_str();
  app.add_option("--tolerance", tolerance, "pass/fail tolerance; for replay, numeric comparison tolerance")
      ->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (command == "replay") return run_replay(config, out, tolerance.value_or(0.0));
    Json raw = finsler::app::load_config(config);
    if (tolerance && raw.is_object()) raw["tolerance"] = *tolerance;
    const Json cfg = finsler::app::effective_config(raw);
    const auto result = finsler::app::run(command, cfg);
    const auto paths = finsler::app::write_reports(result, out);
    for (std::size_t i = 0; i < result.items.size(); ++i) {
      const auto& item = result.items[i];
      std::cout << (item.passed ? "PASS" : "FAIL") << "  " << command << "/" << item.id << "  " << paths[i].string()
                << "\n";
      for (const auto& f : item.failures) std::cout << "  " << f << "\n";
    }
    return result.passed() ? 0 : 1;
  } catch (const finsler::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
