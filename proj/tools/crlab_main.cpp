#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "crlab/errors.hpp"
#include "crlab/experiment.hpp"

using crlab::cli::Json;

namespace {

void emit_error(const std::string& kind, const std::string& message) {
  Json rec = {{"error", kind}, {"message", message}};
  std::cerr << rec.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cognitive-radio stopping-rule solvers and uplink scheduling simulator"};
  std::string config_path, preset_name, out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool quiet = false, list = false;
  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--preset", preset_name, "Named preset (see --list-presets)");
  app.add_option("--seed", seed, "Replace the seed list with a single seed");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--jobs", jobs, "Parallel sweep width (CRLAB_THREADS overrides)")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress progress lines");
  app.add_flag("--list-presets", list, "Print preset names and exit");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& n : crlab::cli::preset_names()) std::cout << n << "\n";
    return 0;
  }
  if (config_path.empty() && preset_name.empty()) {
    emit_error("usage", "one of --config or --preset is required");
    return 2;
  }

  crlab::cli::ExperimentConfig cfg;
  try {
    Json doc = Json::object();
    std::string source = "--preset";
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      source = config_path;
      try {
        doc = Json::parse(buf.str());
      } catch (const Json::parse_error&) {
        // Re-parse through the loader for line/column diagnostics.
        crlab::cli::load_config_text(buf.str(), source);
      }
    }
    if (!preset_name.empty() && !(doc.is_object() && doc.contains("preset"))) doc["preset"] = preset_name;
    if (seed) doc["seeds"] = Json::array({*seed});
    if (!out_dir.empty()) doc["output_dir"] = out_dir;
    cfg = crlab::cli::from_document(std::move(doc));
  } catch (const crlab::Error& e) {
    emit_error("config", e.what());
    return 2;
  }

  try {
    auto report = crlab::cli::run_experiment(cfg, {jobs, quiet});
    if (!quiet)
      std::printf("%zu points, %d failed, config %s -> %s\n", report.points.size(), report.failures(),
                  report.hash.c_str(), cfg.output_dir.c_str());
    if (report.failures() > 0) {
      emit_error("run", std::to_string(report.failures()) + " point(s) failed; see " + cfg.output_dir +
                            "/manifest.json");
      return 1;
    }
  } catch (const std::exception& e) {
    emit_error("run", e.what());
    return 1;
  }
  return 0;
}
